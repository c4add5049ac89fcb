"""Independent reference computations used across the test suite.

Everything here is deliberately derived by a different route than the
library code: reduced-coordinate dynamics instead of the KKT solve, dense
KKT systems for least-norm problems, finite differences, quadrature, and
Monte Carlo.
"""

from __future__ import annotations

import numpy as np

from omnisafe.base_model import (BaseParams, RollerFrictionParams, SlopeSpec,
                                 base_jacobians, external_jacobian,
                                 gravity_vector, roller_friction)


def reduced_mass_matrix(params: BaseParams) -> np.ndarray:
    """3-DOF mass matrix after eliminating wheels and rollers analytically.

    J_cw^T J_cw and J_cr^T J_cr are constant for 120-degree wheel spacing,
    so the reduced inertia is configuration independent.
    """
    iw = params.wheel_inertia / params.wheel_radius ** 2
    ir = params.roller_inertia / params.roller_radius ** 2
    m = params.mass + 1.5 * iw + 1.5 * ir
    yaw = params.body_inertia + 3.0 * params.wheel_center_radius ** 2 * iw
    return np.diag([m, m, yaw])


def reduced_gyroscopic(params: BaseParams, thetad: float) -> np.ndarray:
    """Velocity coupling of the nonholonomic reduction.

    The d'Alembert projection S^T A qdd with S = [I; J_cw; J_cr] leaves
    (I_w J_cw^T Jd_cw + I_r J_cr^T Jd_cr) xd; for 120-degree wheel spacing
    both products collapse to (3/2) thetad [[0,1,0],[-1,0,0],[0,0,0]]
    scaled by the reflected inertias. The force is workless.
    """
    k = 1.5 * thetad * (params.wheel_inertia / params.wheel_radius ** 2
                        + params.roller_inertia / params.roller_radius ** 2)
    return k * np.array([[0.0, 1.0, 0.0],
                         [-1.0, 0.0, 0.0],
                         [0.0, 0.0, 0.0]])


def reduced_forward_dynamics(params: BaseParams,
                             friction: RollerFrictionParams | None,
                             slope: SlopeSpec | None,
                             pose: np.ndarray, pose_rate: np.ndarray,
                             wheel_torques: np.ndarray,
                             ext_wrench: np.ndarray | None = None,
                             ext_point: np.ndarray | None = None) -> np.ndarray:
    """Body acceleration from the constraint-eliminated 3-DOF model."""
    jac = base_jacobians(params, pose[2])
    rhs = jac.J_cw.T @ np.asarray(wheel_torques, dtype=float)
    rhs -= reduced_gyroscopic(params, pose_rate[2]) @ pose_rate
    if friction is not None:
        roller_rates = jac.J_cr @ pose_rate
        rhs -= jac.J_cr.T @ roller_friction(friction, roller_rates)
    if slope is not None:
        rhs -= gravity_vector(params, slope)[:3]
    if ext_wrench is not None:
        point = pose[:2] if ext_point is None else np.asarray(ext_point)
        rhs += external_jacobian(pose, point).T @ np.asarray(ext_wrench)
    return np.linalg.solve(reduced_mass_matrix(params), rhs)


def min_weighted_norm(W: np.ndarray, C: np.ndarray, b: np.ndarray) -> np.ndarray:
    """argmin x^T W x subject to C x = b, by a dense KKT solve."""
    n, k = W.shape[0], C.shape[0]
    kkt = np.zeros((n + k, n + k))
    kkt[:n, :n] = 2.0 * W
    kkt[:n, n:] = C.T
    kkt[n:, :n] = C
    rhs = np.concatenate([np.zeros(n), b])
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return sol[:n]


def finite_difference(fn, t: float, h: float = 1e-6):
    """Central difference of a vector/matrix-valued function of time."""
    return (fn(t + h) - fn(t - h)) / (2.0 * h)


def gaussian_mc_ball_probability(rng: np.random.Generator, mu_i, cov_i,
                                 mu_j, cov_j, radius: float,
                                 n_samples: int) -> tuple[float, float]:
    """Monte Carlo estimate (p_hat, stderr) of two centers overlapping."""
    mu_i = np.atleast_1d(np.asarray(mu_i, dtype=float))
    mu_j = np.atleast_1d(np.asarray(mu_j, dtype=float))
    xi = rng.multivariate_normal(mu_i, np.atleast_2d(cov_i), size=n_samples)
    xj = rng.multivariate_normal(mu_j, np.atleast_2d(cov_j), size=n_samples)
    hits = np.linalg.norm(xi - xj, axis=1) <= radius
    p = float(np.mean(hits))
    stderr = float(np.sqrt(max(p * (1.0 - p), 1e-12) / n_samples))
    return p, stderr


def quadrature_cp_1d(mu: float, var: float, omega: float,
                     n: int = 200001) -> float:
    """Trapezoid integration of the convolved normal over [-omega, omega]."""
    x = np.linspace(-omega, omega, n)
    pdf = np.exp(-0.5 * (x - mu) ** 2 / var) / np.sqrt(2.0 * np.pi * var)
    return float(np.trapezoid(pdf, x))


def replay_trigger_tick(scenario) -> int | None:
    """Plainly coded replay of the risk pipeline on the same noise stream.

    Reimplements the Kalman filter, the polar-grid overlap integral, and
    the conditional-free recursion with straightforward formulas, consuming
    exactly the measurement draws the simulator makes, and returns the
    first tick whose p_ac at the time-threshold index reaches eta.
    """
    from omnisafe.scenario import consumer_rng

    noise = scenario.noise
    dt = noise.dt
    A = np.eye(4)
    A[0, 2] = A[1, 3] = dt
    Q = np.diag([noise.sigma_d[0], noise.sigma_d[1],
                 noise.sigma_a[0] * dt, noise.sigma_a[1] * dt])
    C = np.zeros((2, 4))
    C[0, 0] = C[1, 1] = 1.0
    R = np.diag(noise.sigma_s)

    def polar_cp(mu, cov, omega):
        """Simpson integration of the convolved normal over the disc."""
        scale = np.sqrt(2.0 * max(cov[0, 0], cov[1, 1]))
        if np.linalg.norm(mu) - 10.0 * scale > omega:
            return 0.0
        r = np.linspace(0.0, omega, 61)
        phi = np.linspace(0.0, 2.0 * np.pi, 91)
        rr, pp = np.meshgrid(r, phi, indexing="ij")
        pts = np.stack([rr * np.cos(pp), rr * np.sin(pp)], axis=-1)
        diff = pts - mu
        prec = np.linalg.inv(cov)
        quad = np.einsum("...i,ij,...j->...", diff, prec, diff)
        pdf = np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(np.linalg.det(cov)))
        integrand = pdf * rr
        from scipy.integrate import simpson
        return float(min(max(simpson(simpson(integrand, x=phi, axis=1),
                                     x=r), 0.0), 1.0))

    def free_moments(mu_i, cov_i, mu_j, cov_j, omega, p):
        if p <= 1e-15:
            return mu_i, cov_i
        like_cov = cov_j + omega ** 2 / 4.0 * np.eye(2)
        prec = np.linalg.inv(cov_i) + np.linalg.inv(like_cov)
        cov_x = np.linalg.inv(prec)
        mu_x = cov_x @ (np.linalg.solve(cov_i, mu_i)
                        + np.linalg.solve(like_cov, mu_j))
        q = 1.0 - p
        mean = (mu_i - p * mu_x) / q
        m2 = (cov_i + np.outer(mu_i, mu_i)
              - p * (cov_x + np.outer(mu_x, mu_x))) / q
        cov = m2 - np.outer(mean, mean)
        w, v = np.linalg.eigh(0.5 * (cov + cov.T))
        return mean, (v * np.maximum(w, 0.0)) @ v.T

    rng = consumer_rng(scenario.seed, "objects")
    specs = scenario.objects
    truths, means, covs = [], [], []
    for spec in specs:
        truths.append(np.array([*spec.position, *spec.velocity]))
        means.append(np.array([*spec.position, 0.0, 0.0]))
        covs.append(np.diag([0.25, 0.25, 1.0, 1.0]))

    config = scenario.prediction
    horizon = config.horizon
    thr_idx = min(int(round(config.time_threshold / dt)), horizon - 1)
    omega = specs[0].radius + specs[1].radius
    base_steps = max(1, int(round(dt / scenario.step)))
    n_ticks = len(range(0, int(round(scenario.duration / scenario.step)),
                        base_steps))
    for tick in range(n_ticks):
        for k, spec in enumerate(specs):
            truths[k] = A @ truths[k]
            y = truths[k][:2] + rng.normal(scale=spec.sensor_sigma, size=2)
            m_pred = A @ means[k]
            p_pred = A @ covs[k] @ A.T + Q
            S = C @ p_pred @ C.T + R
            K = p_pred @ C.T @ np.linalg.inv(S)
            means[k] = m_pred + K @ (y - C @ m_pred)
            covs[k] = (np.eye(4) - K @ C) @ p_pred
        # horizon recursion for the (0, 1) pair
        m = [means[0].copy(), means[1].copy()]
        P = [covs[0].copy(), covs[1].copy()]
        p_ac = 0.0
        series = np.zeros(horizon)
        for step in range(horizon):
            if step > 0:
                for k in range(2):
                    m[k] = A @ m[k]
                    P[k] = A @ P[k] @ A.T + Q
            p_ic = polar_cp(m[0][:2] - m[1][:2], P[0][:2, :2] + P[1][:2, :2],
                            omega)
            p_ac = p_ic if step == 0 else p_ac + (1.0 - p_ac) * p_ic
            series[step] = p_ac
            if p_ic < 1.0:
                f0, c0 = free_moments(m[0][:2], P[0][:2, :2], m[1][:2],
                                      P[1][:2, :2], omega, p_ic)
                f1, c1 = free_moments(m[1][:2], P[1][:2, :2], m[0][:2],
                                      P[0][:2, :2], omega, p_ic)
                m[0][:2], P[0][:2, :2] = f0, c0
                m[1][:2], P[1][:2, :2] = f1, c1
        if series[thr_idx] >= config.eta:
            return tick
    return None


def quadrature_free_moments_1d(mu_i, var_i, mu_j, var_j, omega,
                               span: float = 12.0, n: int = 400001):
    """Exact collision-free conditional mean/variance by dense quadrature."""
    s = np.sqrt(var_i)
    x = np.linspace(mu_i - span * s, mu_i + span * s, n)
    pdf_i = np.exp(-0.5 * (x - mu_i) ** 2 / var_i) / np.sqrt(2 * np.pi * var_i)
    sj = np.sqrt(var_j)
    from scipy.special import ndtr
    p_coll_given_x = ndtr((x + omega - mu_j) / sj) - ndtr((x - omega - mu_j) / sj)
    free = pdf_i * (1.0 - p_coll_given_x)
    mass = np.trapezoid(free, x)
    mean = np.trapezoid(x * free, x) / mass
    var = np.trapezoid((x - mean) ** 2 * free, x) / mass
    return mean, var, 1.0 - mass
