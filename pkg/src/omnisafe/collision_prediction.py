"""Object tracking and collision-risk forecasting.

A constant-velocity Kalman filter tracks each object; beliefs are
propagated over a prediction horizon and pairwise collision probabilities
are accumulated recursively through collision-free conditional beliefs.
Instantaneous probabilities integrate the convolved Gaussian over the
Minkowski ball of the two radii: closed erf form in 1-D, adaptive
quadrature in 2-D/3-D.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import erf, ndtr

#: relative tolerance of the reference ball-integral quadrature
QUAD_RTOL = 1e-6


@dataclass(frozen=True)
class NoiseParams:
    """Kalman noise model: sampling time and diagonal covariances.

    ``sigma_d`` is the velocity-disturbance covariance [m^2], ``sigma_a``
    the acceleration covariance [(m/s^2)^2], ``sigma_s`` the position
    sensor covariance [m^2]; scalars are promoted to isotropic diagonals.
    The process covariance follows the published form
    diag(sigma_d, sigma_a * dt).
    """

    dt: float = 0.033
    sigma_d: float | np.ndarray = 0.01
    sigma_a: float | np.ndarray = 1.5
    sigma_s: float | np.ndarray = 0.01
    dims: int = 2

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        for name in ("sigma_d", "sigma_a", "sigma_s"):
            val = np.asarray(getattr(self, name), dtype=float)
            if val.ndim == 0:
                val = np.full(self.dims, float(val))
            if val.shape != (self.dims,) or np.any(val < 0.0):
                raise ValueError(f"{name} must be a PSD diagonal")
            object.__setattr__(self, name, val)

    @property
    def transition(self) -> np.ndarray:
        """A_p = [[I, dt I], [0, I]]."""
        d = self.dims
        A = np.eye(2 * d)
        A[:d, d:] = self.dt * np.eye(d)
        return A

    @property
    def observation(self) -> np.ndarray:
        """C_p = [I, 0]."""
        d = self.dims
        return np.hstack([np.eye(d), np.zeros((d, d))])

    @property
    def process_cov(self) -> np.ndarray:
        return np.diag(np.concatenate([self.sigma_d, self.sigma_a * self.dt]))

    @property
    def sensor_cov(self) -> np.ndarray:
        return np.diag(self.sigma_s)


@dataclass(frozen=True)
class Gaussian:
    """Plain mean/covariance pair."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(
            np.asarray(self.mean, dtype=float)))
        object.__setattr__(self, "cov", np.atleast_2d(
            np.asarray(self.cov, dtype=float)))
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("covariance shape does not match the mean")
        if not np.allclose(self.cov, self.cov.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        if np.any(np.linalg.eigvalsh(self.cov) < -1e-10):
            raise ValueError("covariance must be positive semidefinite")


def _gaussian(mean: np.ndarray, cov: np.ndarray) -> Gaussian:
    """Internal constructor skipping validation on already-clean arrays."""
    g = object.__new__(Gaussian)
    object.__setattr__(g, "mean", mean)
    object.__setattr__(g, "cov", cov)
    return g


@dataclass(frozen=True)
class GaussianBelief:
    """Position-velocity belief (stacked mean, 2N_d x 2N_d covariance)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))
        n = self.mean.size
        if n % 2 != 0 or self.cov.shape != (n, n):
            raise ValueError("belief must stack position and velocity")
        if not np.allclose(self.cov, self.cov.T, atol=1e-9):
            raise ValueError("covariance must be symmetric")

    @property
    def dims(self) -> int:
        return self.mean.size // 2

    @property
    def position(self) -> Gaussian:
        d = self.dims
        return _gaussian(self.mean[:d], self.cov[:d, :d])

    @property
    def velocity(self) -> Gaussian:
        d = self.dims
        return _gaussian(self.mean[d:], self.cov[d:, d:])


def _belief(mean: np.ndarray, cov: np.ndarray) -> GaussianBelief:
    """Internal constructor skipping validation on already-clean arrays."""
    b = object.__new__(GaussianBelief)
    object.__setattr__(b, "mean", mean)
    object.__setattr__(b, "cov", cov)
    return b


def kf_step(belief: GaussianBelief, measurement: np.ndarray,
            noise: NoiseParams) -> GaussianBelief:
    """One Kalman predict/update cycle for a position measurement."""
    A, C = noise.transition, noise.observation
    mean_pred = A @ belief.mean
    cov_pred = A @ belief.cov @ A.T + noise.process_cov
    innovation_cov = C @ cov_pred @ C.T + noise.sensor_cov
    gain = cov_pred @ C.T @ np.linalg.inv(innovation_cov)
    y = np.asarray(measurement, dtype=float)
    mean = mean_pred + gain @ (y - C @ mean_pred)
    cov = (np.eye(len(mean)) - gain @ C) @ cov_pred
    return GaussianBelief(mean=mean, cov=0.5 * (cov + cov.T))


def propagate(belief: GaussianBelief, steps: int,
              noise: NoiseParams) -> GaussianBelief:
    """Belief after ``steps`` open-loop transitions."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    A, Q = noise.transition, noise.process_cov
    mean, cov = belief.mean.copy(), belief.cov.copy()
    for _ in range(steps):
        mean = A @ mean
        cov = A @ cov @ A.T + Q
    return GaussianBelief(mean=mean, cov=0.5 * (cov + cov.T))


def _propagate_once(belief: GaussianBelief, A: np.ndarray,
                    Q: np.ndarray) -> GaussianBelief:
    mean = A @ belief.mean
    cov = A @ belief.cov @ A.T + Q
    return _belief(mean, 0.5 * (cov + cov.T))


def ball_second_moment(radius: float, dims: int) -> float:
    """Scalar second moment of the uniform ball: omega^2 / (dims + 2)."""
    return radius ** 2 / (dims + 2)


def instantaneous_cp(g_i: Gaussian, g_j: Gaussian, radius_sum: float,
                     method: str = "reference") -> float:
    """Probability the two uncertain centers are within ``radius_sum``.

    Integrates N(mu_i - mu_j, Sigma_i + Sigma_j) over the origin-centered
    ball. The 1-D case is the closed erf form. In 2-D and 3-D,
    "reference" uses nested adaptive quadrature over the principal axes
    and "fast" a fixed Gauss-Legendre rule that matches the reference to
    better than 1e-4 (the accuracy contract the horizon recursion relies
    on).
    """
    if radius_sum <= 0.0:
        raise ValueError("combined radius must be positive")
    if method not in ("reference", "fast"):
        raise ValueError("method must be 'reference' or 'fast'")
    mu = g_i.mean - g_j.mean
    cov = g_i.cov + g_j.cov
    d = mu.size
    if d == 1:
        return _cp_1d(float(mu[0]), float(cov[0, 0]), radius_sum)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.maximum(evals, 0.0)
    m = evecs.T @ mu
    if d == 2:
        return _cp_2d(m, evals, radius_sum) if method == "reference" \
            else _cp_2d_fast(m, evals, radius_sum)
    if d == 3:
        return _cp_3d(m, evals, radius_sum) if method == "reference" \
            else _cp_3d_fast(m, evals, radius_sum)
    raise ValueError("only 1-, 2- and 3-D objects are supported")


def _cp_1d(mu: float, var: float, omega: float) -> float:
    if var <= 0.0:
        return 1.0 if abs(mu) <= omega else 0.0
    s = np.sqrt(2.0 * var)
    gap = abs(mu)
    return float(0.5 * (erf((gap + omega) / s) - erf((gap - omega) / s)))


def _axis_slab(mu: float, var: float, half_width: float) -> float:
    """P(|x - 0| <= half_width) for x ~ N(mu, var) along one axis."""
    if var <= 0.0:
        return 1.0 if abs(mu) <= half_width else 0.0
    s = np.sqrt(var)
    return ndtr((half_width - mu) / s) - ndtr((-half_width - mu) / s)


_TAIL = 12.0          # integration support half-width in standard deviations
_DEGENERATE = 1e-7    # variance floor scale relative to the ball radius


def _order_by_variance(mu: np.ndarray, var: np.ndarray):
    """Sort axes by descending variance so outer integrals are smooth."""
    order = np.argsort(var)[::-1]
    return mu[order], var[order]


def _cp_2d(mu: np.ndarray, var: np.ndarray, omega: float) -> float:
    mu, var = _order_by_variance(mu, var)
    var = np.maximum(var, (_DEGENERATE * omega) ** 2)
    s0 = np.sqrt(var[0])
    if s0 <= 2.0 * _DEGENERATE * omega:
        # point mass: inside or outside the ball
        return 1.0 if float(np.linalg.norm(mu)) <= omega else 0.0
    lo = max(-omega, mu[0] - _TAIL * s0)
    hi = min(omega, mu[0] + _TAIL * s0)
    if lo >= hi:
        return 0.0

    def integrand(x):
        h = np.sqrt(max(omega ** 2 - x ** 2, 0.0))
        pdf = np.exp(-0.5 * (x - mu[0]) ** 2 / var[0]) / np.sqrt(
            2.0 * np.pi * var[0])
        return pdf * _axis_slab(mu[1], var[1], h)

    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13,
                            epsrel=QUAD_RTOL * 1e-2, limit=300)
    return float(min(max(val, 0.0), 1.0))


def _cp_3d(mu: np.ndarray, var: np.ndarray, omega: float) -> float:
    mu, var = _order_by_variance(mu, var)
    var = np.maximum(var, (_DEGENERATE * omega) ** 2)
    s0, s1 = np.sqrt(var[0]), np.sqrt(var[1])
    if s0 <= 2.0 * _DEGENERATE * omega:
        return 1.0 if float(np.linalg.norm(mu)) <= omega else 0.0
    lo = max(-omega, mu[0] - _TAIL * s0)
    hi = min(omega, mu[0] + _TAIL * s0)
    if lo >= hi:
        return 0.0

    def inner(y, x):
        r2 = omega ** 2 - x ** 2 - y ** 2
        h = np.sqrt(max(r2, 0.0))
        pdf_x = np.exp(-0.5 * (x - mu[0]) ** 2 / var[0]) / np.sqrt(
            2.0 * np.pi * var[0])
        pdf_y = np.exp(-0.5 * (y - mu[1]) ** 2 / var[1]) / np.sqrt(
            2.0 * np.pi * var[1])
        return pdf_x * pdf_y * _axis_slab(mu[2], var[2], h)

    def y_lo(x):
        r = np.sqrt(max(omega ** 2 - x ** 2, 0.0))
        return max(-r, mu[1] - _TAIL * s1)

    def y_hi(x):
        r = np.sqrt(max(omega ** 2 - x ** 2, 0.0))
        return min(r, mu[1] + _TAIL * s1)

    val, _ = integrate.dblquad(inner, lo, hi, y_lo, y_hi,
                               epsabs=1e-10, epsrel=QUAD_RTOL)
    return float(min(max(val, 0.0), 1.0))


_GL_NODES_2D, _GL_WEIGHTS_2D = np.polynomial.legendre.leggauss(160)
_GL_NODES_3D, _GL_WEIGHTS_3D = np.polynomial.legendre.leggauss(72)


def _cp_2d_fast(mu: np.ndarray, var: np.ndarray, omega: float) -> float:
    mu, var = _order_by_variance(mu, var)
    var = np.maximum(var, (_DEGENERATE * omega) ** 2)
    s0 = np.sqrt(var[0])
    if s0 <= 2.0 * _DEGENERATE * omega:
        return 1.0 if float(np.linalg.norm(mu)) <= omega else 0.0
    lo = max(-omega, mu[0] - _TAIL * s0)
    hi = min(omega, mu[0] + _TAIL * s0)
    if lo >= hi:
        return 0.0
    x = 0.5 * (hi - lo) * _GL_NODES_2D + 0.5 * (hi + lo)
    h = np.sqrt(np.maximum(omega ** 2 - x ** 2, 0.0))
    pdf = np.exp(-0.5 * (x - mu[0]) ** 2 / var[0]) / np.sqrt(
        2.0 * np.pi * var[0])
    s1 = np.sqrt(var[1])
    slab = ndtr((h - mu[1]) / s1) - ndtr((-h - mu[1]) / s1)
    val = 0.5 * (hi - lo) * float(_GL_WEIGHTS_2D @ (pdf * slab))
    return float(min(max(val, 0.0), 1.0))


def _cp_3d_fast(mu: np.ndarray, var: np.ndarray, omega: float) -> float:
    mu, var = _order_by_variance(mu, var)
    var = np.maximum(var, (_DEGENERATE * omega) ** 2)
    s0, s1, s2 = np.sqrt(var)
    if s0 <= 2.0 * _DEGENERATE * omega:
        return 1.0 if float(np.linalg.norm(mu)) <= omega else 0.0
    lo = max(-omega, mu[0] - _TAIL * s0)
    hi = min(omega, mu[0] + _TAIL * s0)
    if lo >= hi:
        return 0.0
    x = 0.5 * (hi - lo) * _GL_NODES_3D + 0.5 * (hi + lo)
    pdf_x = np.exp(-0.5 * (x - mu[0]) ** 2 / var[0]) / np.sqrt(
        2.0 * np.pi * var[0])
    r = np.sqrt(np.maximum(omega ** 2 - x ** 2, 0.0))
    y_lo = np.maximum(-r, mu[1] - _TAIL * s1)
    y_hi = np.minimum(r, mu[1] + _TAIL * s1)
    span = np.maximum(y_hi - y_lo, 0.0)
    # y grid: one Gauss-Legendre rule per outer node, vectorized
    y = 0.5 * span[:, None] * _GL_NODES_3D[None, :] \
        + 0.5 * (y_hi + y_lo)[:, None]
    pdf_y = np.exp(-0.5 * (y - mu[1]) ** 2 / var[1]) / np.sqrt(
        2.0 * np.pi * var[1])
    h = np.sqrt(np.maximum(r[:, None] ** 2 - y ** 2, 0.0))
    slab = ndtr((h - mu[2]) / s2) - ndtr((-h - mu[2]) / s2)
    inner = 0.5 * span * ((pdf_y * slab) @ _GL_WEIGHTS_3D)
    val = 0.5 * (hi - lo) * float(_GL_WEIGHTS_3D @ (pdf_x * inner))
    return float(min(max(val, 0.0), 1.0))


def colliding_conditional_moments(g_j: Gaussian,
                                  radius_sum: float) -> Gaussian:
    """Moment-matched Gaussian of the ball-overlap likelihood.

    The probability of overlapping object j as a function of position is
    the ball indicator convolved with object j's density; centering the
    Minkowski ball at the origin its moment-matched Gaussian has object j's
    mean and covariance inflated by the ball's second moment
    omega^2/(d+2) per axis.
    """
    d = g_j.mean.size
    extra = ball_second_moment(radius_sum, d) * np.eye(d)
    return _gaussian(g_j.mean.copy(), g_j.cov + extra)


def _gaussian_product(g_a: Gaussian, g_b: Gaussian) -> Gaussian:
    """Moments of the normalized product of two Gaussian densities."""
    prec_a = np.linalg.inv(g_a.cov)
    prec_b = np.linalg.inv(g_b.cov)
    cov = np.linalg.inv(prec_a + prec_b)
    mean = cov @ (prec_a @ g_a.mean + prec_b @ g_b.mean)
    return _gaussian(mean, 0.5 * (cov + cov.T))


def free_conditional_moments(g_i: Gaussian, g_j: Gaussian,
                             radius_sum: float,
                             p_ic: float | None = None) -> Gaussian:
    """Moment-matched Gaussian of object i's position given no collision.

    The colliding part of object i's density is its own Gaussian times the
    overlap likelihood (moment-matched by ``colliding_conditional_moments``),
    i.e. a Gaussian product carrying probability mass p_ic; the free
    conditional is the moment-matched remainder.
    """
    if p_ic is None:
        p_ic = instantaneous_cp(g_i, g_j, radius_sum)
    if p_ic >= 1.0:
        raise ValueError("collision is certain; the free conditional is empty")
    if p_ic <= 1e-15:
        return _gaussian(g_i.mean.copy(), g_i.cov.copy())
    coll = _gaussian_product(g_i, colliding_conditional_moments(g_j,
                                                                radius_sum))
    q = 1.0 - p_ic
    mean = (g_i.mean - p_ic * coll.mean) / q
    m2_i = g_i.cov + np.outer(g_i.mean, g_i.mean)
    m2_c = coll.cov + np.outer(coll.mean, coll.mean)
    m2 = (m2_i - p_ic * m2_c) / q
    cov = m2 - np.outer(mean, mean)
    cov = 0.5 * (cov + cov.T)
    # the moment-matched remainder can lose definiteness at high overlap
    evals, evecs = np.linalg.eigh(cov)
    cov = (evecs * np.maximum(evals, 0.0)) @ evecs.T
    return _gaussian(mean, cov)


@dataclass(frozen=True)
class PredictionConfig:
    """Thresholds and horizon of the risk forecast."""

    eta: float = 0.5
    time_threshold: float = 4.0
    horizon: int = 151          # steps of NoiseParams.dt; ~5 s at 33 ms
    mc_budget: int = 100_000

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


@dataclass
class PairRisk:
    """Risk series of one object pair over the prediction horizon."""

    pair: tuple[int, int]
    radius_sum: float
    p_ic: np.ndarray
    p_ac: np.ndarray
    free_moments: list = field(default_factory=list)
    imminent_index: int | None = None

    def accumulated_at(self, k: int) -> float:
        k = min(int(k), len(self.p_ac) - 1)
        return float(self.p_ac[k])


def _replace_position(belief: GaussianBelief, g: Gaussian) -> GaussianBelief:
    """Overwrite the position block of a belief, keeping velocity terms."""
    d = belief.dims
    mean = belief.mean.copy()
    cov = belief.cov.copy()
    mean[:d] = g.mean
    cov[:d, :d] = g.cov
    return _belief(mean, 0.5 * (cov + cov.T))


def cumulative_cp(belief_i: GaussianBelief, belief_j: GaussianBelief,
                  radius_sum: float, noise: NoiseParams,
                  config: PredictionConfig,
                  pair: tuple[int, int] = (0, 1),
                  method: str = "fast") -> PairRisk:
    """Accumulated collision probability over the horizon.

    Starts from p_ac,0 = p_ic,0 and recursively adds the conditional
    instantaneous probability of the collision-free beliefs, which are
    propagated one step at a time and re-conditioned after each update.
    """
    p_ic_series = np.zeros(config.horizon)
    p_ac_series = np.zeros(config.horizon)
    free_list = []
    bi, bj = belief_i, belief_j
    p_ac = 0.0
    A, Q = noise.transition, noise.process_cov
    for k in range(config.horizon):
        if k > 0:
            bi = _propagate_once(bi, A, Q)
            bj = _propagate_once(bj, A, Q)
        gi, gj = bi.position, bj.position
        p_ic = float(np.clip(instantaneous_cp(gi, gj, radius_sum,
                                              method=method), 0.0, 1.0))
        p_ac = p_ic if k == 0 else p_ac + (1.0 - p_ac) * p_ic
        p_ac = float(np.clip(p_ac, 0.0, 1.0))
        p_ic_series[k] = p_ic
        p_ac_series[k] = p_ac
        if p_ic < 1.0:
            free_i = free_conditional_moments(gi, gj, radius_sum, p_ic)
            free_j = free_conditional_moments(gj, gi, radius_sum, p_ic)
            bi = _replace_position(bi, free_i)
            bj = _replace_position(bj, free_j)
            free_list.append((free_i, free_j))
        else:
            free_list.append((gi, gj))
    imminent = int(np.argmax(p_ac_series >= config.eta)) \
        if np.any(p_ac_series >= config.eta) else None
    return PairRisk(pair=pair, radius_sum=radius_sum, p_ic=p_ic_series,
                    p_ac=p_ac_series, free_moments=free_list,
                    imminent_index=imminent)


def imminent_time(risks: list[PairRisk], eta: float,
                  max_index: int | None = None) -> int | None:
    """Smallest step index at which any pair's p_ac reaches ``eta``."""
    best = None
    for risk in risks:
        series = risk.p_ac if max_index is None else risk.p_ac[:max_index + 1]
        hits = np.nonzero(series >= eta)[0]
        if hits.size and (best is None or hits[0] < best):
            best = int(hits[0])
    return best


def closest_approach(p_i, v_i, p_j, v_j) -> float | None:
    """Time of closest approach of two ballistic points; None if receding.

    Minimizes ||dp + dv t||, i.e. t = -(dp . dv)/(dv . dv), gated on the
    pair actually approaching (dp . dv < 0).
    """
    dp = np.asarray(p_i, dtype=float) - np.asarray(p_j, dtype=float)
    dv = np.asarray(v_i, dtype=float) - np.asarray(v_j, dtype=float)
    closing = float(dp @ dv)
    if closing >= 0.0:
        return None
    return float(-closing / (dv @ dv))


def write_risk_csv(risks: list[PairRisk], path) -> None:
    """Per-pair risk series as CSV: step, pair, p_ic, p_ac, imminent flag."""
    with open(path, "w", newline="") as fh:
        fh.write("step,pair,p_ic,p_ac,imminent\n")
        for risk in risks:
            tag = f"{risk.pair[0]}-{risk.pair[1]}"
            for k in range(len(risk.p_ac)):
                flag = int(risk.imminent_index is not None
                           and k == risk.imminent_index)
                fh.write(f"{k},{tag},{risk.p_ic[k]:.12g},"
                         f"{risk.p_ac[k]:.12g},{flag}\n")
