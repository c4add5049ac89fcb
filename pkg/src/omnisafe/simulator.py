"""Scenario execution: fixed-step integration, module wiring, and logging.

The base loop runs semi-implicit Euler at the scenario step with a
one-step-old wrench estimate feeding the detector and reaction controller,
mirroring the measure-then-act ordering of the hardware. Object tracking
and risk prediction run on their own coarser tick. All randomness flows
through per-consumer streams split from the scenario seed, so runs are
bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .base_model import (BaseState, base_jacobians, base_jacobian_rates,
                         forward_dynamics, gravity_vector)
from .collision_prediction import (GaussianBelief, PairRisk, closest_approach,
                                   cumulative_cp, kf_step, write_risk_csv)
from .contact_estimation import (CollisionDetector, estimate_wrench,
                                 nominal_torque, stiction_attenuation,
                                 wall_fit_and_detect)
from .planning.fsm import AgentMode, InterventionFSM, ModeInputs
from .reaction_control import (ReactionController, ReactionMode, wall_row)
from .scenario import Scenario, consumer_rng
from .wbosc import (ConstrainedSystem, TaskSpec, constraint_operators,
                    osc_torque, task_operators)


@dataclass
class BaseRecord:
    """One base-loop step of a run log."""

    t: float
    pose: list
    pose_rate: list
    target: list
    torque: list
    sensed: list
    wrench: list            # estimated (F_x, F_y, moment)
    filter_mean: float
    detected: bool
    reaction_mode: str
    wall_active: bool
    wall_slope: float | None
    body_accel: list
    wheel_accels: list
    roller_rates: list
    roller_accels: list


@dataclass
class AgentRecord:
    """One prediction tick of the object-risk loop."""

    tick: int
    t: float
    mode: str
    triggered: bool
    pair_probs: dict          # "i-j" -> p_ac at the time-threshold index
    positions: dict           # object id -> estimated position


@dataclass
class RunLog:
    seed: int
    step: float
    base_records: list = field(default_factory=list)
    agent_records: list = field(default_factory=list)
    final_risks: list = field(default_factory=list)
    trigger_tick: int | None = None
    wall_slope: float | None = None

    def __eq__(self, other):
        if not isinstance(other, RunLog):
            return NotImplemented
        return (self.seed == other.seed and self.step == other.step
                and self.base_records == other.base_records
                and self.agent_records == other.agent_records
                and self.trigger_tick == other.trigger_tick
                and self.wall_slope == other.wall_slope)


def _reference(traj, t: float):
    """Planned pose/rate/accel of the scenario trajectory."""
    if traj.kind == "hold":
        return np.zeros(3), np.zeros(3), np.zeros(3)
    if traj.kind == "line":
        v = np.array([traj.speed[0], traj.speed[1], 0.0])
        return v * t, v, np.zeros(3)
    if traj.kind == "circle":
        r, w = traj.radius, traj.omega
        c, s = np.cos(w * t), np.sin(w * t)
        pose = np.array([r * (c - 1.0), r * s, 0.0])
        rate = np.array([-r * w * s, r * w * c, 0.0])
        accel = np.array([-r * w * w * c, -r * w * w * s, 0.0])
        return pose, rate, accel
    raise ValueError(f"unknown trajectory kind {traj.kind!r}")


class _ImpactState:
    """1-D sliding dummy coupled to the base through a contact spring."""

    def __init__(self, event, contact_world: np.ndarray):
        d = np.asarray(event.direction, dtype=float)
        self.direction = d / np.linalg.norm(d)
        self.event = event
        self.position = float(contact_world @ self.direction)
        self.velocity = event.velocity
        self.done = False

    def force_on_base(self, contact_world: np.ndarray, dt: float) -> float:
        if self.done:
            return 0.0
        face = float(contact_world @ self.direction)
        compression = self.position - face
        force = self.event.stiffness * max(compression, 0.0)
        accel = (self.event.drive_force - force) / self.event.mass
        self.velocity += dt * accel
        self.position += dt * self.velocity
        if compression <= 0.0 and self.velocity < 0.0:
            self.done = True
        return force


def _external_wrench(scenario: Scenario, state: BaseState, t: float,
                     impacts: dict, dt: float):
    """World wrench and application point from the active events."""
    pose = state.pose
    c, s = np.cos(pose[2]), np.sin(pose[2])
    rot = np.array([[c, -s], [s, c]])
    total = np.zeros(3)
    point_acc = np.zeros(2)
    weight = 0.0
    for idx, push in enumerate(scenario.pushes):
        if push.start <= t < push.start + push.duration:
            level = 1.0
            if push.ramp > 0.0:
                level = min((t - push.start) / push.ramp, 1.0)
            f = level * np.asarray(push.force, dtype=float)
            p_world = pose[:2] + rot @ np.asarray(push.point, dtype=float)
            total[:2] += f
            point_acc += np.linalg.norm(f) * p_world
            weight += np.linalg.norm(f)
            # moment of this push about the body center
            r = p_world - pose[:2]
            total[2] += r[0] * f[1] - r[1] * f[0]
    for idx, event in enumerate(scenario.impacts):
        if t < event.start:
            continue
        p_world = pose[:2] + rot @ np.asarray(event.point, dtype=float)
        if idx not in impacts:
            impacts[idx] = _ImpactState(event, p_world)
        mag = impacts[idx].force_on_base(p_world, dt)
        if mag > 0.0:
            f = mag * impacts[idx].direction
            total[:2] += f
            point_acc += mag * p_world
            weight += mag
            r = p_world - pose[:2]
            total[2] += r[0] * f[1] - r[1] * f[0]
    if weight <= 0.0:
        return None, None
    point = point_acc / weight
    # the moment about the body center is re-expressed at the shared point
    r = point - pose[:2]
    torque_at_point = total[2] - (r[0] * total[1] - r[1] * total[0])
    return np.array([total[0], total[1], torque_at_point]), point


def _sensed_torques(scenario: Scenario, torque: np.ndarray,
                    nominal: np.ndarray, t: float,
                    gamma: np.ndarray | None) -> np.ndarray:
    """Sensor model: applied torque, stiction-attenuated deviations and
    scripted per-wheel faults."""
    sensed = torque.copy()
    if gamma is not None:
        sensed = nominal - gamma * (nominal - torque)
    for fault in scenario.faults:
        if fault.start <= t < fault.start + fault.duration:
            sensed[fault.wheel] *= fault.scale
    return sensed


def run_scenario(scenario: Scenario) -> RunLog:
    """Execute one scenario deterministically and return its log."""
    dt = scenario.step
    steps = int(round(scenario.duration / dt))
    params = scenario.base
    log = RunLog(seed=scenario.seed, step=dt)

    mocap_rng = consumer_rng(scenario.seed, "mocap")
    object_rng = consumer_rng(scenario.seed, "objects")
    gamma = stiction_attenuation(consumer_rng(scenario.seed, "stiction")) \
        if scenario.stiction else None

    pose0, rate0, _ = _reference(scenario.trajectory, 0.0)
    state = BaseState.from_pose(*pose0, *rate0, params=params)
    detector = CollisionDetector(window=scenario.detector_window,
                                 threshold=scenario.detector_threshold)
    reaction = ReactionController(scenario.admittance,
                                  dwell_tau=scenario.dwell_tau,
                                  merge_duration=scenario.merge_duration)
    impacts: dict = {}
    task_J = np.zeros((3, 9))
    task_J[:, :3] = np.eye(3)

    # one-step-old sensor data feeding the estimator
    prev = {
        "torque": np.zeros(3),
        "sensed": np.zeros(3),
        "body_accel": np.zeros(3),
        "wheel_accels": np.zeros(3),
        "roller_rates": np.zeros(3),
        "roller_accels": np.zeros(3),
        "theta": state.q[2],
    }
    prev_target = state.pose.copy()

    wall = scenario.wall
    wall_active_sim = False
    wall_side = None
    wall_points: list[np.ndarray] = []
    wall_slope_est: float | None = None
    if wall is not None:
        g0 = state.q[1] - wall.slope * state.q[0] - wall.offset
        wall_side = 1.0 if g0 >= 0.0 else -1.0

    base_steps_per_tick = max(1, int(round(scenario.noise.dt / dt)))
    trackers = _init_trackers(scenario)
    fsm = InterventionFSM(caution_dwell=1.0)
    tick = 0

    for n in range(steps):
        t = n * dt

        # estimation from the previous step's measurements; the first
        # cycle has no sensor frame yet
        nominal = nominal_torque(params, scenario.friction, prev["theta"],
                                 prev["body_accel"], prev["wheel_accels"],
                                 prev["roller_rates"], prev["roller_accels"],
                                 slope=scenario.slope)
        if n == 0:
            sensed = nominal.copy()
        else:
            sensed = _sensed_torques(scenario, prev["torque"], nominal, t,
                                     gamma)
        wrench = estimate_wrench(nominal, sensed, prev["theta"], params,
                                 timestamp=t)
        detected = detector.step(wrench.magnitude)
        latched = detector.mean * (wrench.force / wrench.magnitude) \
            if wrench.magnitude > 1e-12 else np.zeros(2)

        planned, planned_rate, planned_accel = _reference(
            scenario.trajectory, t)
        target = reaction.step(detected and scenario.reaction_enabled,
                               latched, planned, state.pose, t)
        if reaction.mode is ReactionMode.TRACKING:
            target_rate, target_accel = planned_rate, planned_accel
        else:
            target_rate = (target - prev_target) / dt
            target_accel = np.zeros(3)
        prev_target = target.copy()

        # wall detection from noisy pose measurements
        measured = state.pose[:2] + mocap_rng.normal(scale=1e-3, size=2)
        wall_detected = False
        if wall is not None:
            err = np.linalg.norm(measured - planned[:2])
            wall_detected = err >= scenario.wall_err_threshold
            if wall_detected:
                wall_points.append(measured.copy())
                if len(wall_points) >= 2:
                    fit = wall_fit_and_detect(
                        np.full((len(wall_points), 2), 1e9),
                        np.asarray(wall_points), 0.0)
                    wall_slope_est = fit.slope

        # controller: operational-space torque, wall-aware while the pose
        # error says a wall is in the way and a slope estimate exists
        jac = base_jacobians(params, state.q[2])
        jac_rate = base_jacobian_rates(params, state.q[2], state.qd[2])
        J_c, Jd_c = jac.J_c, jac_rate.J_c
        if wall_detected and wall_slope_est is not None:
            J_c = np.vstack([J_c, wall_row(wall_slope_est)[None, :]])
            Jd_c = np.vstack([Jd_c, np.zeros((1, 9))])
        sys = ConstrainedSystem(A=params.mass_matrix, J_c=J_c,
                                U=params.actuation_matrix)
        proj = constraint_operators(sys)
        a_ref = target_accel + scenario.kp * (target - state.pose) \
            + scenario.kd * (target_rate - state.pose_rate)
        task = TaskSpec(J=task_J, accel_des=a_ref)
        ops = task_operators(sys, proj, task)
        G = gravity_vector(params, scenario.slope) \
            if scenario.slope is not None else None
        torque = osc_torque(sys, proj, task, ops, gravity=G,
                            jcdot_qdot=Jd_c @ state.qd)

        # plant: external events and the constrained dynamics
        ext_wrench, ext_point = _external_wrench(scenario, state, t,
                                                 impacts, dt)
        extra = wall_row(wall.slope)[None, :] if wall_active_sim else None
        try:
            sol = forward_dynamics(params, scenario.friction, scenario.slope,
                                   state, torque, ext_wrench=ext_wrench,
                                   ext_point=ext_point,
                                   extra_constraint=extra)
        except ArithmeticError:
            raise
        state.qd = state.qd + dt * sol.qdd
        state.q = state.q + dt * state.qd
        _stabilize_velocity(params, state, wall.slope
                            if wall_active_sim and wall else None)

        # wall contact switching in the plant
        if wall is not None:
            g = state.q[1] - wall.slope * state.q[0] - wall.offset
            if not wall_active_sim and g * wall_side <= 0.0:
                wall_active_sim = True
                _stabilize_velocity(params, state, wall.slope)
            elif wall_active_sim:
                lam = sol.lambda_c[-1] if len(sol.lambda_c) > 6 else 0.0
                # the wall can only push toward the robot's free side
                if lam * wall_side < 0.0:
                    wall_active_sim = False

        accel_info = {
            "torque": torque.copy(),
            "sensed": sensed.copy(),
            "body_accel": sol.qdd[:3].copy(),
            "wheel_accels": sol.qdd[3:6].copy(),
            "roller_rates": state.roller_rates.copy(),
            "roller_accels": sol.qdd[6:9].copy(),
            "theta": state.q[2],
        }
        prev = accel_info

        log.base_records.append(BaseRecord(
            t=t, pose=state.pose.tolist(),
            pose_rate=state.pose_rate.tolist(),
            target=target.tolist(), torque=torque.tolist(),
            sensed=sensed.tolist(),
            wrench=wrench.as_vector().tolist(),
            filter_mean=detector.mean, detected=bool(detected),
            reaction_mode=reaction.mode.value,
            wall_active=bool(wall_active_sim),
            wall_slope=wall_slope_est,
            body_accel=sol.qdd[:3].tolist(),
            wheel_accels=sol.qdd[3:6].tolist(),
            roller_rates=state.roller_rates.tolist(),
            roller_accels=sol.qdd[6:9].tolist()))

        # object prediction tick
        if trackers and n % base_steps_per_tick == 0:
            record = _prediction_tick(scenario, trackers, fsm, object_rng,
                                      tick, t, log)
            log.agent_records.append(record)
            tick += 1

    log.wall_slope = wall_slope_est
    return log


def _stabilize_velocity(params, state: BaseState,
                        wall_slope: float | None):
    """Project velocities onto the active constraint manifold."""
    jac = base_jacobians(params, state.q[2])
    J = jac.J_c
    if wall_slope is not None:
        J = np.vstack([J, wall_row(wall_slope)[None, :]])
    A_inv = np.linalg.inv(params.mass_matrix)
    JA = J @ A_inv @ J.T
    lam = np.linalg.solve(JA, J @ state.qd)
    state.qd = state.qd - A_inv @ J.T @ lam


class _Tracker:
    def __init__(self, spec, noise):
        pos = np.asarray(spec.position, dtype=float)
        vel = np.asarray(spec.velocity, dtype=float)
        self.spec = spec
        self.truth = np.concatenate([pos, vel])
        d = pos.size
        mean = np.concatenate([pos, np.zeros(d)])
        cov = np.diag([0.25] * d + [1.0] * d)
        self.belief = GaussianBelief(mean, cov)
        self.noise = noise

    def tick(self, rng):
        A = self.noise.transition
        self.truth = A @ self.truth
        d = self.truth.size // 2
        y = self.truth[:d] + rng.normal(scale=self.spec.sensor_sigma, size=d)
        self.belief = kf_step(self.belief, y, self.noise)


def _init_trackers(scenario: Scenario) -> list[_Tracker]:
    return [_Tracker(spec, scenario.noise) for spec in scenario.objects]


def _prediction_tick(scenario, trackers, fsm, rng, tick, t, log):
    for tracker in trackers:
        tracker.tick(rng)
    config = scenario.prediction
    noise = scenario.noise
    threshold_index = min(int(round(config.time_threshold / noise.dt)),
                          config.horizon - 1)
    risks = []
    over = {}
    approaching = False
    for i in range(len(trackers)):
        for j in range(i + 1, len(trackers)):
            radius_sum = trackers[i].spec.radius + trackers[j].spec.radius
            risk = cumulative_cp(trackers[i].belief, trackers[j].belief,
                                 radius_sum, noise, config, pair=(i, j))
            risks.append(risk)
            over[(i, j)] = bool(risk.p_ac[threshold_index] >= config.eta)
    if fsm.tracked_pair is not None and fsm.tracked_pair in over:
        i, j = fsm.tracked_pair
        d = trackers[i].belief.mean[:2] - trackers[j].belief.mean[:2]
        v = trackers[i].belief.mean[2:] - trackers[j].belief.mean[2:]
        approaching = bool(d @ v < 0.0)
    mode = fsm.step(ModeInputs(risk_over_threshold=over,
                               approaching=approaching, at_home=True), t)
    triggered = any(over.values())
    if triggered and log.trigger_tick is None:
        log.trigger_tick = tick
    log.final_risks = risks
    return AgentRecord(
        tick=tick, t=t, mode=mode.value, triggered=triggered,
        pair_probs={f"{i}-{j}": float(r.p_ac[threshold_index])
                    for (i, j), r in zip(over.keys(), risks)},
        positions={str(k): trackers[k].belief.mean[:2].tolist()
                   for k in range(len(trackers))})


def emit_outputs(log: RunLog, out_dir, fmt: str = "csv") -> list[Path]:
    """Write the log; csv produces base/agent/risk files, jsonl one file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if fmt == "csv":
        written.append(_write_base_csv(log, out / "base.csv"))
        written.append(_write_agent_csv(log, out / "agent.csv"))
        risk_path = out / "risk.csv"
        _write_risk_csv_like_module(log, risk_path)
        written.append(risk_path)
    elif fmt == "jsonl":
        written.append(_write_jsonl(log, out / "run.jsonl"))
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return written


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_base_csv(log: RunLog, path: Path) -> Path:
    cols = ["t", "x", "y", "theta", "xd", "yd", "thetad",
            "target_x", "target_y", "target_theta",
            "torque_0", "torque_1", "torque_2",
            "wrench_fx", "wrench_fy", "wrench_m",
            "filter_mean", "detected", "reaction_mode", "wall_active",
            "wall_slope"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for r in log.base_records:
            row = [r.t, *r.pose, *r.pose_rate, *r.target, *r.torque,
                   *r.wrench, r.filter_mean, int(r.detected),
                   r.reaction_mode, int(r.wall_active),
                   "" if r.wall_slope is None else r.wall_slope]
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _write_agent_csv(log: RunLog, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write("tick,t,mode,triggered,pair,p_at_threshold\n")
        for r in log.agent_records:
            if r.pair_probs:
                for pair, p in r.pair_probs.items():
                    fh.write(f"{r.tick},{_fmt(r.t)},{r.mode},"
                             f"{int(r.triggered)},{pair},{_fmt(p)}\n")
            else:
                fh.write(f"{r.tick},{_fmt(r.t)},{r.mode},"
                         f"{int(r.triggered)},,\n")
    return path


def _write_risk_csv_like_module(log: RunLog, path: Path):
    """Final-tick risk series in the prediction module's exact schema."""
    with open(path, "w", newline="") as fh:
        fh.write("step,pair,p_ic,p_ac,imminent\n")
        for risk in log.final_risks:
            tag = f"{risk.pair[0]}-{risk.pair[1]}"
            for k in range(len(risk.p_ac)):
                flag = int(risk.imminent_index is not None
                           and k == risk.imminent_index)
                fh.write(f"{k},{tag},{risk.p_ic[k]:.12g},"
                         f"{risk.p_ac[k]:.12g},{flag}\n")
    return path


def _write_jsonl(log: RunLog, path: Path) -> Path:
    with open(path, "w") as fh:
        header = {"kind": "meta", "seed": log.seed, "step": log.step,
                  "trigger_tick": log.trigger_tick,
                  "wall_slope": log.wall_slope}
        fh.write(json.dumps(header) + "\n")
        for r in log.base_records:
            fh.write(json.dumps({"kind": "base", **asdict(r)}) + "\n")
        for r in log.agent_records:
            fh.write(json.dumps({"kind": "agent", **asdict(r)}) + "\n")
    return path


def load_jsonl(path) -> RunLog:
    """Rebuild a RunLog from its jsonl dump (risk series not round-tripped)."""
    log = None
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            kind = obj.pop("kind")
            if kind == "meta":
                log = RunLog(seed=obj["seed"], step=obj["step"],
                             trigger_tick=obj["trigger_tick"],
                             wall_slope=obj["wall_slope"])
            elif kind == "base":
                log.base_records.append(BaseRecord(**obj))
            elif kind == "agent":
                log.agent_records.append(AgentRecord(**obj))
    return log
