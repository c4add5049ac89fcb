"""Scenario files: flat key-value text with dotted section keys.

One `key = value` pair per line; `#` starts a comment. Values are scalars,
comma-separated float tuples, or bare words. Dotted prefixes group related
keys (`base.mass = 40`), and numbered prefixes build lists
(`push.0.start = 1.0`). The full key reference lives in the README.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .base_model import BaseParams, RollerFrictionParams, SlopeSpec
from .collision_prediction import NoiseParams, PredictionConfig
from .contact_estimation import BodyOutline
from .reaction_control import AdmittanceParams


class ScenarioParseError(ValueError):
    """The file is not well-formed key-value text."""


class ScenarioValidationError(ValueError):
    """Parsed values violate a model invariant."""


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(float(part) for part in text.split(","))
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            continue
    return text


def parse_keyvalues(text: str) -> dict:
    """Raw dotted-key dictionary from scenario text."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ScenarioParseError(f"line {lineno}: empty key")
        if key in out:
            raise ScenarioParseError(f"line {lineno}: duplicate key {key!r}")
        try:
            out[key] = _parse_value(value)
        except ValueError as exc:
            raise ScenarioParseError(f"line {lineno}: {exc}") from exc
    return out


@dataclass
class PushEvent:
    """Scripted wrench applied at a body-frame point."""

    start: float
    duration: float
    point: tuple[float, float] = (0.0, 0.0)
    force: tuple[float, float] = (0.0, 0.0)
    ramp: float = 0.0            # seconds to reach full force


@dataclass
class ImpactEvent:
    """Sliding dummy hitting the base through a contact spring."""

    start: float
    direction: tuple[float, float] = (1.0, 0.0)   # push direction, world
    point: tuple[float, float] = (0.0, 0.0)       # body-frame contact point
    mass: float = 9.08
    velocity: float = 0.5
    drive_force: float = 44.5
    stiffness: float = 38.0


@dataclass
class WallSpec:
    slope: float = 1.0
    offset: float = 0.0          # wall line y = slope * x + offset


@dataclass
class TorqueFault:
    """Multiplicative fault on one wheel's sensed torque."""

    start: float
    duration: float
    wheel: int = 0
    scale: float = 1.0


@dataclass
class ObjectSpec:
    position: tuple
    velocity: tuple
    radius: float = 0.1
    sensor_sigma: float = 0.1    # measurement noise std dev [m]


@dataclass
class TrajectorySpec:
    kind: str = "hold"           # hold | circle | line
    radius: float = 0.5
    omega: float = 0.5
    speed: tuple[float, float] = (0.0, 0.0)


@dataclass
class Scenario:
    """Everything one simulation run needs."""

    duration: float = 5.0
    step: float = 0.001
    seed: int = 0
    base: BaseParams = field(default_factory=BaseParams)
    slope: SlopeSpec | None = None
    friction: RollerFrictionParams = field(
        default_factory=RollerFrictionParams)
    outline: BodyOutline = field(
        default_factory=BodyOutline.equilateral_triangle)
    admittance: AdmittanceParams = field(default_factory=AdmittanceParams)
    dwell_tau: float = 5.0
    merge_duration: float = 2.0
    kp: float = 50.0
    kd: float = 14.0
    detector_window: int = 40
    detector_threshold: float = 0.8
    reaction_enabled: bool = True
    wall_err_threshold: float = 0.03
    stiction: bool = False
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    pushes: list[PushEvent] = field(default_factory=list)
    impacts: list[ImpactEvent] = field(default_factory=list)
    faults: list[TorqueFault] = field(default_factory=list)
    wall: WallSpec | None = None
    objects: list[ObjectSpec] = field(default_factory=list)
    noise: NoiseParams = field(default_factory=lambda: NoiseParams(dims=2))
    prediction: PredictionConfig = field(default_factory=PredictionConfig)

    def __post_init__(self):
        if self.duration <= 0.0 or self.step <= 0.0:
            raise ScenarioValidationError("duration and step must be positive")
        if self.step > self.duration:
            raise ScenarioValidationError("step exceeds the duration")
        if self.detector_window < 1:
            raise ScenarioValidationError("detector window must be >= 1")


def _collect_numbered(raw: dict, prefix: str) -> list[dict]:
    """Group `prefix.N.key` entries into a list of per-index dicts."""
    grouped: dict[int, dict] = {}
    for key, value in raw.items():
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == prefix:
            try:
                idx = int(parts[1])
            except ValueError as exc:
                raise ScenarioValidationError(
                    f"{key}: expected a numeric index") from exc
            grouped.setdefault(idx, {})[parts[2]] = value
    return [grouped[i] for i in sorted(grouped)]


def _section(raw: dict, prefix: str) -> dict:
    head = prefix + "."
    return {key[len(head):]: value for key, value in raw.items()
            if key.startswith(head) and key.count(".") == 1}


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file."""
    raw = parse_keyvalues(Path(path).read_text())
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> Scenario:
    try:
        base = BaseParams(**_section(raw, "base"))
        friction = RollerFrictionParams(**_section(raw, "friction"))

        slope_kv = _section(raw, "slope")
        slope = None
        if slope_kv:
            angle = np.deg2rad(slope_kv.pop("angle_deg", 0.0))
            heading = np.deg2rad(slope_kv.pop("heading_deg", 0.0))
            slope = SlopeSpec(angle=angle, heading=heading, **slope_kv)

        outline_kv = _section(raw, "outline")
        outline = BodyOutline.equilateral_triangle(
            side=float(outline_kv.get("side", 0.61)))

        adm_kv = _section(raw, "admittance")
        dwell_tau = float(adm_kv.pop("dwell_tau", 5.0))
        merge = float(adm_kv.pop("merge_duration", 2.0))
        admittance = AdmittanceParams(**adm_kv)

        ctrl = _section(raw, "controller")
        det = _section(raw, "detector")
        wall_kv = _section(raw, "wall")
        traj_kv = _section(raw, "trajectory")
        trajectory = TrajectorySpec(**traj_kv)

        pred_kv = _section(raw, "prediction")
        noise_kv = {}
        for name in ("dt", "sigma_d", "sigma_a", "sigma_s", "dims"):
            if name in pred_kv:
                noise_kv[name] = pred_kv.pop(name)
        noise = NoiseParams(**noise_kv)
        if "horizon_s" in pred_kv:
            pred_kv["horizon"] = int(round(pred_kv.pop("horizon_s")
                                           / noise.dt)) + 1
        prediction = PredictionConfig(**pred_kv) if pred_kv \
            else PredictionConfig()

        scenario = Scenario(
            duration=float(raw.get("duration", 5.0)),
            step=float(raw.get("step", 0.001)),
            seed=int(raw.get("seed", 0)),
            base=base,
            slope=slope,
            friction=friction,
            outline=outline,
            admittance=admittance,
            dwell_tau=dwell_tau,
            merge_duration=merge,
            kp=float(ctrl.get("kp", 50.0)),
            kd=float(ctrl.get("kd", 14.0)),
            detector_window=int(det.get("window", 40)),
            detector_threshold=float(det.get("threshold", 0.8)),
            reaction_enabled=bool(int(raw.get("reaction.enabled", 1))),
            wall_err_threshold=float(raw.get("wall_detect.err_threshold",
                                             0.03)),
            stiction=bool(int(raw.get("stiction", 0))),
            trajectory=trajectory,
            pushes=[PushEvent(**kv)
                    for kv in _collect_numbered(raw, "push")],
            impacts=[ImpactEvent(**kv)
                     for kv in _collect_numbered(raw, "impact")],
            faults=[TorqueFault(**kv)
                    for kv in _collect_numbered(raw, "fault")],
            wall=WallSpec(**wall_kv) if wall_kv else None,
            objects=[ObjectSpec(**kv)
                     for kv in _collect_numbered(raw, "object")],
            noise=noise,
            prediction=prediction,
        )
    except ScenarioValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError(str(exc)) from exc
    return scenario


def consumer_rng(seed: int, label: str) -> np.random.Generator:
    """Independent stream per consumer; adding consumers never perturbs
    existing ones because each stream is keyed by a stable label hash."""
    import hashlib
    digest = hashlib.sha256(label.encode()).digest()
    key = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([seed, key]))
