"""Discrete actuator loop with a pure command delay.

The plant is a constant gain G acting on the command d steps ago plus an
additive disturbance, so for d >= 1 the sensed torque of step n is known
before the step-n command is issued (measure, then act). Controllers:
proportional + feedforward, PI, and a Smith-predictor variant that cancels
the delayed-command term. Time is the control step; the hardware's
two-layer loops are collapsed into one rate.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass
class TorqueGains:
    """Controller gains; the feedforward defaults to 1/G_hat.

    ``windup_limit`` clamps the PI accumulator; left unset, the clamp
    tracks ten times the largest desired torque seen so far.
    """

    K_p: float = 10.0
    K_i: float = 0.0
    G_hat: float = 1.0
    K_ff: float | None = None
    windup_limit: float | None = None

    def __post_init__(self):
        if self.K_ff is None:
            self.K_ff = 1.0 / self.G_hat


class DelayedPlant:
    """tau_s(n) = G * u(n - d) + tau_ext(n), with zero-initialized history."""

    def __init__(self, gain: float, delay: int):
        if delay < 0:
            raise ValueError("delay must be >= 0")
        self.gain = float(gain)
        self.delay = int(delay)
        self._history = deque([0.0] * self.delay, maxlen=self.delay or None)

    def output(self, tau_ext: float = 0.0) -> float:
        """Sensed torque of the current step, before the command is pushed."""
        if self.delay == 0:
            raise ValueError("a zero-delay plant has no causal output")
        return self.gain * self._history[0] + tau_ext

    def push(self, u: float):
        """Record the current step's command."""
        if self.delay > 0:
            self._history.append(float(u))

    def step(self, u: float, tau_ext: float = 0.0) -> float:
        """Push the command and return the sensed torque in one call."""
        if self.delay == 0:
            return self.gain * float(u) + tau_ext
        out = self.output(tau_ext)
        self.push(u)
        return out

    def reset(self):
        self._history = deque([0.0] * self.delay, maxlen=self.delay or None)


class TorqueController:
    """Torque-tracking controller over a DelayedPlant.

    Modes: "plain-P" implements u = K_ff*tau_d + K_p*(tau_d - tau_s);
    "PI" adds a clamped integral of the error; "smith" feeds back
    tau_s + G_hat*(u(n) - u(n-d)), solved algebraically for u(n), which
    removes the delayed-command term when G_hat matches the plant gain.
    With zero delay the predictor term vanishes and smith reduces to
    plain-P. Instances carry loop state and are single-owner: hand one
    between threads, never share it.
    """

    MODES = ("plain-P", "PI", "smith")

    def __init__(self, gains: TorqueGains, delay: int, mode: str = "smith"):
        if mode not in self.MODES:
            raise ValueError(f"mode must be one of {self.MODES}")
        self.gains = gains
        self.delay = int(delay)
        self.mode = mode
        self._u_history = deque([0.0] * self.delay,
                                maxlen=self.delay or None)
        self._integral = 0.0
        self._tau_d_max = 0.0

    def reset(self):
        self._u_history = deque([0.0] * self.delay,
                                maxlen=self.delay or None)
        self._integral = 0.0
        self._tau_d_max = 0.0

    def step(self, tau_d: float, tau_s: float) -> float:
        """Command for the current step given desired and sensed torque."""
        g = self.gains
        err = tau_d - tau_s
        u = g.K_ff * tau_d + g.K_p * err
        if self.mode == "PI":
            self._integral += err
            self._tau_d_max = max(self._tau_d_max, abs(tau_d))
            limit = g.windup_limit
            if limit is None and self._tau_d_max > 0.0:
                limit = 10.0 * self._tau_d_max
            if limit is not None:
                self._integral = float(np.clip(self._integral,
                                               -limit, limit))
            u += g.K_i * self._integral
        elif self.mode == "smith" and self.delay > 0:
            u_delayed = self._u_history[0]
            u = (g.K_ff * tau_d + g.K_p * err + g.K_p * g.G_hat * u_delayed) \
                / (1.0 + g.K_p * g.G_hat)
        if self.delay > 0:
            self._u_history.append(u)
        return u


def run_torque_loop(controller: TorqueController, plant: DelayedPlant,
                    tau_d, tau_ext=None, steps: int | None = None) -> dict:
    """Simulate the closed loop; tau_d/tau_ext may be scalars or sequences."""
    if plant.delay < 1:
        raise ValueError("the closed loop needs at least one step of delay")
    if steps is None:
        steps = len(tau_d)
    tau_d = np.broadcast_to(np.asarray(tau_d, dtype=float), (steps,))
    if tau_ext is None:
        tau_ext = np.zeros(steps)
    tau_ext = np.broadcast_to(np.asarray(tau_ext, dtype=float), (steps,))
    u_log = np.zeros(steps)
    tau_s_log = np.zeros(steps)
    for n in range(steps):
        tau_s = plant.output(tau_ext[n])
        u = controller.step(tau_d[n], tau_s)
        plant.push(u)
        u_log[n] = u
        tau_s_log[n] = tau_s
    return {"u": u_log, "tau_s": tau_s_log, "tau_d": np.array(tau_d),
            "tau_ext": np.array(tau_ext)}


def delay_free_response(gains: TorqueGains, plant_gain: float,
                        tau_d, tau_ext=None) -> np.ndarray:
    """Closed-form response of the algebraic (no-delay) proportional loop.

    tau_s = G(K_ff + K_p)/(1 + K_p G) tau_d + tau_ext/(1 + K_p G); the
    ideal reference the Smith-compensated loop reproduces d steps late.
    """
    tau_d = np.asarray(tau_d, dtype=float)
    if tau_ext is None:
        tau_ext = np.zeros_like(tau_d)
    g, kp, kff = plant_gain, gains.K_p, gains.K_ff
    return (g * (kff + kp) * tau_d + np.asarray(tau_ext, dtype=float)) \
        / (1.0 + kp * g)


def zero_force_mode(controller: TorqueController, plant: DelayedPlant,
                    tau_ext, steps: int | None = None) -> dict:
    """Run the loop with tau_d = 0 so the sensed torque tracks zero."""
    if steps is None:
        steps = len(tau_ext)
    return run_torque_loop(controller, plant, 0.0, tau_ext, steps=steps)


def spring_outer_loop(stiffness: float, load_inertia: float,
                      controller: TorqueController, plant: DelayedPlant,
                      dt: float, duration: float, angle0: float = 0.3,
                      tau_ext: float = 0.0) -> dict:
    """Proportional position loop (a virtual spring) over the torque loop.

    The load integrates I*qdd = tau_s; the outer loop commands
    tau_d = -k*angle. Returns the trajectory and the measured oscillation
    frequency from zero crossings of the angle.
    """
    if plant.delay < 1:
        raise ValueError("the closed loop needs at least one step of delay")
    steps = int(round(duration / dt))
    angle = angle0
    rate = 0.0
    angles = np.zeros(steps)
    for n in range(steps):
        tau_s = plant.output(tau_ext)
        tau_d = -stiffness * angle
        u = controller.step(tau_d, tau_s)
        plant.push(u)
        rate += dt * tau_s / load_inertia
        angle += dt * rate
        angles[n] = angle
    t = dt * np.arange(steps)
    return {"t": t, "angle": angles,
            "frequency": _zero_crossing_frequency(t, angles)}


def _zero_crossing_frequency(t: np.ndarray, x: np.ndarray) -> float:
    """Oscillation frequency from mean spacing of upward zero crossings."""
    sign = np.signbit(x)
    crossings = np.nonzero(sign[:-1] & ~sign[1:])[0]
    if len(crossings) < 2:
        return 0.0
    # linear interpolation of each crossing instant
    times = t[crossings] + (t[crossings + 1] - t[crossings]) * (
        -x[crossings] / (x[crossings + 1] - x[crossings]))
    return float(1.0 / np.mean(np.diff(times)))
