"""Mode state machine of the intervention agent.

IDLE watches the accumulated risks; INTERVENTION holds while any pair is
over threshold or the tracked pair is still approaching; CAUTION dwells
before RETURN, which hands back to IDLE once the home pose is reached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class AgentMode(Enum):
    IDLE = "idle"
    INTERVENTION = "intervention"
    CAUTION = "caution"
    RETURN = "return"


@dataclass
class ModeInputs:
    """Risk and geometry snapshot consumed by one FSM tick.

    ``risk_over_threshold`` is the per-pair predicate "p_ac at the time
    threshold >= eta"; ``approaching`` is the tracked pair's relative
    position-velocity test (dp . dv < 0); ``at_home`` reports whether the
    return motion has completed.
    """

    risk_over_threshold: dict = field(default_factory=dict)
    approaching: bool = False
    at_home: bool = True

    @property
    def any_over(self) -> bool:
        return any(self.risk_over_threshold.values())


class InterventionFSM:
    """Deterministic mode transitions with a caution dwell timer.

    Identical input traces produce identical mode sequences; the timer
    state makes instances single-owner.
    """

    def __init__(self, caution_dwell: float = 1.0):
        self.mode = AgentMode.IDLE
        self.caution_dwell = float(caution_dwell)
        self._caution_since: float | None = None
        self.tracked_pair: tuple[int, int] | None = None

    def step(self, inputs: ModeInputs, t: float) -> AgentMode:
        mode = self.mode
        if mode is AgentMode.IDLE:
            if inputs.any_over:
                self.mode = AgentMode.INTERVENTION
                self.tracked_pair = self._first_over(inputs)
        elif mode is AgentMode.INTERVENTION:
            # stay while any risk is over threshold or the pair still closes
            if not inputs.any_over and not inputs.approaching:
                self.mode = AgentMode.CAUTION
                self._caution_since = t
        elif mode is AgentMode.CAUTION:
            if inputs.any_over:
                self.mode = AgentMode.INTERVENTION
                self.tracked_pair = self._first_over(inputs)
                self._caution_since = None
            elif self._caution_since is not None \
                    and t - self._caution_since >= self.caution_dwell:
                self.mode = AgentMode.RETURN
                self._caution_since = None
        elif mode is AgentMode.RETURN:
            if inputs.any_over:
                self.mode = AgentMode.INTERVENTION
                self.tracked_pair = self._first_over(inputs)
            elif inputs.at_home:
                self.mode = AgentMode.IDLE
                self.tracked_pair = None
        return self.mode

    @staticmethod
    def _first_over(inputs: ModeInputs):
        for pair, over in inputs.risk_over_threshold.items():
            if over:
                return pair
        return None
