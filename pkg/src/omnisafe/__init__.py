"""Collision handling for an omnidirectional base and a capsule-link arm.

Subsystems: constrained base dynamics (``base_model``), operational-space
operators (``wbosc``), the delayed actuator loop (``torque_loop``),
torque-based contact estimation (``contact_estimation``), admittance
reaction (``reaction_control``), collision-risk forecasting
(``collision_prediction``), intervention planning (``planning``), and the
scenario simulator plus verification harness (``simulator``, ``verify``).
"""

from . import base_model
from . import wbosc
from . import torque_loop
from . import contact_estimation
from . import reaction_control
from . import collision_prediction
from . import planning

__version__ = "0.1.0"
__all__ = [
    "base_model", "wbosc", "torque_loop", "contact_estimation",
    "reaction_control", "collision_prediction", "planning",
]
