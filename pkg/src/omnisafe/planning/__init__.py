"""Intervention planning: capsule geometry, reachable volumes, and the
mode state machine."""

from .geometry import Capsule, segment_distance
from .kinematics import (JointSpec, KinematicChain, demo_arm, fk_capsules,
                         planar_two_link)
from .octree import Octree, OctreeNode, build_octree
from .roadmap import (Roadmap, load_roadmap, prm_learn, save_roadmap,
                      search_intersections)
from .planner import (DecisionContext, InterventionPlan, ObjectTrack,
                      decide_and_plan, select_imminent_pair)
from .fsm import AgentMode, InterventionFSM, ModeInputs

__all__ = [
    "Capsule", "segment_distance",
    "JointSpec", "KinematicChain", "demo_arm", "fk_capsules",
    "planar_two_link",
    "Octree", "OctreeNode", "build_octree",
    "Roadmap", "prm_learn", "search_intersections", "load_roadmap",
    "save_roadmap",
    "DecisionContext", "InterventionPlan", "ObjectTrack", "decide_and_plan",
    "select_imminent_pair",
    "AgentMode", "ModeInputs", "InterventionFSM",
]
