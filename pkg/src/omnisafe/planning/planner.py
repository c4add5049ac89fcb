"""Intervening-link decision policy and path extraction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import segment_distance
from .kinematics import fk_capsules
from .roadmap import Roadmap, search_intersections


class PlanError(RuntimeError):
    """The current configuration could not be connected to the roadmap."""


@dataclass(frozen=True)
class ObjectTrack:
    """Ballistic object whose path the robot may intercept."""

    position: np.ndarray
    velocity: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "position",
                           np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity",
                           np.asarray(self.velocity, dtype=float))

    def segment(self, t_horizon: float) -> tuple[np.ndarray, np.ndarray]:
        return self.position, self.position + self.velocity * t_horizon


@dataclass
class InterventionPlan:
    """Outcome of one decision tick."""

    link: int | None
    path: list[int] | None            # roadmap node indices, start first
    constraint_violated: bool = False
    reused: bool = False
    branch: str = ""                  # which decision branch produced this

    @property
    def feasible(self) -> bool:
        return self.link is not None


@dataclass
class DecisionContext:
    """State carried between decision ticks."""

    constrained: Roadmap
    unconstrained: Roadmap
    t_horizon: float = 4.0
    goal_tolerance: float = 0.01
    previous: InterventionPlan | None = None


def select_imminent_pair(pair_times: dict) -> tuple[int, int]:
    """Pair with the smallest closest-approach time among flagged pairs."""
    if not pair_times:
        raise ValueError("the imminent-pair set is empty")
    return min(pair_times, key=pair_times.get)


def _config_intersects(roadmap: Roadmap, q: np.ndarray, obj: ObjectTrack,
                       t_horizon: float) -> int | None:
    """Index of a link of configuration q blocking the path, else None."""
    p1, p2 = obj.segment(t_horizon)
    for idx, cap in enumerate(fk_capsules(roadmap.chain, q)):
        if segment_distance(cap.start, cap.end, p1, p2) \
                <= obj.radius + cap.radius:
            return idx
    return None


def _plan_on(roadmap: Roadmap, q: np.ndarray, obj: ObjectTrack,
             t_horizon: float,
             restrict_link: int | None = None) -> tuple[int, list[int]] | None:
    """Cheapest (link, path) whose destination intersects the path."""
    if not roadmap.nodes:
        raise PlanError("cannot connect to an empty roadmap")
    hits = search_intersections(roadmap, obj.position, obj.velocity,
                                obj.radius, t_horizon)
    start = roadmap.nearest(q)
    best: tuple[float, int, list[int]] | None = None
    links = range(roadmap.chain.n_links) if restrict_link is None \
        else [restrict_link]
    for link_idx in links:
        goals = hits[link_idx]
        if not goals:
            continue
        path = roadmap.shortest_path(start, goals)
        if path is None:
            continue
        cost = sum(float(np.linalg.norm(roadmap.nodes[a] - roadmap.nodes[b]))
                   for a, b in zip(path, path[1:]))
        if best is None or cost < best[0]:
            best = (cost, link_idx, path)
    if best is None:
        return None
    return best[1], best[2]


def decide_and_plan(q: np.ndarray, intervening: bool, ctx: DecisionContext,
                    obj: ObjectTrack) -> InterventionPlan:
    """Walk the decision graph and emit a plan (or a stay/failure).

    Branches, in order: (a) the current posture already blocks the path;
    (b/f) an active plan whose destination still blocks it is reused;
    (g) the previously chosen link's volume is searched first; otherwise a
    fresh search runs on the constrained volumes (unless the end-effector
    task is already violated) and falls back to the unconstrained ones,
    flagging the violation.
    """
    q = np.asarray(q, dtype=float)

    link = _config_intersects(ctx.constrained, q, obj, ctx.t_horizon)
    if link is not None:
        plan = InterventionPlan(link=link, path=[], branch="a-stay")
        ctx.previous = plan
        return plan

    if intervening and ctx.previous is not None and ctx.previous.path:
        prev = ctx.previous
        roadmap = ctx.unconstrained if prev.constraint_violated \
            else ctx.constrained
        dest = roadmap.nodes[prev.path[-1]]
        if _config_intersects(roadmap, dest, obj, ctx.t_horizon) is not None:
            plan = InterventionPlan(link=prev.link, path=prev.path,
                                    constraint_violated=prev.constraint_violated,
                                    reused=True, branch="f-reuse-plan")
            ctx.previous = plan
            return plan
        found = _plan_on(roadmap, q, obj, ctx.t_horizon,
                         restrict_link=prev.link)
        if found is not None:
            link_idx, path = found
            plan = InterventionPlan(link=link_idx, path=path,
                                    constraint_violated=prev.constraint_violated,
                                    reused=True, branch="g-reuse-link")
            ctx.previous = plan
            return plan

    tip_err = np.linalg.norm(ctx.constrained.chain.tip_position(q)
                             - ctx.constrained.goal) \
        if ctx.constrained.goal is not None else 0.0
    task_violated = tip_err > ctx.goal_tolerance

    if not task_violated:
        found = _plan_on(ctx.constrained, q, obj, ctx.t_horizon)
        if found is not None:
            link_idx, path = found
            plan = InterventionPlan(link=link_idx, path=path,
                                    branch="c-constrained")
            ctx.previous = plan
            return plan
        branch = "d-fallback-unconstrained"
    else:
        branch = "e-violated-unconstrained"

    found = _plan_on(ctx.unconstrained, q, obj, ctx.t_horizon)
    if found is not None:
        link_idx, path = found
        plan = InterventionPlan(link=link_idx, path=path,
                                constraint_violated=True, branch=branch)
        ctx.previous = plan
        return plan

    plan = InterventionPlan(link=None, path=None, branch="h-fail")
    ctx.previous = plan
    return plan
