"""Command-line entry points.

Subcommands: simulate, estimate (offline re-estimation from a log),
predict, learn (roadmap), plan, verify. Exit codes: 0 success, 2 scenario
parse error, 3 validation error, 4 numerical failure. The OMNISAFE_LOG
environment variable selects verbosity (quiet|info|debug).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


def _log_level() -> str:
    level = os.environ.get("OMNISAFE_LOG", "info").lower()
    return level if level in ("quiet", "info", "debug") else "info"


def _say(message: str, minimum: str = "info"):
    order = {"quiet": 0, "info": 1, "debug": 2}
    if order[_log_level()] >= order[minimum]:
        print(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omnisafe",
        description="Simulation, estimation, and planning toolkit for an "
                    "omnidirectional base and a capsule-link arm")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        p.add_argument("--scenario", type=Path, required=scenario_required,
                       help="scenario file path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory")
        p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    common(sub.add_parser("simulate", help="run a scenario end to end"))
    est = sub.add_parser("estimate",
                         help="re-run wrench estimation over a jsonl log")
    common(est)
    est.add_argument("--log", type=Path, required=True,
                     help="jsonl log produced by simulate")
    common(sub.add_parser("predict",
                          help="run only the object-risk prediction"))
    learn = sub.add_parser("learn", help="build and store a roadmap")
    common(learn, scenario_required=False)
    learn.add_argument("--budget", type=int, default=600)
    learn.add_argument("--constrained", action="store_true")
    plan = sub.add_parser("plan", help="plan an intervention from a roadmap")
    common(plan, scenario_required=False)
    plan.add_argument("--roadmap", type=Path, required=True)
    plan.add_argument("--object", type=str, required=True,
                      help="px,py,pz,vx,vy,vz,radius")
    verify = sub.add_parser("verify", help="run the acceptance criteria")
    verify.add_argument("--tier", choices=("fast", "full"), default="fast")
    verify.add_argument("--out", type=Path, default=None,
                        help="write the JSON report here")
    return parser


def _load(args):
    from .scenario import load_scenario
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    return scenario


def _cmd_simulate(args) -> int:
    from .simulator import emit_outputs, run_scenario
    scenario = _load(args)
    _say(f"simulating {args.scenario} for {scenario.duration} s")
    log = run_scenario(scenario)
    written = emit_outputs(log, args.out, args.format)
    for path in written:
        _say(f"wrote {path}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    from .contact_estimation import estimate_wrench, nominal_torque
    from .simulator import load_jsonl
    scenario = _load(args)
    log = load_jsonl(args.log)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "estimates.csv"
    # pair each step's sensed torques with the previous step's motion, the
    # same measure-then-act alignment the online estimator uses; offline
    # re-estimation with unchanged parameters reproduces the logged wrench
    with open(path, "w", newline="") as fh:
        fh.write("t,fx,fy,moment\n")
        prev = None
        for rec in log.base_records:
            if prev is None:
                fh.write(f"{rec.t:.12g},0,0,0\n")
                prev = rec
                continue
            nominal = nominal_torque(
                scenario.base, scenario.friction, prev.pose[2],
                np.asarray(prev.body_accel), np.asarray(prev.wheel_accels),
                np.asarray(prev.roller_rates),
                np.asarray(prev.roller_accels), slope=scenario.slope)
            est = estimate_wrench(nominal, np.asarray(rec.sensed),
                                  prev.pose[2], scenario.base)
            fh.write(f"{rec.t:.12g},{est.force_x:.12g},{est.force_y:.12g},"
                     f"{est.torque:.12g}\n")
            prev = rec
    _say(f"wrote {path}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    import dataclasses
    from .collision_prediction import write_risk_csv
    from .simulator import run_scenario
    scenario = _load(args)
    # strip base-loop events so only the prediction stack runs
    scenario = dataclasses.replace(scenario, pushes=[], impacts=[],
                                   faults=[], wall=None)
    log = run_scenario(scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "risk.csv"
    write_risk_csv(log.final_risks, path)
    _say(f"trigger tick: {log.trigger_tick}")
    _say(f"wrote {path}")
    return EXIT_OK


def _cmd_learn(args) -> int:
    from .planning.kinematics import demo_arm
    from .planning.roadmap import prm_learn, save_roadmap
    chain = demo_arm()
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    seed_config = np.array([0.0, 0.4, 0.6, 0.2])
    goal = chain.tip_position(seed_config) if args.constrained else None
    _say(f"learning roadmap: budget {args.budget}, "
         f"{'constrained' if args.constrained else 'unconstrained'}")
    roadmap = prm_learn(chain, rng, budget=args.budget, goal=goal,
                        seed_config=seed_config, max_extension_steps=4)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = "constrained.omniroadmap" if args.constrained \
        else "unconstrained.omniroadmap"
    path = out / name
    save_roadmap(roadmap, path)
    _say(f"wrote {path} ({roadmap.n_nodes} nodes)")
    return EXIT_OK


def _cmd_plan(args) -> int:
    from .planning.kinematics import demo_arm
    from .planning.planner import DecisionContext, ObjectTrack, \
        decide_and_plan
    from .planning.roadmap import load_roadmap
    chain = demo_arm()
    roadmap = load_roadmap(args.roadmap, chain)
    values = [float(v) for v in args.object.split(",")]
    if len(values) != 7:
        raise ValueError("--object needs px,py,pz,vx,vy,vz,radius")
    obj = ObjectTrack(position=values[:3], velocity=values[3:6],
                      radius=values[6])
    ctx = DecisionContext(constrained=roadmap if roadmap.constrained
                          else roadmap,
                          unconstrained=roadmap)
    q0 = np.array([0.0, 0.4, 0.6, 0.2])
    plan = decide_and_plan(q0, False, ctx, obj)
    print(json.dumps({
        "feasible": plan.feasible,
        "branch": plan.branch,
        "link": plan.link,
        "constraint_violated": plan.constraint_violated,
        "path": plan.path,
    }, indent=2))
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import verify_suite
    report = verify_suite(args.tier)
    for result in report.results:
        print(result.line())
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(report.to_json())
        _say(f"wrote {args.out}")
    return EXIT_OK if report.all_passed else 1


def main(argv=None) -> int:
    from .scenario import ScenarioParseError, ScenarioValidationError
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "estimate": _cmd_estimate,
        "predict": _cmd_predict,
        "learn": _cmd_learn,
        "plan": _cmd_plan,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except ScenarioParseError as exc:
        print(f"scenario parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ScenarioValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
