import json
import subprocess
import sys

import numpy as np
import pytest

from omnisafe.cli import main


GOOD = """
duration = 0.3
step = 0.002
seed = 6
trajectory.kind = hold
push.0.start = 0.05
push.0.duration = 0.1
push.0.point = -0.3, 0.0
push.0.force = 2.0, 0.0
"""


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "case.scn"
    path.write_text(GOOD)
    return path


class TestExitCodes:
    def test_simulate_ok(self, scenario_file, tmp_path):
        out = tmp_path / "out"
        code = main(["simulate", "--scenario", str(scenario_file),
                     "--out", str(out)])
        assert code == 0
        assert (out / "base.csv").exists()

    def test_parse_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.scn"
        bad.write_text("this is not a key value line\n")
        assert main(["simulate", "--scenario", str(bad),
                     "--out", str(tmp_path / "o")]) == 2

    def test_validation_error_exit_3(self, tmp_path):
        bad = tmp_path / "bad.scn"
        bad.write_text("duration = -2.0\n")
        assert main(["simulate", "--scenario", str(bad),
                     "--out", str(tmp_path / "o")]) == 3

    def test_unknown_key_exit_3(self, tmp_path):
        bad = tmp_path / "bad.scn"
        bad.write_text("base.not_a_field = 1.0\n")
        assert main(["simulate", "--scenario", str(bad),
                     "--out", str(tmp_path / "o")]) == 3


class TestSubcommands:
    def test_seed_override_changes_jsonl(self, scenario_file, tmp_path):
        text = GOOD + ("object.0.position = 2.0, 0.0\n"
                       "object.0.velocity = -0.5, 0.0\n"
                       "object.0.radius = 0.1\n"
                       "object.0.sensor_sigma = 0.05\n"
                       "object.1.position = 0.0, 0.0\n"
                       "object.1.velocity = 0.0, 0.0\n"
                       "object.1.radius = 0.2\n"
                       "object.1.sensor_sigma = 0.05\n")
        path = tmp_path / "noisy.scn"
        path.write_text(text)
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        main(["simulate", "--scenario", str(path), "--out", str(a),
              "--format", "jsonl"])
        main(["simulate", "--scenario", str(path), "--out", str(b),
              "--format", "jsonl", "--seed", "99"])
        main(["simulate", "--scenario", str(path), "--out", str(c),
              "--format", "jsonl"])
        assert (a / "run.jsonl").read_bytes() == (c / "run.jsonl").read_bytes()
        assert (a / "run.jsonl").read_bytes() != (b / "run.jsonl").read_bytes()

    def test_estimate_from_log(self, scenario_file, tmp_path):
        from omnisafe.simulator import load_jsonl
        sim_out = tmp_path / "sim"
        main(["simulate", "--scenario", str(scenario_file),
              "--out", str(sim_out), "--format", "jsonl"])
        est_out = tmp_path / "est"
        code = main(["estimate", "--scenario", str(scenario_file),
                     "--log", str(sim_out / "run.jsonl"),
                     "--out", str(est_out)])
        assert code == 0
        lines = (est_out / "estimates.csv").read_text().splitlines()
        assert lines[0] == "t,fx,fy,moment"
        # the push shows up in the re-estimated force magnitudes
        best = max(float(line.split(",")[1]) for line in lines[1:])
        assert best > 1.0
        # offline re-estimation reproduces the online wrench stream
        log = load_jsonl(sim_out / "run.jsonl")
        for line, rec in zip(lines[2:], log.base_records[1:]):
            fx, fy, m = (float(v) for v in line.split(",")[1:])
            assert fx == pytest.approx(rec.wrench[0], abs=1e-9)
            assert fy == pytest.approx(rec.wrench[1], abs=1e-9)
            assert m == pytest.approx(rec.wrench[2], abs=1e-9)

    def test_predict_writes_risk(self, tmp_path):
        path = tmp_path / "pred.scn"
        path.write_text(
            "duration = 0.4\nstep = 0.005\nseed = 2\n"
            "trajectory.kind = hold\n"
            "object.0.position = 2.0, 0.0\n"
            "object.0.velocity = -1.0, 0.0\n"
            "object.0.radius = 0.1\n"
            "object.0.sensor_sigma = 0.03\n"
            "object.1.position = 0.0, 0.0\n"
            "object.1.velocity = 0.0, 0.0\n"
            "object.1.radius = 0.2\n"
            "object.1.sensor_sigma = 0.03\n")
        out = tmp_path / "out"
        assert main(["predict", "--scenario", str(path),
                     "--out", str(out)]) == 0
        header = (out / "risk.csv").read_text().splitlines()[0]
        assert header == "step,pair,p_ic,p_ac,imminent"

    def test_learn_then_plan(self, tmp_path):
        out = tmp_path / "maps"
        assert main(["learn", "--budget", "150", "--seed", "3",
                     "--out", str(out)]) == 0
        roadmap = out / "unconstrained.omniroadmap"
        assert roadmap.exists()
        assert roadmap.read_bytes()[:8] == b"OMNIRV1\x00"
        code = main(["plan", "--roadmap", str(roadmap),
                     "--object", "0.3,0.2,0.9,0.0,0.0,-0.2,0.05",
                     "--out", str(out)])
        assert code == 0

    def test_console_script_help(self):
        proc = subprocess.run(
            [sys.executable, "-m", "omnisafe.cli", "--help"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        for name in ("simulate", "estimate", "predict", "learn", "plan",
                     "verify"):
            assert name in proc.stdout

    def test_log_env_var_controls_verbosity(self, scenario_file, tmp_path,
                                            monkeypatch, capsys):
        monkeypatch.setenv("OMNISAFE_LOG", "quiet")
        main(["simulate", "--scenario", str(scenario_file),
              "--out", str(tmp_path / "q")])
        assert capsys.readouterr().out == ""
        monkeypatch.setenv("OMNISAFE_LOG", "info")
        main(["simulate", "--scenario", str(scenario_file),
              "--out", str(tmp_path / "v")])
        assert "wrote" in capsys.readouterr().out


class TestVerifyFaultInjection:
    def test_perturbed_friction_fails_only_its_criterion(self):
        from omnisafe.base_model import RollerFrictionParams
        from omnisafe.verify import (VerifyConfig,
                                     criterion_roller_friction_model,
                                     criterion_smith_predictor,
                                     criterion_multicontact)
        good = VerifyConfig()
        bad = VerifyConfig(friction=RollerFrictionParams(magnitude=0.35,
                                                         scaling=0.4))
        assert criterion_roller_friction_model(good).passed
        assert not criterion_roller_friction_model(bad).passed
        # unrelated criteria are unaffected by the perturbation
        assert criterion_smith_predictor(bad).passed
        assert criterion_multicontact(bad, 10).passed

    def test_report_json_schema(self):
        from omnisafe.verify import (VerifyConfig, VerifyReport,
                                     criterion_fsm_trace)
        report = VerifyReport(tier="fast",
                              results=[criterion_fsm_trace(VerifyConfig())])
        data = json.loads(report.to_json())
        assert data["tier"] == "fast"
        assert data["passed"] is True
        assert data["criteria"][0]["name"] == "fsm-trace"

    def test_runtime_budget_enforced(self):
        from omnisafe.verify import CriterionResult, _apply_budget
        slow = CriterionResult(name="smith-predictor", passed=True,
                               detail="ok", runtime=3.0)
        assert not _apply_budget(slow).passed
        fast = CriterionResult(name="smith-predictor", passed=True,
                               detail="ok", runtime=0.2)
        assert _apply_budget(fast).passed
