import numpy as np
import pytest

from omnisafe.scenario import (Scenario, ScenarioParseError,
                               ScenarioValidationError, consumer_rng,
                               load_scenario, parse_keyvalues,
                               scenario_from_dict)


SAMPLE = """
# comment line
duration = 2.5
step = 0.001
seed = 42
base.mass = 35.0
slope.angle_deg = 10.0
friction.magnitude = 0.2
push.0.start = 1.0
push.0.duration = 0.5
push.0.force = 1.0, 0.5
object.0.position = 2.0, 0.0
object.0.velocity = -1.0, 0.0
object.0.radius = 0.25
trajectory.kind = circle
trajectory.radius = 0.4
"""


class TestParsing:
    def test_sample_round_trip(self):
        raw = parse_keyvalues(SAMPLE)
        assert raw["duration"] == 2.5
        assert raw["base.mass"] == 35.0
        assert raw["push.0.force"] == (1.0, 0.5)
        assert raw["trajectory.kind"] == "circle"

    def test_scenario_from_dict(self):
        sc = scenario_from_dict(parse_keyvalues(SAMPLE))
        assert sc.duration == 2.5
        assert sc.base.mass == 35.0
        assert sc.slope is not None
        assert sc.slope.angle == pytest.approx(np.deg2rad(10.0))
        assert len(sc.pushes) == 1
        assert sc.pushes[0].force == (1.0, 0.5)
        assert len(sc.objects) == 1
        assert sc.trajectory.kind == "circle"

    def test_missing_equals_rejected(self):
        with pytest.raises(ScenarioParseError):
            parse_keyvalues("duration 2.5")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ScenarioParseError):
            parse_keyvalues("a = 1\na = 2")

    def test_bad_value_propagates_validation(self):
        raw = parse_keyvalues("duration = -1.0")
        with pytest.raises(ScenarioValidationError):
            scenario_from_dict(raw)

    def test_invalid_base_param(self):
        raw = parse_keyvalues("base.mass = -5.0")
        with pytest.raises(ScenarioValidationError):
            scenario_from_dict(raw)

    def test_unknown_section_key_rejected(self):
        raw = parse_keyvalues("base.flux_capacitance = 1.21")
        with pytest.raises(ScenarioValidationError):
            scenario_from_dict(raw)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "case.scn"
        path.write_text(SAMPLE)
        sc = load_scenario(path)
        assert sc.seed == 42


class TestBundledScenarios:
    @pytest.mark.parametrize("name", [
        "gravity_hold.scn", "motionless_collision.scn",
        "impact_latency.scn", "wall_follow.scn", "ball_intervention.scn",
    ])
    def test_bundled_parse(self, name):
        import importlib.resources
        ref = importlib.resources.files("omnisafe") / "scenarios" / name
        with importlib.resources.as_file(ref) as path:
            sc = load_scenario(path)
        assert isinstance(sc, Scenario)


class TestConsumerRng:
    def test_streams_independent_of_each_other(self):
        a1 = consumer_rng(7, "alpha").normal(size=5)
        b1 = consumer_rng(7, "beta").normal(size=5)
        # adding/removing a consumer does not perturb another stream
        a2 = consumer_rng(7, "alpha").normal(size=5)
        np.testing.assert_array_equal(a1, a2)
        assert not np.allclose(a1, b1)

    def test_seed_changes_stream(self):
        a = consumer_rng(7, "alpha").normal(size=5)
        b = consumer_rng(8, "alpha").normal(size=5)
        assert not np.allclose(a, b)
