import json

import pytest

from threshold_rmab.config import ExperimentConfig
from threshold_rmab.errors import InstanceError, UsageError


def test_defaults_follow_the_experiment_protocol():
    cfg = ExperimentConfig().validate()
    assert cfg.beta == 0.9
    assert cfg.T == 10
    assert cfg.reps == 10
    assert cfg.m == 2.0
    assert cfg.R is None


@pytest.mark.parametrize("field, value", [("beta", 1.0), ("rho", 0.0), ("m", 1.0),
                                          ("T", 0), ("reps", 0)])
def test_out_of_range_values_name_the_field(field, value):
    cfg = ExperimentConfig().merged({field: value})
    with pytest.raises(InstanceError, match=f"field '{field}'"):
        cfg.validate()


def test_unknown_names_are_usage_errors():
    with pytest.raises(UsageError, match="unknown policy 'oracle'"):
        ExperimentConfig(policies=["oracle"]).validate()
    with pytest.raises(UsageError, match="unknown family"):
        ExperimentConfig(family="nis").validate()
    with pytest.raises(UsageError, match="prob estimator"):
        ExperimentConfig(prob_estimator="bernstein").validate()


def test_file_values_are_overridden_by_flags(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"reps": 3, "policies": "greedy_min,random", "seed": 5}))
    cfg = ExperimentConfig.from_json(str(path))
    assert cfg.reps == 3
    assert cfg.policies == ["greedy_min", "random"]
    merged = cfg.merged({"reps": 1, "seed": None})
    assert merged.reps == 1
    assert merged.seed == 5


def test_unknown_config_keys_are_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"repetitions": 3}))
    with pytest.raises(UsageError, match="repetitions"):
        ExperimentConfig.from_json(str(path))


def test_broken_config_reports_the_line(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{\n  "reps": 3,\n  oops\n}')
    with pytest.raises(InstanceError, match="line 3"):
        ExperimentConfig.from_json(str(path))
