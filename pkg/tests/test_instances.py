import json

import numpy as np
import pytest

from threshold_rmab.belief import BeliefInstance
from threshold_rmab.core import RmabInstance
from threshold_rmab.errors import ArgumentError, InstanceError, UsageError
from threshold_rmab.index import IndexProvider
from threshold_rmab.instances import (FamilyParams, adversarial_instance, build_family,
                                      claim1_instance, claim1_log, dump_instance,
                                      instance_from_dict, instance_to_dict, load_instance,
                                      uniform_instance)


def test_claim_instance_layout(claim_instance):
    p = claim1_log(0.9) / 50
    assert p == pytest.approx(0.0272, abs=1e-4)
    first = claim_instance.arms[0].reward[0][1]
    assert first.values[0] == pytest.approx(10.0 / p)
    assert first.probs[0] == pytest.approx(p)
    last = claim_instance.arms[50].reward[0][1]
    assert last.values == (1.0,)
    assert np.all(claim_instance.costs == 1.0)


def test_claim_instance_indices(claim_instance):
    provider = IndexProvider(claim_instance.beta)
    for arm in claim_instance.arms[:50]:
        assert provider.lambda_minus(arm, 0) == pytest.approx(0.1, abs=1e-5)
    assert provider.lambda_minus(claim_instance.arms[50], 0) == pytest.approx(1.0, abs=1e-5)


def test_claim_instance_names_the_smallest_valid_size():
    with pytest.raises(ArgumentError, match="n >= 3"):
        claim1_instance(2, 0.9)


def test_adversarial_instance_groups():
    instance = adversarial_instance(20, seed=0)
    reliable, unreliable = instance.arms[:10], instance.arms[10:]
    for arm in reliable:
        assert arm.r == 1.0
        assert arm.stationary == pytest.approx(1.0 - 1e-9, abs=1e-12)
    for arm in unreliable:
        assert arm.r == 4000.0
        assert arm.stationary == pytest.approx(5e-4, rel=1e-9)
        assert arm.r * arm.stationary > max(a.r * a.stationary for a in reliable)
    with pytest.raises(ArgumentError, match="even"):
        adversarial_instance(5)


def test_uniform_instance_rewards_are_balanced():
    instance = uniform_instance(20, seed=0)
    for arm in instance.arms:
        assert 0.9 - 1e-12 <= arm.r * arm.stationary <= 1.1 + 1e-12
    other = uniform_instance(20, seed=1)
    assert [a.p01 for a in instance.arms] != [a.p01 for a in other.arms]
    assert uniform_instance(1, seed=0).n == 1


def test_build_family_dispatch(tmp_path):
    assert isinstance(build_family(FamilyParams("claim1", 5)), RmabInstance)
    assert isinstance(build_family(FamilyParams("uniform", 4)), BeliefInstance)
    with pytest.raises(UsageError, match="unknown family"):
        FamilyParams("nis", 4)
    with pytest.raises(UsageError, match="instance path"):
        build_family(FamilyParams("file", 4))


def test_family_thresholds_default_per_family():
    assert build_family(FamilyParams("uniform", 4)).threshold == 3.0
    assert build_family(FamilyParams("adversarial", 4)).threshold == 1.0
    assert build_family(FamilyParams("claim1", 5)).threshold == 1.0
    assert build_family(FamilyParams("uniform", 4, R=0.5)).threshold == 0.5


def test_tabular_instance_survives_a_file_round_trip(tmp_path, claim_instance):
    path = tmp_path / "claim.json"
    dump_instance(claim_instance, str(path))
    loaded = load_instance(str(path))
    assert instance_to_dict(loaded) == instance_to_dict(claim_instance)


def test_belief_instance_survives_a_file_round_trip(tmp_path):
    instance = adversarial_instance(4, seed=2)
    path = tmp_path / "adv.json"
    dump_instance(instance, str(path))
    loaded = load_instance(str(path))
    assert isinstance(loaded, BeliefInstance)
    assert instance_to_dict(loaded) == instance_to_dict(instance)


def _tabular_doc(row=(0.5, 0.5), cost1=1.0):
    return {
        "beta": 0.9, "threshold": 1.0, "rho": 0.9,
        "arms": [{
            "cost1": cost1,
            "transition": [[list(row), [0.5, 0.5]], [[1.0, 0.0], [0.0, 1.0]]],
            "reward": [[[{"v": 0.0, "p": 1.0}], [{"v": 1.0, "p": 1.0}]]] * 2,
        }],
    }


def test_parse_errors_name_the_arm_and_field():
    assert instance_from_dict(_tabular_doc()).n == 1
    with pytest.raises(InstanceError, match=r"arm 0, field 'transition'"):
        instance_from_dict(_tabular_doc(row=(0.5, 0.4)))
    with pytest.raises(InstanceError, match=r"arm 0, field 'cost1'"):
        instance_from_dict(_tabular_doc(cost1=-1.0))
    with pytest.raises(InstanceError, match="missing required key 'beta'"):
        instance_from_dict({"threshold": 1.0, "arms": []})


def test_mixed_arm_kinds_are_rejected():
    doc = _tabular_doc()
    doc["arms"].append({"p01": 0.2, "p11": 0.8, "r": 1.0})
    with pytest.raises(InstanceError, match="mix"):
        instance_from_dict(doc)


def test_malformed_json_reports_the_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "beta": 0.9,\n  "arms": [,]\n}')
    with pytest.raises(InstanceError, match="line 3") as excinfo:
        load_instance(str(path))
    assert isinstance(excinfo.value.__cause__, json.JSONDecodeError)
    with pytest.raises(InstanceError, match="does not exist") as excinfo:
        load_instance(str(tmp_path / "missing.json"))
    assert isinstance(excinfo.value.__cause__, FileNotFoundError)


def test_dumped_instance_is_plain_json(tmp_path):
    path = tmp_path / "uniform.json"
    dump_instance(uniform_instance(3, seed=4), str(path))
    doc = json.loads(path.read_text())
    assert doc["meta"]["family"] == "uniform"
    assert len(doc["arms"]) == 3
