import logging
from pathlib import Path

import numpy as np
import pytest

from threshold_rmab.core import ArmSpec, RewardDistribution, bernoulli_arm
from threshold_rmab.instances import claim1_instance
from threshold_rmab.reduction import load_tm

TM_DIR = Path(__file__).resolve().parent.parent / "data" / "tm"


def random_arm(rng: np.random.Generator, n_states: int, arm_id: int = 0,
               cost1: float = 1.0) -> ArmSpec:
    """Random arm with Dirichlet transitions and two-point active rewards"""
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, 2))
    reward = []
    for _ in range(n_states):
        value = float(rng.uniform(0.5, 3.0))
        p = float(rng.uniform(0.1, 0.9))
        passive = RewardDistribution.point(float(rng.uniform(0.0, 0.2)))
        reward.append((passive, RewardDistribution((value, 0.0), (p, 1.0 - p))))
    return ArmSpec(arm_id, transition, tuple(reward), cost1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_bernoulli():
    return bernoulli_arm


@pytest.fixture
def claim_instance():
    return claim1_instance(51, 0.9, 1.0)


@pytest.fixture
def halting_tm():
    return load_tm(str(TM_DIR / "halting.json"))


@pytest.fixture
def loop_tm():
    return load_tm(str(TM_DIR / "loop.json"))


@pytest.fixture(autouse=True)
def _restore_root_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
