import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threshold_rmab.core import RewardDistribution
from threshold_rmab.errors import ArgumentError, CapacityError, UsageError
from threshold_rmab.instances import claim1_log
from threshold_rmab.prob import (SatisfactionEstimator, SelectionContext, exact_satisfaction_prob,
                                 hoeffding_lower_bound, mc_satisfaction_prob)


def _ctx(distributions, threshold=1.0):
    return SelectionContext(tuple(distributions), threshold)


def _coin(p=0.5, value=1.0):
    return RewardDistribution.bernoulli(p, value)


def test_exact_examples():
    assert exact_satisfaction_prob(_ctx([_coin(), _coin()])) == pytest.approx(0.75, abs=1e-12)
    assert exact_satisfaction_prob(_ctx([RewardDistribution.point(1.0)])) == 1.0


def test_exact_claim_instance_failure_probability():
    p = claim1_log(0.9) / 50
    ctx = _ctx([_coin(p, 10.0 / p)] * 50)
    failure = 1.0 - exact_satisfaction_prob(ctx)
    assert failure == pytest.approx((1.0 - p) ** 50, abs=1e-9)
    assert failure == pytest.approx(0.252, abs=1e-3)
    assert failure > 0.1


def test_empty_selection():
    assert exact_satisfaction_prob(_ctx([], 1.0)) == 0.0
    assert exact_satisfaction_prob(_ctx([], 0.0)) == 1.0
    assert mc_satisfaction_prob(_ctx([], 1.0), 10) == 0.0


def test_exact_handles_negative_supports():
    ctx = _ctx([RewardDistribution((-1.0, 2.0), (0.5, 0.5)), _coin()], 1.0)
    # sums: -1, 0, 2, 3 with equal mass
    assert exact_satisfaction_prob(ctx) == pytest.approx(0.5)


def test_exact_respects_the_enumeration_cap():
    ctx = _ctx([_coin(0.5, 1.0), _coin(0.5, 2.0), _coin(0.5, 4.0)], 100.0)
    with pytest.raises(CapacityError, match="cap"):
        exact_satisfaction_prob(ctx, cap=4)


def test_exact_falls_back_to_monte_carlo(caplog):
    ctx = _ctx([_coin(0.5, 1.0), _coin(0.5, 2.0), _coin(0.5, 4.0)], 100.0)
    estimator = SatisfactionEstimator("exact", mc_samples=500, cap=4)
    with caplog.at_level(logging.WARNING):
        assert estimator.probability(ctx, np.random.default_rng(0)) == 0.0
    assert "Monte Carlo" in caplog.text


def test_monte_carlo_examples():
    rng = np.random.default_rng(1)
    assert mc_satisfaction_prob(_ctx([RewardDistribution.point(1.0)]), 100, rng) == 1.0
    assert abs(mc_satisfaction_prob(_ctx([_coin(), _coin()]), 100_000, rng) - 0.75) < 0.01
    with pytest.raises(ArgumentError, match="samples"):
        mc_satisfaction_prob(_ctx([_coin()]), 0, rng)


def test_hoeffding_examples():
    assert hoeffding_lower_bound(_ctx([_coin(0.5, 1.0)], 1.0)) == 0.0
    four = _ctx([RewardDistribution((1.0, 0.0), (0.9, 0.1))] * 4, 2.0)
    expected = 1.0 - math.exp(-2.0 * 1.6 ** 2 / 4.0)
    assert hoeffding_lower_bound(four) == pytest.approx(expected, abs=1e-12)
    assert hoeffding_lower_bound(four) == pytest.approx(0.7217, abs=1e-3)
    assert hoeffding_lower_bound(_ctx([RewardDistribution.point(3.0)], 2.0)) == 1.0


def test_hoeffding_needs_bounded_supports():
    unbounded = RewardDistribution((math.inf, 0.0), (0.5, 0.5))
    with pytest.raises(ArgumentError, match="bounded"):
        hoeffding_lower_bound(_ctx([unbounded]))


def test_unknown_estimator_is_a_usage_error():
    with pytest.raises(UsageError, match="bernstein"):
        SatisfactionEstimator("bernstein")


def test_estimators_agree_on_random_selections():
    gen = np.random.default_rng(2718)
    samples = 100_000
    within = 0
    trials = 50
    for _ in range(trials):
        k = int(gen.integers(1, 11))
        dists = [RewardDistribution((float(gen.uniform(0.0, 1.0)), 0.0), (p, 1.0 - p))
                 for p in gen.uniform(0.05, 0.95, size=k)]
        ctx = _ctx(dists, float(gen.uniform(0.0, 2.0)))
        exact = exact_satisfaction_prob(ctx)
        assert hoeffding_lower_bound(ctx) <= exact + 1e-12
        mc = mc_satisfaction_prob(ctx, samples, gen)
        sigma = math.sqrt(max(exact * (1.0 - exact), 1e-12) / samples)
        within += abs(mc - exact) <= 3 * sigma + 1e-12
    assert within >= 48


_atoms = st.lists(st.tuples(st.floats(0.0, 5.0), st.floats(0.05, 1.0)), min_size=1, max_size=3)


def _dist(atoms):
    total = sum(w for _, w in atoms)
    return RewardDistribution(tuple(v for v, _ in atoms), tuple(w / total for _, w in atoms))


@settings(max_examples=100, deadline=None)
@given(base=st.lists(_atoms, min_size=0, max_size=4), extra=_atoms,
       threshold=st.floats(0.0, 8.0))
def test_adding_a_nonnegative_arm_never_lowers_the_probability(base, extra, threshold):
    before = exact_satisfaction_prob(_ctx([_dist(a) for a in base], threshold))
    after = exact_satisfaction_prob(_ctx([_dist(a) for a in base] + [_dist(extra)], threshold))
    assert after >= before - 1e-9
