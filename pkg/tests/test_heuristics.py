import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threshold_rmab.core import RmabInstance, bernoulli_arm
from threshold_rmab.errors import InstanceError, UsageError
from threshold_rmab.heuristics import (GreedyMinPolicy, IncreasingBudgetPolicy, SatisfactionGuard,
                                       SelectorConfig, TruncatedRewardPolicy, baseline, greedy_max,
                                       greedy_min, increasing_budget, make_policy, max_tau,
                                       truncated_reward)
from threshold_rmab.index import IndexProvider


def _guard_from_weights(weights, target):
    """Monotone guard: satisfied once the selected weights add up to target"""
    return lambda selected: sum(weights[i] for i in selected) >= target


def test_greedy_max_examples():
    action, order = greedy_max([3.0, 1.0, 2.0], [1, 1, 1], 2)
    assert action.tolist() == [1, 0, 1]
    assert order == [0, 2]
    assert greedy_max([3.0, 1.0, 2.0], [1, 1, 1], 0)[0].tolist() == [0, 0, 0]
    assert greedy_max([5.0, 3.0], [4, 1], 2)[0].tolist() == [0, 1]


def test_greedy_max_breaks_ties_by_arm_id():
    assert greedy_max([1.0, 2.0, 2.0], [1, 1, 1], 1)[1] == [1]


def test_greedy_min_stops_at_a_sufficient_arm():
    arms = (bernoulli_arm(0, 1.0, 1.0),)
    guard = SatisfactionGuard(arms, [0], SelectorConfig(rho=1.0, threshold=1.0))
    assert greedy_min([1.0], guard).tolist() == [1]


def test_greedy_min_pays_n_on_the_claim_instance(claim_instance):
    provider = IndexProvider(claim_instance.beta)
    states = list(claim_instance.initial_state)
    indices = provider.lambda_plus_vector(claim_instance.arms, states)
    cfg = SelectorConfig(rho=0.9, threshold=1.0)
    guard = SatisfactionGuard(claim_instance.arms, states, cfg)
    action = greedy_min(indices, guard)
    assert action.tolist() == [1] * 51
    assert not guard(range(50))
    assert guard([50])


def test_greedy_min_with_tiny_rho_picks_the_top_index(claim_instance):
    provider = IndexProvider(claim_instance.beta)
    states = list(claim_instance.initial_state)
    indices = provider.lambda_plus_vector(claim_instance.arms, states)
    guard = SatisfactionGuard(claim_instance.arms, states, SelectorConfig(rho=1e-9, threshold=1.0))
    action = greedy_min(indices, guard)
    assert action.sum() == 1
    assert action[0] == 1


def test_increasing_budget_phase_budgets():
    guard = _guard_from_weights([1, 1, 1], 3)
    action, last = increasing_budget([3.0, 2.0, 1.0], [1, 1, 1], guard, m=2)
    assert action.tolist() == [1, 1, 1]
    assert last == 2

    action, last = increasing_budget([1.0, 2.0], [1, 100], _guard_from_weights([1, 1], 2), m=2)
    assert action.tolist() == [1, 1]
    assert last == 128


def test_truncated_reward_prefers_the_sure_arm():
    indices = {0: [0.1, 1.0], 1: [0.2, 0.5], 2: [0.4, 0.25], 3: [0.8, 0.125]}
    guard = _guard_from_weights([0, 1], 1)
    action, _ = truncated_reward(lambda tau: indices[tau], 3, [1, 1], guard, m=2)
    assert action.tolist() == [0, 1]


def test_truncated_reward_leaves_the_index_cache_untouched():
    arms = (bernoulli_arm(0, 0.5, 8.0), bernoulli_arm(1, 1.0, 1.0))
    instance = RmabInstance(arms, 0.9, 1.0, 0.9)
    provider = IndexProvider(0.9)
    before = provider.table(arms).to_frame()
    policy = TruncatedRewardPolicy(SelectorConfig(rho=0.9, threshold=1.0), provider)
    policy.select(instance, [0, 0])
    after = provider.table(arms).to_frame()
    assert before.equals(after)


def test_max_tau():
    assert max_tau([bernoulli_arm(0, 0.5, 8.0), bernoulli_arm(1, 0.5, 3.0)], [0, 0]) == 3
    assert max_tau([bernoulli_arm(0, 0.5, 0.5)], [0]) == 0


def test_baselines():
    rng = np.random.default_rng(0)
    guard = _guard_from_weights([1, 1, 1, 1], 1)
    assert baseline("all_active", 4, guard, rng).tolist() == [1, 1, 1, 1]
    assert baseline("random", 4, guard, rng).sum() == 1
    with pytest.raises(UsageError, match="baseline"):
        baseline("oracle", 4, guard, rng)


def test_persisted_budget_carries_across_steps():
    arms = tuple(bernoulli_arm(i, 0.5, 1.0) for i in range(4))
    instance = RmabInstance(arms, 0.9, 1.0, 0.7)
    cfg = SelectorConfig(rho=0.7, threshold=1.0, persist_budget=True)
    policy = IncreasingBudgetPolicy(cfg, IndexProvider(0.9))
    first = policy.select(instance, [0, 0, 0, 0])
    assert first.sum() == 2
    assert policy.start_budget() == 2
    policy.reset()
    assert policy.start_budget() is None


def test_make_policy_validates_names():
    cfg = SelectorConfig(rho=0.9, threshold=1.0)
    with pytest.raises(UsageError, match="unknown policy 'oracle'"):
        make_policy("oracle", cfg, IndexProvider(0.9))
    with pytest.raises(UsageError, match="index provider"):
        make_policy("greedy_min", cfg)
    assert isinstance(make_policy("greedy_min", cfg, IndexProvider(0.9)), GreedyMinPolicy)
    assert make_policy("all_active", cfg).name == "all_active"


def test_selector_config_validates_multiplier():
    with pytest.raises(InstanceError, match="multiplier"):
        SelectorConfig(rho=0.9, threshold=1.0, m=1.0)


_indices = st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0, 2.0, 4.0]), min_size=1, max_size=8)


@settings(max_examples=200, deadline=None)
@given(data=st.data(), indices=_indices)
def test_unit_cost_min_greedy_equals_increasing_budget(data, indices):
    n = len(indices)
    weights = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    target = data.draw(st.integers(0, 3 * n + 1))
    guard = _guard_from_weights(weights, target)
    by_min = greedy_min(indices, guard)
    by_budget, _ = increasing_budget(indices, [1] * n, guard, m=2)
    assert by_min.tolist() == by_budget.tolist()


@settings(max_examples=200, deadline=None)
@given(data=st.data(), indices=_indices)
def test_min_greedy_adds_nothing_beyond_the_guard(data, indices):
    n = len(indices)
    weights = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    target = data.draw(st.integers(1, 3 * n + 1))
    guard = _guard_from_weights(weights, target)
    selected = np.flatnonzero(greedy_min(indices, guard)).tolist()
    if guard(selected):
        order = sorted(selected, key=lambda i: (-indices[i], i))
        assert not guard(order[:-1])
    else:
        assert len(selected) == n


@settings(max_examples=200, deadline=None)
@given(data=st.data(), indices=_indices)
def test_greedy_max_never_exceeds_the_budget(data, indices):
    n = len(indices)
    costs = data.draw(st.lists(st.floats(0.1, 5.0), min_size=n, max_size=n))
    budget = data.draw(st.floats(0.0, 10.0))
    action, _ = greedy_max(indices, costs, budget)
    assert float(np.dot(action, costs)) <= budget + 1e-9


@settings(max_examples=1000, deadline=None)
@given(data=st.data())
def test_heuristic_outputs_are_guard_sound(data):
    n = data.draw(st.integers(1, 6))
    probs = data.draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    rewards = data.draw(st.lists(st.floats(0.5, 4.0), min_size=n, max_size=n))
    costs = data.draw(st.lists(st.sampled_from([1.0, 2.0, 3.0]), min_size=n, max_size=n))
    indices = data.draw(st.lists(st.floats(0.0, 4.0), min_size=n, max_size=n))
    rho = data.draw(st.floats(0.05, 1.0))
    budget = data.draw(st.floats(0.0, 12.0))
    arms = [bernoulli_arm(i, p, r, c) for i, (p, r, c) in enumerate(zip(probs, rewards, costs))]
    guard = SatisfactionGuard(arms, [0] * n, SelectorConfig(rho=rho, threshold=1.0))
    rng = np.random.default_rng(0)

    outputs = [
        greedy_min(indices, guard),
        increasing_budget(indices, costs, guard)[0],
        truncated_reward(lambda tau: [x / 2 ** tau for x in indices], 2, costs, guard)[0],
        baseline("random", n, guard, rng),
    ]
    for action in outputs:
        selected = np.flatnonzero(action).tolist()
        assert guard(selected) or len(selected) == n

    capped, _ = greedy_max(indices, costs, budget)
    assert float(np.dot(capped, costs)) <= budget + 1e-9
