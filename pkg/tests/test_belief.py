import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from threshold_rmab.belief import (BeliefArm, BeliefInstance, BeliefState, belief_tree_q,
                                   belief_update, initial_surrogate_state, stationary_probability,
                                   surrogate_beliefs, surrogate_index, surrogate_label, tabularize,
                                   whittle_belief)
from threshold_rmab.errors import ArgumentError, InstanceError
from threshold_rmab.index import solve_policy_iteration, whittle_max


def test_belief_update_examples():
    assert belief_update(0.3, 0.1, 0.9, 1, observation=1) == 0.9
    assert belief_update(0.3, 0.1, 0.9, 1, observation=0) == 0.1
    assert belief_update(0.5, 0.2, 0.8, 0) == pytest.approx(0.5)


def test_belief_update_rejects_inconsistent_observations():
    with pytest.raises(ArgumentError, match="passive"):
        belief_update(0.5, 0.2, 0.8, 0, observation=1)
    with pytest.raises(ArgumentError, match="observation"):
        belief_update(0.5, 0.2, 0.8, 1)
    with pytest.raises(ArgumentError, match="omega"):
        belief_update(1.5, 0.2, 0.8, 0)


@given(p01=st.floats(0.01, 0.99), p11=st.floats(0.01, 0.99), omega=st.floats(0.0, 1.0))
def test_passive_updates_converge_to_stationary(p01, p11, omega):
    for _ in range(2000):
        omega = belief_update(omega, p01, p11, 0)
    assert omega == pytest.approx(stationary_probability(p01, p11), abs=1e-6)


def test_memoryless_chain_has_constant_beliefs():
    arm = BeliefArm(p01=0.4, p11=0.4, r=2.0)
    surrogate = tabularize(arm, 5)
    np.testing.assert_allclose(surrogate_beliefs(arm, 5), 0.4)
    np.testing.assert_allclose(surrogate.expected_reward[:, 1], 0.8)


def test_surrogate_beliefs_follow_the_chain():
    arm = BeliefArm(p01=0.1, p11=0.9, r=1.0)
    omega = surrogate_beliefs(arm, 30)
    assert omega[1, 0] == pytest.approx(0.9)
    assert omega[1, 1] == pytest.approx(0.82)
    assert omega[0, 0] == pytest.approx(0.1)
    assert omega[1, -1] == pytest.approx(arm.stationary)


def test_single_level_surrogate_keeps_one_step_beliefs():
    arm = BeliefArm(p01=0.3, p11=0.7, r=1.0)
    surrogate = tabularize(arm, 1)
    assert surrogate.n_states == 2
    np.testing.assert_allclose(surrogate.expected_reward[:, 1], [0.3, 0.7])


def test_surrogate_state_labels():
    assert surrogate_index(1, 1, 30) == 30
    assert surrogate_index(0, 45, 30) == 29
    assert surrogate_label(31, 30) == (1, 2)
    assert surrogate_label(initial_surrogate_state(30), 30) == (0, 30)


def test_memoryless_index_equals_expected_reward():
    arm = BeliefArm(p01=0.4, p11=0.4, r=2.0)
    surrogate = tabularize(arm, 5)
    for s in range(surrogate.n_states):
        assert whittle_max(surrogate, s, 0.9) == pytest.approx(0.8, abs=1e-5)


def test_fresher_good_news_has_a_higher_index():
    arm = BeliefArm(p01=0.1, p11=0.9, r=1.0)
    surrogate = tabularize(arm, 10)
    high = whittle_max(surrogate, surrogate_index(1, 1, 10), 0.9)
    low = whittle_max(surrogate, surrogate_index(0, 1, 10), 0.9)
    assert high >= low


def test_surrogate_values_match_the_exact_belief_process():
    arm = BeliefArm(p01=0.1, p11=0.9, r=1.0)
    K, beta = 30, 0.9
    surrogate = tabularize(arm, K)
    state = surrogate_index(1, 1, K)
    lam = whittle_max(surrogate, state, beta)
    table = solve_policy_iteration(surrogate, lam, beta).table
    q0, q1 = belief_tree_q(arm, 1, 1, lam, beta, depth=200)
    assert table[state, 0] == pytest.approx(q0, abs=1e-3)
    assert table[state, 1] == pytest.approx(q1, abs=1e-3)


def test_index_stabilizes_in_the_surrogate_depth():
    arm = BeliefArm(p01=0.1, p11=0.9, r=1.0)
    fresh = BeliefState(omega=0.9, last_observation=1, steps=1)
    assert whittle_belief(arm, fresh, 0.9, 30) == pytest.approx(
        whittle_belief(arm, fresh, 0.9, 60), abs=1e-4)


def test_untracked_belief_maps_to_the_nearest_surrogate_state():
    arm = BeliefArm(p01=0.1, p11=0.9, r=1.0)
    guess = BeliefState(omega=0.8999)
    fresh = BeliefState(omega=0.9, last_observation=1, steps=1)
    assert whittle_belief(arm, guess, 0.9, 10) == whittle_belief(arm, fresh, 0.9, 10)


def test_belief_arm_invariants():
    with pytest.raises(InstanceError, match="p01"):
        BeliefArm(p01=0.0, p11=0.5, r=1.0, id=3)
    with pytest.raises(InstanceError, match="arm 4"):
        BeliefArm(p01=0.5, p11=0.5, r=-1.0, id=4)
    with pytest.raises(ArgumentError, match="depth"):
        belief_tree_q(BeliefArm(0.2, 0.8, 1.0), 1, 1, 0.5, 0.9, depth=0)


def test_surrogate_instance_starts_at_the_stationary_belief():
    arms = (BeliefArm(0.2, 0.8, 1.0, id=0), BeliefArm(0.3, 0.6, 2.0, id=1))
    instance = BeliefInstance(arms, 0.9, 1.0, 0.9, horizon_k=8)
    view = instance.surrogate()
    assert view.n == 2
    assert view.initial_state == (initial_surrogate_state(8),) * 2
    assert view.success_prob == 0.9
