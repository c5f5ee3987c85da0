#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Hidden two-state arms and their finite belief-state surrogate
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from threshold_rmab.config import BELIEF_HORIZON_K, INDEX_TOL
from threshold_rmab.core import ArmSpec, RewardDistribution, RmabInstance
from threshold_rmab.errors import ArgumentError, InstanceError
from threshold_rmab.index import whittle_max
from threshold_rmab.utils.cache import LRUCache, cached

logger = logging.getLogger(__name__)

_SURROGATES = LRUCache(max_size=4096)


@dataclass(frozen=True)
class BeliefArm:
    """
    Arm whose two-state chain is observed only when the arm is played

    Args:
        p01: Probability of moving 0 -> 1
        p11: Probability of staying in 1
        r: Reward collected when played in state 1
        cost1: Activation cost
        id: Arm identifier
    """

    p01: float
    p11: float
    r: float
    cost1: float = 1.0
    id: int = 0

    def __post_init__(self):
        for name in ("p01", "p11"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InstanceError(f"{name} must lie in (0,1), got {value}", arm_id=self.id,
                                    field=name)
        if not self.r > 0.0 or not math.isfinite(self.r):
            raise InstanceError(f"reward must be positive, got {self.r}", arm_id=self.id, field="r")
        if not self.cost1 >= 0.0 or not math.isfinite(self.cost1):
            raise InstanceError(f"cost1 must be nonnegative, got {self.cost1}", arm_id=self.id,
                                field="cost1")

    @property
    def stationary(self) -> float:
        return stationary_probability(self.p01, self.p11)

    def next_prob(self, y: int) -> float:
        """Probability of state 1 one step after observing y"""
        return self.p11 if y == 1 else self.p01


@dataclass
class BeliefState:
    """Probability of hidden state 1 plus the observation bookkeeping"""

    omega: float
    last_observation: Optional[int] = None
    steps: int = 0

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ArgumentError(f"omega must lie in [0,1], got {self.omega}")


def stationary_probability(p01: float, p11: float) -> float:
    return p01 / (1.0 - p11 + p01)


def belief_update(omega: float, p01: float, p11: float, action: int,
                  observation: Optional[int] = None) -> float:
    """
    One-step belief update

    Active with observed y resets to p_y1; passive propagates the chain.
    """
    if not 0.0 <= omega <= 1.0:
        raise ArgumentError(f"omega must lie in [0,1], got {omega}")
    if action == 1:
        if observation not in (0, 1):
            raise ArgumentError("an active step needs an observation of 0 or 1")
        return p11 if observation == 1 else p01
    if action != 0:
        raise ArgumentError(f"action must be 0 or 1, got {action}")
    if observation is not None:
        raise ArgumentError("a passive step cannot carry an observation")
    return omega * p11 + (1.0 - omega) * p01


def surrogate_beliefs(arm: BeliefArm, horizon_k: int) -> np.ndarray:
    """
    Beliefs of the surrogate states, shape (2, K)

    Row y, column k-1 is the belief k steps after observing y; the last level
    is the stationary probability when K >= 2.
    """
    if horizon_k < 1:
        raise ArgumentError(f"horizon_k must be at least 1, got {horizon_k}")
    omega = np.empty((2, horizon_k))
    for y in (0, 1):
        belief = arm.next_prob(y)
        for k in range(horizon_k):
            omega[y, k] = belief
            belief = belief_update(belief, arm.p01, arm.p11, 0)
    if horizon_k >= 2:
        omega[:, -1] = arm.stationary
    return omega


def surrogate_index(y: int, k: int, horizon_k: int) -> int:
    """Tabular state index of surrogate state (y, k), k in 1..K"""
    return y * horizon_k + (min(max(k, 1), horizon_k) - 1)


def surrogate_label(index: int, horizon_k: int) -> Tuple[int, int]:
    return index // horizon_k, index % horizon_k + 1


def initial_surrogate_state(horizon_k: int) -> int:
    """Index of (0, K), the stationary belief"""
    return surrogate_index(0, horizon_k, horizon_k)


@cached(_SURROGATES, key_func=lambda arm, horizon_k=BELIEF_HORIZON_K: (arm, horizon_k))
def tabularize(arm: BeliefArm, horizon_k: int = BELIEF_HORIZON_K) -> ArmSpec:
    """
    Finite arm over surrogate states (last observation y, passive steps k)

    Playing pays r with the state's belief and moves to (observed, 1);
    resting moves (y, k) to (y, min(k+1, K)).
    """
    omega = surrogate_beliefs(arm, horizon_k)
    n_states = 2 * horizon_k
    transition = np.zeros((n_states, 2, n_states))
    reward = []
    for y in (0, 1):
        for k in range(1, horizon_k + 1):
            s = surrogate_index(y, k, horizon_k)
            w = float(omega[y, k - 1])
            transition[s, 0, surrogate_index(y, k + 1, horizon_k)] = 1.0
            transition[s, 1, surrogate_index(1, 1, horizon_k)] += w
            transition[s, 1, surrogate_index(0, 1, horizon_k)] += 1.0 - w
            reward.append((RewardDistribution.point(0.0), RewardDistribution.bernoulli(w, arm.r)))
    return ArmSpec(id=arm.id, transition=transition, reward=tuple(reward), cost1=arm.cost1)


def nearest_surrogate_state(arm: BeliefArm, belief_state: BeliefState, horizon_k: int) -> int:
    """Surrogate state for a belief: exact when the bookkeeping is known, else nearest omega"""
    if belief_state.last_observation in (0, 1) and belief_state.steps >= 1:
        return surrogate_index(belief_state.last_observation, belief_state.steps, horizon_k)
    omega = surrogate_beliefs(arm, horizon_k).ravel()
    return int(np.argmin(np.abs(omega - belief_state.omega)))


def whittle_belief(arm: BeliefArm, belief_state: BeliefState, beta: float,
                   horizon_k: int = BELIEF_HORIZON_K, tol: float = INDEX_TOL) -> float:
    """Maximization index of a belief arm, computed on its surrogate"""
    surrogate = tabularize(arm, horizon_k)
    state = nearest_surrogate_state(arm, belief_state, horizon_k)
    return whittle_max(surrogate, state, beta, tol)


def belief_tree_q(arm: BeliefArm, y: int, k: int, lam: float, beta: float,
                  depth: int) -> Tuple[float, float]:
    """
    Finite-horizon Q values on the exact belief process (no stationary cut-off)

    Backward induction over (last observation, steps since) for `depth`
    decisions, max direction with multiplier lam.

    Returns:
        (Q passive, Q active) at (y, k)
    """
    if depth < 1 or k < 1 or y not in (0, 1):
        raise ArgumentError("belief_tree_q needs depth >= 1, k >= 1 and y in {0,1}")
    k_max = k + depth + 1
    omega = np.empty((2, k_max + 1))
    for obs in (0, 1):
        belief = arm.next_prob(obs)
        for step in range(1, k_max + 1):
            omega[obs, step] = belief
            belief = belief_update(belief, arm.p01, arm.p11, 0)
    omega[:, 0] = omega[:, 1]

    value = np.zeros((2, k_max + 1))
    q0 = q1 = value
    for _ in range(depth):
        shifted = np.concatenate([value[:, 1:], value[:, -1:]], axis=1)
        q0 = beta * shifted
        q1 = omega * arm.r - lam * arm.cost1 + beta * (omega * value[1, 1] + (1 - omega) * value[0, 1])
        value = np.maximum(q0, q1)
    return float(q0[y, k]), float(q1[y, k])


@dataclass(frozen=True, eq=False)
class BeliefInstance:
    """Hidden two-state arms plus discount, threshold, success probability and surrogate depth"""

    arms: Tuple[BeliefArm, ...]
    beta: float
    threshold: float
    success_prob: float = 1.0
    horizon_k: int = BELIEF_HORIZON_K
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if not self.arms:
            raise InstanceError("an instance needs at least one arm", field="arms")
        if not 0.0 < self.beta < 1.0:
            raise InstanceError(f"beta must lie in (0,1), got {self.beta}", field="beta")
        if not 0.0 < self.success_prob <= 1.0:
            raise InstanceError(f"rho must lie in (0,1], got {self.success_prob}", field="rho")
        if self.horizon_k < 1:
            raise InstanceError(f"horizon_k must be at least 1, got {self.horizon_k}",
                                field="horizon_k")

    @property
    def n(self) -> int:
        return len(self.arms)

    def surrogate(self) -> RmabInstance:
        """Tabular instance over surrogate states, starting from the stationary belief"""
        arms = tuple(tabularize(arm, self.horizon_k) for arm in self.arms)
        start = initial_surrogate_state(self.horizon_k)
        logger.debug(f"Tabularized {self.n} belief arms with K={self.horizon_k}")
        return RmabInstance(arms, self.beta, self.threshold, self.success_prob,
                            initial_state=tuple(start for _ in arms), meta=dict(self.meta))
