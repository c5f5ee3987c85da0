#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Domain model: arms, instances, seeded random streams and one environment step
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from threshold_rmab.errors import ArgumentError, InstanceError

logger = logging.getLogger(__name__)

ROW_ATOL = 1e-9

Generator = np.random.Generator


@dataclass(frozen=True)
class RewardDistribution:
    """Finite discrete reward distribution (support values and their probabilities)"""

    values: Tuple[float, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))

    @classmethod
    def point(cls, value: float) -> "RewardDistribution":
        return cls((value,), (1.0,))

    @classmethod
    def bernoulli(cls, p: float, reward: float) -> "RewardDistribution":
        """Reward `reward` with probability p, else 0"""
        if p >= 1.0:
            return cls.point(reward)
        if p <= 0.0:
            return cls.point(0.0)
        return cls((reward, 0.0), (p, 1.0 - p))

    def validate(self, arm_id: Optional[int] = None) -> None:
        if not self.values or len(self.values) != len(self.probs):
            raise InstanceError("reward support and probabilities must be nonempty and aligned",
                                arm_id=arm_id, field="reward")
        if not all(math.isfinite(v) for v in self.values):
            raise InstanceError("reward values must be finite", arm_id=arm_id, field="reward")
        if any(p < 0.0 or not math.isfinite(p) for p in self.probs):
            raise InstanceError("reward probabilities must be nonnegative", arm_id=arm_id,
                                field="reward")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > ROW_ATOL:
            raise InstanceError(f"reward probabilities sum to {total}, expected 1",
                                arm_id=arm_id, field="reward")

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @property
    def low(self) -> float:
        return min(self.values)

    @property
    def high(self) -> float:
        return max(self.values)

    @property
    def is_deterministic(self) -> bool:
        return len(set(v for v, p in zip(self.values, self.probs) if p > 0.0)) <= 1

    def draw(self, u: float) -> float:
        """Inverse-CDF draw from a uniform u in [0,1)"""
        cdf = np.cumsum(self.probs)
        idx = int(np.searchsorted(cdf, u, side="right"))
        return self.values[min(idx, len(self.values) - 1)]

    def sample(self, rng: Generator, size: int) -> np.ndarray:
        return rng.choice(np.asarray(self.values), size=size, p=_normalized(self.probs))

    def mapped(self, func: Callable[[float], float]) -> "RewardDistribution":
        return RewardDistribution(tuple(func(v) for v in self.values), self.probs)


def _normalized(probs: Sequence[float]) -> np.ndarray:
    arr = np.asarray(probs, dtype=float)
    return arr / arr.sum()


RewardTable = Tuple[Tuple[RewardDistribution, RewardDistribution], ...]


@dataclass(frozen=True, eq=False)
class ArmSpec:
    """
    One finite MDP arm with a binary action

    Args:
        id: Arm identifier, used in diagnostics and index tables
        transition: Array of shape (S, 2, S); transition[s, a] is the next-state distribution
        reward: reward[s][a] is the reward distribution at (state, action)
        cost1: Cost of the active action; the passive action is free
    """

    id: int
    transition: np.ndarray
    reward: RewardTable
    cost1: float = 1.0

    def __post_init__(self):
        transition = np.array(self.transition, dtype=float)
        if transition.ndim != 3 or transition.shape[1] != 2 or \
                transition.shape[0] != transition.shape[2] or transition.shape[0] < 1:
            raise InstanceError(f"transition must have shape (S, 2, S), got {transition.shape}",
                                arm_id=self.id, field="transition")
        if not np.all(np.isfinite(transition)) or np.any(transition < 0.0):
            raise InstanceError("transition probabilities must be finite and nonnegative",
                                arm_id=self.id, field="transition")
        sums = transition.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_ATOL)
        if bad.size:
            s, a = bad[0]
            raise InstanceError(f"transition row (state {s}, action {a}) sums to {sums[s, a]:.12g}",
                                arm_id=self.id, field="transition")
        transition.setflags(write=False)
        object.__setattr__(self, "transition", transition)

        reward = tuple(tuple(row) for row in self.reward)
        if len(reward) != transition.shape[0] or any(len(row) != 2 for row in reward):
            raise InstanceError("reward table must have one (passive, active) pair per state",
                                arm_id=self.id, field="reward")
        for row in reward:
            for dist in row:
                dist.validate(self.id)
        object.__setattr__(self, "reward", reward)

        if not math.isfinite(self.cost1) or self.cost1 < 0.0:
            raise InstanceError(f"cost1 must be a nonnegative finite number, got {self.cost1}",
                                arm_id=self.id, field="cost1")
        object.__setattr__(self, "cost1", float(self.cost1))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def costs(self) -> np.ndarray:
        return np.array([0.0, self.cost1])

    @cached_property
    def expected_reward(self) -> np.ndarray:
        """Mean reward table of shape (S, 2)"""
        return np.array([[dist.mean for dist in row] for row in self.reward])

    @cached_property
    def fingerprint(self) -> str:
        digest = hashlib.sha1()
        digest.update(np.ascontiguousarray(self.transition).tobytes())
        for row in self.reward:
            for dist in row:
                digest.update(np.asarray(dist.values + dist.probs).tobytes())
        digest.update(repr(self.cost1).encode())
        return digest.hexdigest()

    def max_reward(self) -> float:
        """Largest reward magnitude over every (state, action) support"""
        return max(max(abs(v) for v in dist.values) for row in self.reward for dist in row)

    def max_active_reward(self, state: Optional[int] = None) -> float:
        """Maximum possible active reward at one state, or over all states"""
        states = range(self.n_states) if state is None else [self.check_state(state)]
        return max(self.reward[s][1].high for s in states)

    def check_state(self, state: int) -> int:
        if not 0 <= int(state) < self.n_states:
            raise ArgumentError(f"state {state} out of range for arm {self.id} "
                                f"with {self.n_states} states")
        return int(state)

    def with_rewards(self, func: Callable[[float], float], arm_id: Optional[int] = None) -> "ArmSpec":
        """Copy of the arm with every reward support value mapped through func"""
        reward = tuple((row[0].mapped(func), row[1].mapped(func)) for row in self.reward)
        return ArmSpec(self.id if arm_id is None else arm_id, self.transition, reward, self.cost1)


def bernoulli_arm(arm_id: int, p: float, reward: float, cost1: float = 1.0) -> ArmSpec:
    """Single-state arm paying `reward` with probability p when active"""
    return ArmSpec(
        id=arm_id,
        transition=np.ones((1, 2, 1)),
        reward=((RewardDistribution.point(0.0), RewardDistribution.bernoulli(p, reward)),),
        cost1=cost1,
    )


@dataclass(frozen=True, eq=False)
class RmabInstance:
    """A vector of arms plus discount, reward threshold and success probability"""

    arms: Tuple[ArmSpec, ...]
    beta: float
    threshold: float
    success_prob: float = 1.0
    initial_state: Optional[Tuple[int, ...]] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if not self.arms:
            raise InstanceError("an instance needs at least one arm", field="arms")
        if not 0.0 < self.beta < 1.0:
            raise InstanceError(f"beta must lie in (0,1), got {self.beta}", field="beta")
        if not 0.0 < self.success_prob <= 1.0:
            raise InstanceError(f"rho must lie in (0,1], got {self.success_prob}", field="rho")
        if not math.isfinite(self.threshold):
            raise InstanceError("threshold must be finite", field="threshold")
        if self.initial_state is None:
            object.__setattr__(self, "initial_state", tuple(0 for _ in self.arms))
        else:
            initial = tuple(int(s) for s in self.initial_state)
            if len(initial) != len(self.arms):
                raise InstanceError("initial_state length must match the arm count",
                                    field="initial_state")
            for arm, s in zip(self.arms, initial):
                if not 0 <= s < arm.n_states:
                    raise InstanceError(f"initial state {s} out of range", arm_id=arm.id,
                                        field="initial_state")
            object.__setattr__(self, "initial_state", initial)

    @property
    def n(self) -> int:
        return len(self.arms)

    @property
    def costs(self) -> np.ndarray:
        return np.array([arm.cost1 for arm in self.arms])

    def check_joint(self, states: Sequence[int], action: Optional[Sequence[int]] = None) -> None:
        if len(states) != self.n:
            raise ArgumentError(f"joint state has length {len(states)}, expected {self.n}")
        for arm, s in zip(self.arms, states):
            arm.check_state(s)
        if action is not None:
            if len(action) != self.n:
                raise ArgumentError(f"action vector has length {len(action)}, expected {self.n}")
            if any(int(a) not in (0, 1) for a in action):
                raise ArgumentError("action entries must be 0 or 1")


@dataclass
class RngStreams:
    """Independent, deterministically derived generators: one per arm plus one for the policy"""

    arms: List[Generator]
    policy: Generator

    @classmethod
    def from_seed(cls, seed: Union[int, Sequence[int]], n: int) -> "RngStreams":
        children = np.random.SeedSequence(seed).spawn(n + 1)
        return cls([np.random.default_rng(c) for c in children[:n]],
                   np.random.default_rng(children[n]))


def derive_seed(base_seed: int, *path: int) -> int:
    """Stable 32-bit seed derived from a base seed and a path of integers"""
    return int(np.random.SeedSequence([base_seed, *path]).generate_state(1)[0])


def _check_action(action: int) -> int:
    if int(action) not in (0, 1):
        raise ArgumentError(f"action must be 0 or 1, got {action}")
    return int(action)


def sample_reward(arm: ArmSpec, state: int, action: int, rng: Generator) -> float:
    """Draw one reward at (state, action)"""
    s = arm.check_state(state)
    a = _check_action(action)
    return arm.reward[s][a].draw(rng.random())


def _arm_generators(rng: Union[Generator, RngStreams, Sequence[Generator]], n: int) -> List[Generator]:
    if isinstance(rng, RngStreams):
        generators = rng.arms
    elif isinstance(rng, np.random.Generator):
        return [rng] * n
    else:
        generators = list(rng)
    if len(generators) != n:
        raise ArgumentError(f"expected {n} arm generators, got {len(generators)}")
    return generators


def step_arm(arm: ArmSpec, state: int, action: int, gen: Generator) -> Tuple[int, float]:
    """
    Advance one arm; always consumes two uniforms (reward, then transition)
    so stream usage does not depend on the action
    """
    u_reward, u_next = gen.random(2)
    reward = arm.reward[state][action].draw(u_reward)
    cdf = np.cumsum(arm.transition[state, action])
    next_state = min(int(np.searchsorted(cdf, u_next, side="right")), arm.n_states - 1)
    return next_state, reward


def step(instance: RmabInstance, states: Sequence[int], action: Sequence[int],
         rng: Union[Generator, RngStreams, Sequence[Generator]]) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    One joint environment step

    Args:
        instance: The RMAB instance
        states: Current joint state
        action: Binary action vector
        rng: A single generator, per-arm generators, or RngStreams

    Returns:
        (next joint state, per-arm realized rewards, total activation cost)
    """
    instance.check_joint(states, action)
    generators = _arm_generators(rng, instance.n)
    next_states = np.empty(instance.n, dtype=int)
    rewards = np.empty(instance.n)
    for i, (arm, s, a) in enumerate(zip(instance.arms, states, action)):
        next_states[i], rewards[i] = step_arm(arm, int(s), int(a), generators[i])
    total_cost = float(np.dot(np.asarray(action, dtype=float), instance.costs))
    return next_states, rewards, total_cost


def discounted_sum(values: Sequence[float], beta: float) -> float:
    """Sum of beta^(t-1) * v_t over a finite sequence"""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return 0.0
    return float(np.dot(beta ** np.arange(arr.size), arr))
