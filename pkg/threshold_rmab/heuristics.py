#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Per-step action selection: greedy index heuristics and baselines
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from threshold_rmab.config import (DEFAULT_BUDGET, DEFAULT_BUDGET_MULTIPLIER, ENUMERATION_CAP,
                                   MC_SAMPLES, POLICIES)
from threshold_rmab.core import ArmSpec, RmabInstance
from threshold_rmab.errors import InstanceError, UsageError
from threshold_rmab.index import IndexProvider, whittle_min_from_max
from threshold_rmab.prob import SatisfactionEstimator, SelectionContext

logger = logging.getLogger(__name__)

COST_ATOL = 1e-12

Guard = Callable[[FrozenSet[int]], bool]


@dataclass
class SelectorConfig:
    """Parameters shared by the threshold heuristics at selection time"""

    rho: float
    threshold: float
    m: float = DEFAULT_BUDGET_MULTIPLIER
    prob_estimator: str = "exact"
    mc_samples: int = MC_SAMPLES
    enumeration_cap: int = ENUMERATION_CAP
    budget: float = DEFAULT_BUDGET
    persist_budget: bool = False

    def __post_init__(self):
        if not self.m > 1.0:
            raise InstanceError(f"budget multiplier must exceed 1, got {self.m}", field="m")
        if not 0.0 < self.rho <= 1.0:
            raise InstanceError(f"rho must lie in (0,1], got {self.rho}", field="rho")

    def estimator(self) -> SatisfactionEstimator:
        return SatisfactionEstimator(self.prob_estimator, self.mc_samples, self.enumeration_cap)


class SatisfactionGuard:
    """
    Memoized "satisfaction probability reaches rho" test for selection sets

    Each distinct set is estimated once, so heuristics visiting the same
    sets consume the same random numbers.
    """

    def __init__(self, arms: Sequence[ArmSpec], states: Sequence[int], cfg: SelectorConfig,
                 rng: Optional[np.random.Generator] = None):
        self.arms = arms
        self.states = states
        self.cfg = cfg
        self.estimator = cfg.estimator()
        self.rng = rng
        self.memo: Dict[FrozenSet[int], float] = {}

    def probability(self, selected: Iterable[int]) -> float:
        key = frozenset(selected)
        if key not in self.memo:
            ctx = SelectionContext.from_selection(self.arms, self.states, sorted(key),
                                                  self.cfg.threshold)
            self.memo[key] = self.estimator.probability(ctx, self.rng)
        return self.memo[key]

    def __call__(self, selected: Iterable[int]) -> bool:
        return self.probability(selected) >= self.cfg.rho


def _action(n: int, selected: Iterable[int]) -> np.ndarray:
    action = np.zeros(n, dtype=int)
    action[list(selected)] = 1
    return action


def greedy_max(lambda_plus: Sequence[float], costs: Sequence[float], budget: float,
               exclude: Optional[Set[int]] = None,
               stop: Optional[Guard] = None) -> Tuple[np.ndarray, List[int]]:
    """
    Greedy maximization: add the highest-index arm that fits the remaining budget

    Args:
        lambda_plus: Maximization index per arm at its current state
        costs: Activation cost per arm
        budget: Budget C >= 0
        exclude: Arms that may not be selected
        stop: Optional predicate on the set chosen so far; selection halts once it holds

    Returns:
        (action vector, arms in selection order)
    """
    n = len(lambda_plus)
    excluded = set(exclude or ())
    order: List[int] = []
    remaining = budget
    while True:
        candidates = [i for i in range(n)
                      if i not in excluded and costs[i] <= remaining + COST_ATOL]
        if not candidates:
            break
        best = min(candidates, key=lambda i: (-lambda_plus[i], i))
        order.append(best)
        excluded.add(best)
        remaining -= costs[best]
        if stop is not None and stop(frozenset(order)):
            break
    return _action(n, order), order


def greedy_min(lambda_plus: Sequence[float], guard: Guard) -> np.ndarray:
    """Add arms by increasing minimization index until the guard holds or all are active"""
    n = len(lambda_plus)
    lambda_minus = [whittle_min_from_max(lp) for lp in lambda_plus]
    order = sorted(range(n), key=lambda i: (lambda_minus[i], -lambda_plus[i], i))
    selected: List[int] = []
    for i in order:
        if guard(frozenset(selected)):
            break
        selected.append(i)
    return _action(n, selected)


def _first_budget(costs: Sequence[float]) -> float:
    return float(min(costs))


def _grow_budget(budget: float, costs: Sequence[float], m: float) -> float:
    if budget > 0.0:
        return budget * m
    positive = [c for c in costs if c > 0.0]
    return float(min(positive)) if positive else 1.0


def increasing_budget(lambda_plus: Sequence[float], costs: Sequence[float], guard: Guard,
                      m: float = DEFAULT_BUDGET_MULTIPLIER,
                      start_budget: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """
    Run greedy_max phases with a budget multiplied by m after every phase

    Returns:
        (action vector, budget of the last phase)
    """
    n = len(lambda_plus)
    selected: Set[int] = set()
    budget = _first_budget(costs) if start_budget is None else start_budget
    last = budget
    while not guard(frozenset(selected)) and len(selected) < n:
        _, order = greedy_max(lambda_plus, costs, budget, exclude=selected,
                              stop=lambda chosen: guard(frozenset(selected) | chosen))
        selected.update(order)
        logger.debug(f"Increasing budget phase b={budget:g} added {order}")
        last = budget
        budget = _grow_budget(budget, costs, m)
    return _action(n, selected), last


def truncated_reward(index_for_tau: Callable[[int], Sequence[float]], tau_max: int,
                     costs: Sequence[float], guard: Guard,
                     m: float = DEFAULT_BUDGET_MULTIPLIER,
                     start_budget: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """
    Budget phases that pick the least aggressive reward truncation giving a poor greedy run

    For each phase and each tau = 0..tau_max, greedy_max runs on the indices
    of the truncated rewards min(r/2^tau, 1). A run is poor when every arm it
    leaves unselected has truncated index at most 1/b. The smallest poor tau
    wins, falling back to tau_max. Its arms are added one at a time while the
    guard fails.

    Args:
        index_for_tau: Maps tau to the truncated maximization index of every arm
        tau_max: Largest truncation level, ceil(log2 R_max)
        costs: Activation costs
        guard: Satisfaction predicate on selection sets
        m: Budget multiplier
        start_budget: First phase budget, defaults to the minimum cost

    Returns:
        (action vector, budget of the last phase)
    """
    costs = list(costs)
    n = len(costs)
    selected: Set[int] = set()
    budget = _first_budget(costs) if start_budget is None else start_budget
    last = budget
    while not guard(frozenset(selected)) and len(selected) < n:
        chosen_tau, chosen_order = tau_max, None
        for tau in range(tau_max + 1):
            indices = index_for_tau(tau)
            _, order = greedy_max(indices, costs, budget, exclude=selected)
            left = [i for i in range(n) if i not in selected and i not in order]
            if budget > 0.0:
                poor = all(indices[i] <= 1.0 / budget for i in left)
            else:
                poor = not left
            if poor or tau == tau_max:
                chosen_tau, chosen_order = tau, order
                break
        for i in chosen_order:
            if guard(frozenset(selected)):
                break
            selected.add(i)
        logger.debug(f"Truncated reward phase b={budget:g} tau*={chosen_tau} added {chosen_order}")
        last = budget
        budget = _grow_budget(budget, costs, m)
    return _action(n, selected), last


def baseline(kind: str, n: int, guard: Guard, rng: np.random.Generator) -> np.ndarray:
    """Random arm order until the guard holds, or every arm active"""
    if kind == "all_active":
        return np.ones(n, dtype=int)
    if kind != "random":
        raise UsageError(f"unknown baseline '{kind}'")
    selected: List[int] = []
    for i in rng.permutation(n):
        if guard(frozenset(selected)):
            break
        selected.append(int(i))
    return _action(n, selected)


def max_tau(arms: Sequence[ArmSpec], states: Sequence[int]) -> int:
    """ceil(log2 R_max) over the arms' maximum active rewards at the current states"""
    r_max = max(arm.max_active_reward(int(s)) for arm, s in zip(arms, states))
    if r_max <= 1.0:
        return 0
    return max(0, math.ceil(math.log2(r_max)))


class Policy(ABC):
    """Maps the current joint state to a binary action vector"""

    name = "policy"

    def __init__(self, cfg: SelectorConfig, provider: Optional[IndexProvider] = None):
        self.cfg = cfg
        self.provider = provider

    def reset(self) -> None:
        """Clear any state carried across time steps"""

    def guard(self, instance: RmabInstance, states: Sequence[int],
              rng: Optional[np.random.Generator]) -> SatisfactionGuard:
        return SatisfactionGuard(instance.arms, states, self.cfg, rng)

    def indices(self, instance: RmabInstance, states: Sequence[int],
                tau: Optional[int] = None) -> np.ndarray:
        return self.provider.lambda_plus_vector(instance.arms, states, tau)

    @abstractmethod
    def select(self, instance: RmabInstance, states: Sequence[int],
               rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Action vector for this step"""


class GreedyMaxPolicy(Policy):
    name = "greedy_max"

    def select(self, instance, states, rng=None):
        action, _ = greedy_max(self.indices(instance, states), instance.costs, self.cfg.budget)
        return action


class GreedyMinPolicy(Policy):
    name = "greedy_min"

    def select(self, instance, states, rng=None):
        return greedy_min(self.indices(instance, states), self.guard(instance, states, rng))


class _BudgetPolicy(Policy):
    """Budget-phase heuristics whose budget can persist across time steps"""

    def __init__(self, cfg: SelectorConfig, provider: Optional[IndexProvider] = None):
        super().__init__(cfg, provider)
        self._budget: Optional[float] = None

    def reset(self) -> None:
        self._budget = None

    def start_budget(self) -> Optional[float]:
        return self._budget if self.cfg.persist_budget else None

    def remember(self, budget: float) -> None:
        if self.cfg.persist_budget:
            self._budget = budget


class IncreasingBudgetPolicy(_BudgetPolicy):
    name = "increasing_budget"

    def select(self, instance, states, rng=None):
        action, budget = increasing_budget(self.indices(instance, states), instance.costs,
                                           self.guard(instance, states, rng), self.cfg.m,
                                           self.start_budget())
        self.remember(budget)
        return action


class TruncatedRewardPolicy(_BudgetPolicy):
    name = "truncated_reward"

    def select(self, instance, states, rng=None):
        action, budget = truncated_reward(lambda tau: self.indices(instance, states, tau),
                                          max_tau(instance.arms, states), instance.costs,
                                          self.guard(instance, states, rng), self.cfg.m,
                                          self.start_budget())
        self.remember(budget)
        return action


class RandomPolicy(Policy):
    name = "random"

    def select(self, instance, states, rng=None):
        rng = rng if rng is not None else np.random.default_rng()
        return baseline("random", instance.n, self.guard(instance, states, rng), rng)


class AllActivePolicy(Policy):
    name = "all_active"

    def select(self, instance, states, rng=None):
        return np.ones(instance.n, dtype=int)


POLICY_CLASSES = {cls.name: cls for cls in (GreedyMaxPolicy, GreedyMinPolicy,
                                            IncreasingBudgetPolicy, TruncatedRewardPolicy,
                                            RandomPolicy, AllActivePolicy)}


def make_policy(name: str, cfg: SelectorConfig, provider: Optional[IndexProvider] = None) -> Policy:
    """Instantiate a policy by its configured name"""
    if name not in POLICY_CLASSES:
        raise UsageError(f"unknown policy '{name}' (choose from {', '.join(POLICIES)})")
    policy_cls = POLICY_CLASSES[name]
    if policy_cls not in (RandomPolicy, AllActivePolicy) and provider is None:
        raise UsageError(f"policy '{name}' needs an index provider")
    return policy_cls(cfg, provider)
