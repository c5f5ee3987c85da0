#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Decoupled value functions and Whittle indices for the max and min formulations
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from threshold_rmab.config import (INDEX_SOLVER, INDEX_TOL, INDEXABILITY_GRID_POINTS,
                                   LAMBDA_DOUBLINGS, PASSIVE_ATOL, QWI_EPISODE_LENGTH,
                                   QWI_LAMBDA_CAP, QWI_UPDATES)
from threshold_rmab.core import ArmSpec
from threshold_rmab.errors import ArgumentError, UsageError
from threshold_rmab.utils.cache import LRUCache

logger = logging.getLogger(__name__)

MAX = "max"
MIN = "min"
DIRECTIONS = (MAX, MIN)
SOLVERS = ("value_iteration", "policy_iteration")
EXHAUSTIVE_STATE_CAP = 16

INDEX_COLUMNS = ["arm_id", "state", "lambda_plus", "lambda_minus"]


@dataclass
class ValueFunction:
    """Q-style table: table[s, a] is the value of taking a in s and acting optimally after"""

    table: np.ndarray
    lam: float
    direction: str

    def value(self, state: int, action: int) -> float:
        return float(self.table[state, action])

    def passive_strict(self, state: int) -> bool:
        """Passive strictly better at this state; ties resolve to passive being not strict"""
        scale = max(1.0, float(np.max(np.abs(self.table))))
        return bool(self.table[state, 0] - self.table[state, 1] > PASSIVE_ATOL * scale)


def _check_direction(direction: str) -> str:
    if direction not in DIRECTIONS:
        raise ArgumentError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    return direction


def decoupled_reward(arm: ArmSpec, lam: float, direction: str) -> np.ndarray:
    """Per-step Lagrangian reward table of shape (S, 2)"""
    _check_direction(direction)
    if direction == MAX:
        return arm.expected_reward - lam * arm.costs[None, :]
    if lam < 0:
        raise ArgumentError(f"the min-direction multiplier must be nonnegative, got {lam}")
    return lam * arm.expected_reward - arm.costs[None, :]


def solve_decoupled(arm: ArmSpec, lam: float, beta: float, direction: str = MAX,
                    tol: float = INDEX_TOL) -> ValueFunction:
    """
    Value iteration on the decoupled single-arm problem

    Stops once successive sweeps differ by less than tol*(1-beta)/(2*beta) in
    sup norm, so the returned table is within tol of the fixed point.

    Args:
        arm: Arm to solve
        lam: Lagrange multiplier
        beta: Discount factor in (0,1)
        direction: "max" (reward minus lam*cost) or "min" (lam*reward minus cost)
        tol: Target accuracy, must be positive

    Returns:
        ValueFunction holding Q(s, a)
    """
    if tol <= 0:
        raise ArgumentError(f"tol must be positive, got {tol}")
    _check_beta(beta)
    reward = decoupled_reward(arm, lam, direction)
    stop = tol * (1.0 - beta) / (2.0 * beta)
    q = reward.copy()
    while True:
        v = q.max(axis=1)
        q_next = reward + beta * (arm.transition @ v)
        if np.max(np.abs(q_next - q)) < stop:
            return ValueFunction(q_next, lam, direction)
        q = q_next


def _evaluate(arm: ArmSpec, reward: np.ndarray, policy: np.ndarray, beta: float) -> np.ndarray:
    states = np.arange(arm.n_states)
    p_pi = arm.transition[states, policy]
    r_pi = reward[states, policy]
    return np.linalg.solve(np.eye(arm.n_states) - beta * p_pi, r_pi)


def solve_policy_iteration(arm: ArmSpec, lam: float, beta: float,
                           direction: str = MAX) -> ValueFunction:
    """Howard policy iteration; switches action only on strict improvement"""
    _check_beta(beta)
    reward = decoupled_reward(arm, lam, direction)
    policy = np.zeros(arm.n_states, dtype=int)
    states = np.arange(arm.n_states)
    for _ in range(10 * arm.n_states + 100):
        v = _evaluate(arm, reward, policy, beta)
        q = reward + beta * (arm.transition @ v)
        scale = max(1.0, float(np.max(np.abs(q))))
        other = 1 - policy
        improve = q[states, other] > q[states, policy] + 1e-12 * scale
        if not improve.any():
            return ValueFunction(q, lam, direction)
        policy = np.where(improve, other, policy)
    logger.warning(f"Policy iteration did not stabilize for arm {arm.id} at lambda={lam}")
    return ValueFunction(q, lam, direction)


def exhaustive_q(arm: ArmSpec, lam: float, beta: float, direction: str = MAX) -> ValueFunction:
    """Optimal Q table by evaluating all 2^S stationary deterministic policies"""
    if arm.n_states > EXHAUSTIVE_STATE_CAP:
        raise ArgumentError(f"exhaustive enumeration is limited to {EXHAUSTIVE_STATE_CAP} states")
    _check_beta(beta)
    reward = decoupled_reward(arm, lam, direction)
    best = np.full(arm.n_states, -np.inf)
    for bits in itertools.product((0, 1), repeat=arm.n_states):
        best = np.maximum(best, _evaluate(arm, reward, np.array(bits), beta))
    return ValueFunction(reward + beta * (arm.transition @ best), lam, direction)


def _check_beta(beta: float) -> None:
    if not 0.0 < beta < 1.0:
        raise ArgumentError(f"beta must lie in (0,1), got {beta}")


def _solver(name: str, tol: float) -> Callable[[ArmSpec, float, float, str], ValueFunction]:
    if name == "policy_iteration":
        return solve_policy_iteration
    if name == "value_iteration":
        return lambda arm, lam, beta, direction: solve_decoupled(arm, lam, beta, direction, tol)
    raise ArgumentError(f"unknown solver {name!r}; choose from {SOLVERS}")


def whittle_max(arm: ArmSpec, state: int, beta: float, tol: float = INDEX_TOL,
                solver: str = INDEX_SOLVER) -> float:
    """
    Maximization Whittle index: the smallest lambda making passive strictly optimal

    Bisection over [0, lambda_hi] with lambda_hi = max_reward/min(cost1, 1) + 1,
    doubled while passive is not yet strictly better.

    Returns:
        The index, 0 when passive already wins at lambda ~ 0, +inf when it never wins
    """
    s = arm.check_state(state)
    if tol <= 0:
        raise ArgumentError(f"tol must be positive, got {tol}")
    solve = _solver(solver, tol)

    def passive_strict(lam: float) -> bool:
        return solve(arm, lam, beta, MAX).passive_strict(s)

    if arm.cost1 == 0.0:
        return 0.0 if passive_strict(0.0) else math.inf
    if passive_strict(tol):
        return 0.0

    lo = tol
    hi = arm.max_reward() / min(arm.cost1, 1.0) + 1.0
    doublings = 0
    while not passive_strict(hi):
        lo = hi
        hi *= 2.0
        doublings += 1
        if doublings > LAMBDA_DOUBLINGS:
            logger.debug(f"Arm {arm.id} state {s}: passive never strictly optimal")
            return math.inf

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if passive_strict(mid):
            hi = mid
        else:
            lo = mid
    logger.debug(f"Arm {arm.id} state {s}: lambda+ bracket [{lo:.9g}, {hi:.9g}]")
    return 0.5 * (lo + hi)


def whittle_min(arm: ArmSpec, state: int, beta: float, tol: float = INDEX_TOL,
                solver: str = INDEX_SOLVER) -> float:
    """
    Minimization Whittle index: the largest lambda at which passive stays strictly optimal

    Returns:
        The index, +inf when passive wins for every multiplier, 0 when it never wins
    """
    s = arm.check_state(state)
    if tol <= 0:
        raise ArgumentError(f"tol must be positive, got {tol}")
    solve = _solver(solver, tol)

    def passive_strict(lam: float) -> bool:
        return solve(arm, lam, beta, MIN).passive_strict(s)

    if not passive_strict(0.0):
        return 0.0

    lo, hi = 0.0, 1.0
    doublings = 0
    while passive_strict(hi):
        lo = hi
        hi *= 2.0
        doublings += 1
        if doublings > LAMBDA_DOUBLINGS:
            return math.inf

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if passive_strict(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def whittle_min_from_max(lambda_plus: float) -> float:
    """Minimization index from the maximization index: 1/lambda+ with 1/0 = inf"""
    if math.isnan(lambda_plus) or lambda_plus < 0:
        raise ArgumentError(f"lambda_plus must be nonnegative, got {lambda_plus}")
    if lambda_plus == 0.0:
        return math.inf
    if math.isinf(lambda_plus):
        return 0.0
    return 1.0 / lambda_plus


@dataclass
class IndexabilityReport:
    indexable_on_grid: bool
    violations: List[Tuple[int, float, float]] = field(default_factory=list)
    min_violations: List[Tuple[int, float, float]] = field(default_factory=list)


def default_lambda_grid(arm: ArmSpec, points: int = INDEXABILITY_GRID_POINTS) -> np.ndarray:
    """Evenly spaced multipliers on [0, max_reward/min(cost1, 1) + 1]"""
    if points < 1:
        raise ArgumentError(f"grid needs at least one point, got {points}")
    cost = min(arm.cost1, 1.0) or 1.0
    return np.linspace(0.0, arm.max_reward() / cost + 1.0, points)


def check_indexability(arm: ArmSpec, beta: float, lambda_grid: Optional[Sequence[float]] = None,
                       check_min: bool = False, solver: str = INDEX_SOLVER,
                       tol: float = INDEX_TOL) -> IndexabilityReport:
    """
    Certify indexability on a finite multiplier grid

    For every state the predicate "passive strictly optimal" must switch on at
    most once along the ascending grid. With check_min the min-direction
    predicate is also checked on the reciprocal grid.
    Without a grid, default_lambda_grid is used.
    """
    grid = np.asarray(default_lambda_grid(arm) if lambda_grid is None else lambda_grid,
                      dtype=float)
    if grid.size == 0:
        raise ArgumentError("lambda grid must not be empty")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise ArgumentError("lambda grid must be nonnegative and ascending")
    solve = _solver(solver, tol)

    predicate = np.array([[solve(arm, lam, beta, MAX).passive_strict(s)
                           for s in range(arm.n_states)] for lam in grid])
    violations = _switch_backs(predicate, grid, on_then_off=True)

    min_violations: List[Tuple[int, float, float]] = []
    if check_min:
        mus = np.sort(1.0 / grid[grid > 0])
        if mus.size:
            min_pred = np.array([[solve(arm, mu, beta, MIN).passive_strict(s)
                                  for s in range(arm.n_states)] for mu in mus])
            min_violations = _switch_backs(min_pred, mus, on_then_off=False)

    report = IndexabilityReport(not violations and not min_violations, violations, min_violations)
    if not report.indexable_on_grid:
        logger.warning(f"Arm {arm.id}: {len(violations) + len(min_violations)} indexability "
                       f"violations on a {grid.size}-point grid")
    return report


def _switch_backs(predicate: np.ndarray, grid: np.ndarray,
                  on_then_off: bool) -> List[Tuple[int, float, float]]:
    """(state, lam, lam') pairs where the predicate reverses its allowed direction"""
    found = []
    for s in range(predicate.shape[1]):
        column = predicate[:, s]
        for t in range(len(grid) - 1):
            if on_then_off:
                bad = any(column[:t + 1]) and not column[t + 1]
                earlier = int(np.argmax(column[:t + 1]))
            else:
                bad = (not all(column[:t + 1])) and column[t + 1]
                earlier = int(np.argmin(column[:t + 1]))
            if bad:
                found.append((s, float(grid[earlier]), float(grid[t + 1])))
    return found


def default_fast_step(visits: np.ndarray) -> np.ndarray:
    return 1.0 / np.ceil(visits / 100.0)


def default_slow_step(k: int) -> float:
    return 1.0 / (1.0 + k * math.log(k) / 500.0) if k > 1 else 1.0


def qwi_tabular(arm: ArmSpec, beta: float, episodes: int = QWI_UPDATES,
                step_size_schedule: Optional[Tuple[Callable, Callable]] = None,
                rng: Optional[np.random.Generator] = None,
                episode_length: int = QWI_EPISODE_LENGTH,
                lambda_cap: float = QWI_LAMBDA_CAP, average_tail: float = 0.5) -> np.ndarray:
    """
    Two-timescale tabular Q-learning of the minimization index of every state

    One Q table per reference state learns the V_min Bellman fixed point at
    that state's current multiplier (fast timescale); the multiplier moves
    toward the indifference Q(s,0) = Q(s,1) (slow timescale). Exploration is
    uniform over actions; each episode restarts from a uniform random state.

    Args:
        arm: Arm to learn
        beta: Discount factor
        episodes: Number of episodes (updates = episodes * episode_length)
        step_size_schedule: (fast, slow); fast maps visit counts to step sizes, slow maps k
        rng: Generator driving exploration and the simulated arm
        episode_length: Steps per episode
        lambda_cap: Multipliers are clipped to [0, cap]; hitting the cap reports +inf
        average_tail: Fraction of final iterates averaged into the estimate

    Returns:
        Array of lambda- estimates, one per state
    """
    if episodes < 1 or episode_length < 1:
        raise ArgumentError("episodes and episode_length must be at least 1")
    _check_beta(beta)
    rng = rng if rng is not None else np.random.default_rng()
    fast, slow = step_size_schedule or (default_fast_step, default_slow_step)

    n_states = arm.n_states
    refs = np.arange(n_states)
    q = np.zeros((n_states, n_states, 2))
    lam = np.zeros(n_states)
    visits = np.zeros((n_states, 2))
    costs = arm.costs
    cdfs = np.cumsum(arm.transition, axis=2)

    total = episodes * episode_length
    tail_start = int(total * (1.0 - average_tail))
    lam_sum = np.zeros(n_states)
    k = 0
    for _ in range(episodes):
        s = int(rng.integers(n_states))
        for _ in range(episode_length):
            k += 1
            a = int(rng.integers(2))
            u_reward, u_next = rng.random(2)
            reward = arm.reward[s][a].draw(u_reward)
            s_next = min(int(np.searchsorted(cdfs[s, a], u_next, side="right")), n_states - 1)

            visits[s, a] += 1
            alpha = float(fast(visits[s, a]))
            target = lam * reward - costs[a] + beta * q[:, s_next, :].max(axis=1)
            q[:, s, a] += alpha * (target - q[:, s, a])

            lam = np.clip(lam + slow(k) * (q[refs, refs, 0] - q[refs, refs, 1]), 0.0, lambda_cap)
            if k > tail_start:
                lam_sum += lam
            s = s_next

    estimate = lam_sum / max(1, total - tail_start)
    capped = lam >= lambda_cap
    if capped.any():
        logger.warning(f"Arm {arm.id}: QWI multipliers hit the cap {lambda_cap} at states "
                       f"{np.flatnonzero(capped).tolist()}; reporting +inf")
    return np.where(capped, math.inf, estimate)


@dataclass
class IndexRow:
    arm_id: int
    state: int
    lambda_plus: float
    lambda_minus: float


@dataclass
class IndexTable:
    """Per (arm, state) maximization and minimization indices"""

    rows: List[IndexRow] = field(default_factory=list)

    def add(self, arm_id: int, state: int, lambda_plus: float) -> None:
        self.rows.append(IndexRow(arm_id, state, lambda_plus, whittle_min_from_max(lambda_plus)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(row) for row in self.rows], columns=INDEX_COLUMNS)


def truncate_arm(arm: ArmSpec, tau: int) -> ArmSpec:
    """Arm with every reward replaced by min(r / 2^tau, 1)"""
    scale = 2.0 ** tau
    return arm.with_rewards(lambda v: min(v / scale, 1.0))


class IndexProvider:
    """
    Memoized maximization indices per (arm, state, truncation level)

    Args:
        beta: Discount factor
        tol: Bisection tolerance
        source: "exact" (bisection) or "qwi" (tabular Q-learning estimates)
        cache: Shared cache; a fresh one is created when omitted
        qwi_updates: Update budget for the qwi source
        seed: Seed for the qwi source
    """

    def __init__(self, beta: float, tol: float = INDEX_TOL, source: str = "exact",
                 cache: Optional[LRUCache] = None, qwi_updates: int = QWI_UPDATES,
                 seed: int = 0, solver: str = INDEX_SOLVER):
        if source not in ("exact", "qwi"):
            raise UsageError(f"unknown index source '{source}'")
        _check_beta(beta)
        self.beta = beta
        self.tol = tol
        self.source = source
        self.cache = cache if cache is not None else LRUCache()
        self.qwi_updates = qwi_updates
        self.seed = seed
        self.solver = solver
        self._truncated: Dict[Tuple[str, int], ArmSpec] = {}

    def _key(self, arm: ArmSpec, state: int) -> tuple:
        return (arm.fingerprint, state, self.beta, self.tol, self.source)

    def _base_lambda_plus(self, arm: ArmSpec, state: int) -> float:
        key = self._key(arm, state)
        if self.source == "exact":
            return self.cache.get_or_compute(
                key, lambda: whittle_max(arm, state, self.beta, self.tol, self.solver))

        if key not in self.cache:
            rng = np.random.default_rng([self.seed, arm.id])
            minus = qwi_tabular(arm, self.beta, episodes=self.qwi_updates, rng=rng)
            for s, lam_minus in enumerate(minus):
                self.cache.set(self._key(arm, s), whittle_min_from_max(float(lam_minus)))
        return self.cache.get(key)

    def lambda_plus(self, arm: ArmSpec, state: int, tau: Optional[int] = None) -> float:
        """Maximization index, optionally under the reward truncation min(r/2^tau, 1)"""
        state = arm.check_state(state)
        if tau is None:
            return self._base_lambda_plus(arm, state)
        if tau < 0:
            raise ArgumentError(f"truncation level must be nonnegative, got {tau}")

        scale = 2.0 ** tau
        if all(v / scale <= 1.0 for row in arm.reward for dist in row for v in dist.values):
            # no value is clipped: truncation is a rescaling and the index is homogeneous
            return self._base_lambda_plus(arm, state) / scale
        return self._base_lambda_plus(self.truncated(arm, tau), state)

    def truncated(self, arm: ArmSpec, tau: int) -> ArmSpec:
        key = (arm.fingerprint, tau)
        if key not in self._truncated:
            self._truncated[key] = truncate_arm(arm, tau)
        return self._truncated[key]

    def lambda_minus(self, arm: ArmSpec, state: int) -> float:
        return whittle_min_from_max(self.lambda_plus(arm, state))

    def lambda_plus_vector(self, arms: Sequence[ArmSpec], states: Sequence[int],
                           tau: Optional[int] = None) -> np.ndarray:
        return np.array([self.lambda_plus(arm, int(s), tau) for arm, s in zip(arms, states)])

    def table(self, arms: Sequence[ArmSpec], states: Optional[Sequence[Sequence[int]]] = None) -> IndexTable:
        """Index table over the given states of each arm (all states when omitted)"""
        table = IndexTable()
        for i, arm in enumerate(arms):
            arm_states = range(arm.n_states) if states is None else states[i]
            for s in arm_states:
                table.add(arm.id, int(s), self._base_lambda_plus(arm, int(s)))
        logger.debug(f"Index cache stats: {self.cache.stats()}")
        return table
