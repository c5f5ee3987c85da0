#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Compile a bounded-tape Turing machine into a deterministic RMAB instance

One special arm chooses between paying for a short warm-up and simulating
the machine; n cell arms simulate the machine one tape cell each, driven by a
shared clock (j, k). Every period of n*(2|Q|+1) steps runs one machine step:
transition at (0,0), copy windows k = 1..|Q|, validation windows
k = |Q|+1..2|Q|, then idle steps of window 0.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from threshold_rmab.config import REDUCTION_STATE_CAP, REDUCTION_T_CAP
from threshold_rmab.core import ArmSpec, RewardDistribution, RmabInstance
from threshold_rmab.errors import ArgumentError, CapacityError
from threshold_rmab.reduction.turing import MOVES, TmSpec

logger = logging.getLogger(__name__)

Label = Tuple


@dataclass(frozen=True)
class ReductionParams:
    """Derived constants: machine bound T, discount beta, warm-up length and clock period"""

    alpha: float
    R: float
    T: int
    beta: float
    warmup: int
    period: int


def derive_params(tm: TmSpec, alpha: float = 2.0, R: float = 1.0,
                  t_cap: int = REDUCTION_T_CAP) -> ReductionParams:
    """
    T = |Q| n^(|Gamma|+2), beta = exp(ln(0.5)/(T + 5 alpha^2)), warm-up ceil(2 alpha)

    Raises:
        CapacityError: T exceeds t_cap
    """
    if alpha < 1:
        raise ArgumentError(f"alpha must be at least 1, got {alpha}")
    if R <= 0:
        raise ArgumentError(f"R must be positive, got {R}")
    n_q, n = len(tm.states), tm.tape_len
    T = n_q * n ** (len(tm.gamma) + 2)
    if T > t_cap:
        raise CapacityError(f"machine bound T={T} exceeds the cap {t_cap}")
    beta = math.exp(math.log(0.5) / (T + 5.0 * alpha ** 2))
    return ReductionParams(alpha, R, T, beta, math.ceil(2 * alpha), n * (2 * n_q + 1))


def next_clock(j: int, k: int, n: int, n_q: int) -> Tuple[int, int]:
    """j cycles 1..n-1, 0 inside each window; k advances after j = 0"""
    if j == 0:
        k = (k + 1) % (2 * n_q + 1)
    return (j + 1) % n, k


@dataclass
class CompiledReduction:
    """The compiled instance plus the labels needed to decode and drive it"""

    tm: TmSpec
    params: ReductionParams
    instance: RmabInstance
    labels: List[List[Label]]
    next_table: List[np.ndarray] = field(default_factory=list)
    reward_table: List[np.ndarray] = field(default_factory=list)
    cost_table: List[np.ndarray] = field(default_factory=list)

    @property
    def n_cells(self) -> int:
        return self.tm.tape_len

    @property
    def n_q(self) -> int:
        return len(self.tm.states)

    def label(self, arm: int, state: int) -> Label:
        return self.labels[arm][state]

    def cell_labels(self, states) -> List[Label]:
        return [self.labels[i + 1][int(s)] for i, s in enumerate(states[1:])]


class _CellBuilder:
    """Enumerates the states of cell i and their deterministic dynamics"""

    def __init__(self, tm: TmSpec, params: ReductionParams, i: int):
        self.tm = tm
        self.params = params
        self.i = i
        self.n = tm.tape_len
        self.n_q = len(tm.states)
        self.R = params.R

    def labels(self) -> List[Label]:
        labels: List[Label] = [("warm", w) for w in range(self.params.warmup)]
        for j in range(self.n):
            for k in range(2 * self.n_q + 1):
                for sym in range(len(self.tm.gamma)):
                    for tm in range(self.n_q + 1):
                        labels.append(("sim", tm, sym, False, 0, j, k))
                    for tm in range(1, self.n_q + 1):
                        for nxt in range(self.n):
                            labels.append(("sim", tm, sym, True, nxt, j, k))
        labels.extend(("trap", g) for g in range(len(self.tm.gamma)))
        return labels

    def initial(self) -> Label:
        word = self.tm.initial_tape()
        tm = self.tm.states.index(self.tm.start) + 1 if self.i == 0 else 0
        return ("sim", tm, self.tm.gamma.index(word[self.i]), False, 0, 0, 0)

    def step(self, label: Label, played: bool) -> Tuple[Label, float]:
        kind = label[0]
        if kind == "warm":
            w = label[1]
            return (("warm", w + 1) if w + 1 < self.params.warmup else self.initial()), 0.0
        if kind == "trap":
            return label, (self.R if played else 0.0)

        _, tm, sym, cur, nxt, j, k = label
        j2, k2 = next_clock(j, k, self.n, self.n_q)
        same = ("sim", tm, sym, cur, nxt, j2, k2)

        if (j, k) == (0, 0):
            if cur:
                return ("sim", 0, sym, False, 0, j2, k2), 0.0
            if not tm:
                return same, 0.0
            q = self.tm.states[tm - 1]
            if q in self.tm.halting:
                return ("trap", sym), self.R
            q2, g2, move = self.tm.delta[(q, self.tm.gamma[sym])]
            sym2 = self.tm.gamma.index(g2)
            if q2 in self.tm.halting:
                return ("trap", sym2), self.R
            head = min(max(self.i + MOVES[move], 0), self.n - 1)
            return ("sim", self.tm.states.index(q2) + 1, sym2, True, head, j2, k2), self.R

        if k == 0:
            return same, (self.R if cur else 0.0)

        if k <= self.n_q:
            if cur:
                return same, (0.0 if (k == tm and nxt == j) else self.R)
            if played and self.i == j:
                return ("sim", k, sym, False, 0, j2, k2), self.R
            return same, 0.0

        v = k - self.n_q
        if not cur and self.i == j and tm and v == tm:
            return same, -self.R
        if cur and v == tm and nxt == j:
            return same, 2.0 * self.R
        return same, (self.R if cur else 0.0)


def _special_labels(warmup: int) -> List[Label]:
    labels: List[Label] = [("s0",)]
    labels.extend(("A", w) for w in range(1, warmup))
    labels.append(("A_done",))
    labels.extend(("B", w) for w in range(1, warmup))
    labels.append(("B_done",))
    return labels


def _special_step(label: Label, played: bool, warmup: int, R: float) -> Tuple[Label, float]:
    def advance(branch: str, w: int) -> Label:
        return (branch, w) if w < warmup else (f"{branch}_done",)

    kind = label[0]
    if kind == "s0":
        return advance("A" if played else "B", 1), R
    if kind == "A":
        return advance("A", label[1] + 1), (R if played else 0.0)
    if kind == "B":
        return advance("B", label[1] + 1), R
    if kind == "A_done":
        return label, R
    return label, 0.0


def _cell_cost(label: Label, played: bool) -> float:
    """Cell plays are free except in the trap"""
    return 1.0 if played and label[0] == "trap" else 0.0


def _build_arm(arm_id: int, labels: List[Label], step, cost, cost1: float):
    index: Dict[Label, int] = {label: s for s, label in enumerate(labels)}
    n_states = len(labels)
    transition = np.zeros((n_states, 2, n_states))
    next_table = np.zeros((n_states, 2), dtype=int)
    reward_table = np.zeros((n_states, 2))
    cost_table = np.zeros((n_states, 2))
    points: Dict[float, RewardDistribution] = {}
    reward = []
    for s, label in enumerate(labels):
        row = []
        for a in (0, 1):
            nxt, r = step(label, bool(a))
            t = index[nxt]
            transition[s, a, t] = 1.0
            next_table[s, a] = t
            reward_table[s, a] = r
            cost_table[s, a] = cost(label, bool(a))
            row.append(points.setdefault(r, RewardDistribution.point(r)))
        reward.append(tuple(row))
    arm = ArmSpec(arm_id, transition, tuple(reward), cost1)
    return arm, next_table, reward_table, cost_table


def compile_tm(tm: TmSpec, params: ReductionParams,
               state_cap: int = REDUCTION_STATE_CAP) -> CompiledReduction:
    """
    Emit n+1 deterministic arms: the special arm (id 0) then cell arms 1..n

    The special arm costs 1 when played. Cell arms are free to play except in
    their trap states, which cost 1; that per-state cost lives in cost_table,
    while the emitted ArmSpec carries the cost of every non-trap state (0).

    Raises:
        CapacityError: a cell arm would exceed state_cap states
    """
    n_q, n, n_g = len(tm.states), tm.tape_len, len(tm.gamma)
    per_cell = params.warmup + n * (2 * n_q + 1) * n_g * (n_q + 1 + n_q * n) + n_g
    if per_cell > state_cap:
        raise CapacityError(f"cell arms would need {per_cell} states, above the cap {state_cap}")

    special = _special_labels(params.warmup)
    arm, nxt, rew, cost = _build_arm(
        0, special, lambda label, played: _special_step(label, played, params.warmup, params.R),
        lambda label, played: float(played), 1.0)
    arms, labels, next_table, reward_table, cost_table = [arm], [special], [nxt], [rew], [cost]
    for i in range(n):
        builder = _CellBuilder(tm, params, i)
        cell_labels = builder.labels()
        arm, nxt, rew, cost = _build_arm(i + 1, cell_labels, builder.step, _cell_cost, 0.0)
        arms.append(arm)
        labels.append(cell_labels)
        next_table.append(nxt)
        reward_table.append(rew)
        cost_table.append(cost)

    instance = RmabInstance(tuple(arms), params.beta, params.R, 1.0,
                            initial_state=tuple(0 for _ in arms),
                            meta={"family": "reduction", "alpha": params.alpha, "T": params.T})
    logger.info(f"Compiled TM with |Q|={n_q}, n={n}, |Gamma|={n_g} into {n + 1} arms "
                f"({per_cell} states per cell), beta={params.beta:.6f}")
    return CompiledReduction(tm, params, instance, labels, next_table, reward_table, cost_table)
