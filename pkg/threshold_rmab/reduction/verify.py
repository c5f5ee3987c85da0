#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Desk-scale verification of the compiled reduction
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from threshold_rmab.config import SATISFACTION_ATOL
from threshold_rmab.core import RmabInstance
from threshold_rmab.reduction.compiler import (CompiledReduction, ReductionParams, compile_tm,
                                               next_clock)
from threshold_rmab.reduction.turing import TmSpec, simulate_tm

logger = logging.getLogger(__name__)

Chooser = Callable[[int, np.ndarray], Set[int]]


class ScriptedPolicy:
    """
    Policy driven by decoded arm states of a compiled reduction

    Trap plays are charged through the compiled cost table, so these policies
    run under rollout; run_episode refuses compiled instances.
    """

    def __init__(self, name: str, compiled: CompiledReduction,
                 chooser: Callable[[CompiledReduction, np.ndarray], Set[int]]):
        self.name = name
        self.compiled = compiled
        self.chooser = chooser

    def reset(self) -> None:
        pass

    def select(self, instance: RmabInstance, states: Sequence[int], rng=None) -> np.ndarray:
        action = np.zeros(instance.n, dtype=int)
        action[sorted(self.chooser(self.compiled, np.asarray(states)))] = 1
        return action


def _head(compiled: CompiledReduction, states: np.ndarray) -> Optional[Tuple[int, tuple]]:
    for i, label in enumerate(compiled.cell_labels(states)):
        if label[0] == "sim" and label[3]:
            return i, label
    return None


def _clock(compiled: CompiledReduction, states: np.ndarray) -> Optional[Tuple[int, int]]:
    for label in compiled.cell_labels(states):
        if label[0] == "sim":
            return label[5], label[6]
    return None


def _faithful_choice(compiled: CompiledReduction, states: np.ndarray) -> Set[int]:
    labels = compiled.cell_labels(states)
    for i, label in enumerate(labels):
        if label[0] == "trap":
            return {i + 1}
    head = _head(compiled, states)
    clock = _clock(compiled, states)
    if head is None or clock is None:
        return set()
    _, (_, tm, _, _, nxt, _, _) = head
    j, k = clock
    if 1 <= k <= compiled.n_q and k == tm and j == nxt:
        return {j + 1}
    return set()


def _special_choice(compiled: CompiledReduction, states: np.ndarray) -> Set[int]:
    return {0} if compiled.label(0, int(states[0]))[0] in ("s0", "A") else set()


def faithful_policy(tm: TmSpec, compiled: CompiledReduction) -> ScriptedPolicy:
    """Decline the special arm and play exactly the cell the copy phase asks for"""
    return ScriptedPolicy("faithful", compiled, _faithful_choice)


def special_policy(tm: TmSpec, compiled: CompiledReduction) -> ScriptedPolicy:
    """Play the special arm throughout the warm-up and nothing else"""
    return ScriptedPolicy("special", compiled, _special_choice)


@dataclass
class Rollout:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    costs: np.ndarray

    def reward_sums(self) -> np.ndarray:
        return self.rewards.sum(axis=1)


def rollout(compiled: CompiledReduction, chooser: Chooser, steps: int,
            start: Optional[np.ndarray] = None, t0: int = 0) -> Rollout:
    """
    Deterministic rollout counting every arm's reward, played or not

    Args:
        compiled: The compiled reduction
        chooser: (time, states) -> arms to play
        steps: Number of steps
        start: Initial joint state, the instance start by default
        t0: Time of the first step
    """
    n_arms = compiled.instance.n
    states = np.array(compiled.instance.initial_state if start is None else start, dtype=int)
    trace = np.zeros((steps + 1, n_arms), dtype=int)
    actions = np.zeros((steps, n_arms), dtype=int)
    rewards = np.zeros((steps, n_arms))
    costs = np.zeros(steps)
    trace[0] = states
    for t in range(steps):
        for a in chooser(t0 + t, states):
            actions[t, a] = 1
        for arm in range(n_arms):
            rewards[t, arm] = compiled.reward_table[arm][states[arm], actions[t, arm]]
            costs[t] += compiled.cost_table[arm][states[arm], actions[t, arm]]
            states[arm] = compiled.next_table[arm][states[arm], actions[t, arm]]
        trace[t + 1] = states
    return Rollout(trace, actions, rewards, costs)


@dataclass
class ReductionReport:
    """Outcome of verifying one compiled machine"""

    verdict: str
    tm_steps: int
    rmab_steps: int
    special_cost: float
    faithful_cost: float
    special_preferred: bool
    iff_holds: bool
    faithful_constraint_ok: bool
    special_constraint_ok: bool
    tape_fidelity: bool
    clock_ok: bool
    head_unique: bool
    discount_floor_ok: bool
    trap_cost_ok: bool
    perturbations_tested: int
    perturbations_detected: int
    missed: List[Tuple[int, int, int]] = field(default_factory=list)
    params: Optional[ReductionParams] = None

    @property
    def detection_rate(self) -> float:
        if self.perturbations_tested == 0:
            return 1.0
        return self.perturbations_detected / self.perturbations_tested

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["detection_rate"] = self.detection_rate
        return data


def _discounted(costs: np.ndarray, beta: float) -> float:
    return float(np.dot(beta ** np.arange(costs.size), costs))


def _slot_offsets(compiled: CompiledReduction) -> Dict[Tuple[int, int], int]:
    """Offset of every clock value from the transition step of a round"""
    offsets = {}
    j, k = 0, 0
    for offset in range(compiled.params.period):
        offsets[(j, k)] = offset
        j, k = next_clock(j, k, compiled.n_cells, compiled.n_q)
    return offsets


def _check_tape(compiled: CompiledReduction, states: np.ndarray, tape: Sequence[str],
                prev_head: int, head: int, state: str) -> bool:
    """
    After the transition of a machine step the head cell sits where the
    machine read, holds the new state and points at the new head position
    """
    labels = compiled.cell_labels(states)
    gamma = compiled.tm.gamma
    for i, label in enumerate(labels):
        sym = label[2] if label[0] == "sim" else label[1]
        if gamma[sym] != tape[i]:
            return False
    if state in compiled.tm.halting:
        return labels[prev_head][0] == "trap"
    found = _head(compiled, states)
    if found is None:
        return False
    cell, (_, tm, _, _, nxt, _, _) = found
    return cell == prev_head and nxt == head and tm == compiled.tm.states.index(state) + 1


def _audit_round(compiled: CompiledReduction, start: np.ndarray, t_start: int,
                 offsets: Dict[Tuple[int, int], int]) -> Tuple[int, int, List[Tuple[int, int, int]]]:
    """Substitute every wrong copy in one round and look for the validation shortfall"""
    head = _head(compiled, start)
    if head is None:
        return 0, 0, []
    head_cell, (_, tm, _, _, nxt, _, _) = head
    n_q, R = compiled.n_q, compiled.params.R
    steps = compiled.params.period - 1
    tested = detected = 0
    missed = []
    for c in range(compiled.n_cells):
        if c == head_cell:
            continue
        for v in range(1, n_q + 1):
            if (c, v) == (nxt, tm):
                continue
            play_at = t_start + offsets[(c, v)] - 1

            def chooser(t, states, play_at=play_at, c=c):
                return {c + 1} if t == play_at else set()

            trace = rollout(compiled, chooser, steps, start=start, t0=t_start)
            check = offsets[(c, n_q + v)] - 1
            tested += 1
            if trace.reward_sums()[check] < R - SATISFACTION_ATOL:
                detected += 1
            else:
                missed.append((t_start, c, v))
    return tested, detected, missed


def verify_reduction(tm: TmSpec, params: ReductionParams, horizon_tm_steps: int = 10,
                     compiled: Optional[CompiledReduction] = None) -> ReductionReport:
    """
    Compile the machine, run both canonical policies and audit the construction

    Costs of the faithful policy include the analytic tail 1 per step forever
    once a trap is entered. The perturbation audit replaces the correct copy
    of each simulated round by every other single copy.
    """
    compiled = compiled or compile_tm(tm, params)
    beta, R, W, P = params.beta, params.R, params.warmup, params.period
    direct = simulate_tm(tm, params.T)
    trace_run = simulate_tm(tm, horizon_tm_steps, detect_loops=False)
    steps = W + horizon_tm_steps * P

    faithful = rollout(compiled, lambda t, s: _faithful_choice(compiled, s), steps)
    special = rollout(compiled, lambda t, s: _special_choice(compiled, s), steps)

    faithful_cost = _discounted(faithful.costs, beta)
    trapped = any(label[0] == "trap" for label in compiled.cell_labels(faithful.states[-1]))
    if trapped:
        faithful_cost += beta ** steps / (1.0 - beta)
    special_cost = _discounted(special.costs, beta)
    special_preferred = special_cost < faithful_cost

    halts = direct.halts
    iff_holds = special_preferred == bool(halts) if halts is not None else \
        special_preferred == trapped

    rounds = min(horizon_tm_steps, trace_run.steps)
    tape_ok = all(
        _check_tape(compiled, faithful.states[W + r * P + 1], trace_run.tapes[r + 1],
                    trace_run.heads[r], trace_run.heads[r + 1], trace_run.states[r + 1])
        for r in range(rounds))

    first_period = [_clock(compiled, faithful.states[W + t]) for t in range(min(P, steps - W))]
    clock_ok = None not in first_period and len(set(first_period)) == len(first_period) == P
    for t in range(W, steps + 1):
        clocks = {(label[5], label[6]) for label in compiled.cell_labels(faithful.states[t])
                  if label[0] == "sim"}
        clock_ok = clock_ok and len(clocks) <= 1

    head_unique = True
    for t in range(W + 1, steps + 1):
        labels = compiled.cell_labels(faithful.states[t])
        if any(label[0] == "trap" for label in labels):
            break
        head_unique = head_unique and sum(1 for label in labels if label[0] == "sim" and label[3]) == 1

    offsets = _slot_offsets(compiled)
    tested = detected = 0
    missed: List[Tuple[int, int, int]] = []
    for r in range(rounds):
        t_start = W + r * P + 1
        if t_start + P - 1 > steps:
            break
        t_n, d_n, m_n = _audit_round(compiled, faithful.states[t_start], t_start, offsets)
        tested, detected = tested + t_n, detected + d_n
        missed.extend(m_n)

    report = ReductionReport(
        verdict=direct.verdict,
        tm_steps=direct.steps,
        rmab_steps=steps,
        special_cost=special_cost,
        faithful_cost=faithful_cost,
        special_preferred=special_preferred,
        iff_holds=iff_holds,
        faithful_constraint_ok=bool(np.all(faithful.reward_sums() >= R - SATISFACTION_ATOL)),
        special_constraint_ok=bool(np.all(special.reward_sums() >= R - SATISFACTION_ATOL)),
        tape_fidelity=tape_ok,
        clock_ok=bool(clock_ok),
        head_unique=head_unique,
        discount_floor_ok=beta ** (params.T + 5 * params.alpha ** 2) >= 0.5 - 1e-12,
        trap_cost_ok=(not trapped) or faithful_cost >= 2 * params.alpha ** 2,
        perturbations_tested=tested,
        perturbations_detected=detected,
        missed=missed,
        params=params,
    )
    logger.info(f"Reduction verdict: machine {report.verdict}; special cost "
                f"{special_cost:.4f} vs faithful cost {faithful_cost:.4f}; iff holds: {iff_holds}; "
                f"audit {detected}/{tested}")
    return report
