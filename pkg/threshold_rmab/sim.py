#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Episode execution, discounted-cost accounting and repetition aggregation
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from threshold_rmab.belief import BeliefInstance, surrogate_index
from threshold_rmab.config import INDEX_TOL, INITIAL_BELIEF, SATISFACTION_ATOL
from threshold_rmab.core import RmabInstance, RngStreams, derive_seed, discounted_sum, step
from threshold_rmab.errors import ArgumentError
from threshold_rmab.heuristics import Policy, SelectorConfig, make_policy
from threshold_rmab.index import IndexProvider

logger = logging.getLogger(__name__)

RUN_COLUMNS = ["policy", "rep", "step", "cost", "reward_sum", "constraint_met"]
AGGREGATE_COLUMNS = ["policy", "mean_cost", "std_cost", "violation_rate"]

AnyInstance = Union[RmabInstance, BeliefInstance]


class TabularEnvironment:
    """Arms observed directly; the policy sees the true states"""

    def __init__(self, instance: RmabInstance):
        self.view = instance
        self.states = np.array(instance.initial_state, dtype=int)

    def reset(self, streams: RngStreams) -> np.ndarray:
        self.states = np.array(self.view.initial_state, dtype=int)
        return self.states.copy()

    def advance(self, action: np.ndarray, streams: RngStreams) -> Tuple[np.ndarray, np.ndarray, float]:
        self.states, rewards, cost = step(self.view, self.states, action, streams)
        return self.states.copy(), rewards, cost


class BeliefEnvironment:
    """
    Hidden two-state chains; the policy sees surrogate (observation, age) states

    Hidden states start from the stationary distribution and the surrogate
    from the stationary belief.
    """

    def __init__(self, instance: BeliefInstance, initial_belief: str = INITIAL_BELIEF):
        if initial_belief != "stationary":
            raise ArgumentError(f"unsupported initial belief '{initial_belief}' (only 'stationary')")
        self.instance = instance
        self.initial_belief = initial_belief
        self.view = instance.surrogate()
        self.hidden = np.zeros(instance.n, dtype=int)
        self.states = np.array(self.view.initial_state, dtype=int)

    def reset(self, streams: RngStreams) -> np.ndarray:
        self.hidden = np.array([int(gen.random() < arm.stationary)
                                for arm, gen in zip(self.instance.arms, streams.arms)])
        self.states = np.array(self.view.initial_state, dtype=int)
        return self.states.copy()

    def advance(self, action: np.ndarray, streams: RngStreams) -> Tuple[np.ndarray, np.ndarray, float]:
        k_max = self.instance.horizon_k
        rewards = np.zeros(self.instance.n)
        for i, (arm, gen) in enumerate(zip(self.instance.arms, streams.arms)):
            _, u_next = gen.random(2)
            x = int(self.hidden[i])
            if action[i]:
                rewards[i] = arm.r if x == 1 else 0.0
                self.states[i] = surrogate_index(x, 1, k_max)
            else:
                y, k = divmod(int(self.states[i]), k_max)
                self.states[i] = surrogate_index(y, k + 2, k_max)
            self.hidden[i] = int(u_next < arm.next_prob(x))
        cost = float(np.dot(action, self.view.costs))
        return self.states.copy(), rewards, cost


def make_environment(instance: AnyInstance):
    if instance.meta.get("family") == "reduction":
        raise ArgumentError("compiled reductions keep per-state costs outside their arms; "
                            "score them with reduction.verify.rollout")
    if isinstance(instance, BeliefInstance):
        return BeliefEnvironment(instance)
    if isinstance(instance, RmabInstance):
        return TabularEnvironment(instance)
    raise ArgumentError(f"unsupported instance type {type(instance).__name__}")


@dataclass
class SimResult:
    """Per-step trace of one episode plus its discounted cost and violation count"""

    actions: np.ndarray
    reward_sums: np.ndarray
    step_costs: np.ndarray
    constraint_met: np.ndarray
    beta: float

    @property
    def discounted_cost(self) -> float:
        return discounted_sum(self.step_costs, self.beta)

    @property
    def violations(self) -> int:
        return int(np.sum(~self.constraint_met))

    def to_frame(self, policy: str, rep: int) -> pd.DataFrame:
        return pd.DataFrame({
            "policy": policy,
            "rep": rep,
            "step": np.arange(1, len(self.step_costs) + 1),
            "cost": self.step_costs,
            "reward_sum": self.reward_sums,
            "constraint_met": self.constraint_met.astype(int),
        }, columns=RUN_COLUMNS)


def run_episode(instance: AnyInstance, policy: Policy, horizon: int,
                rng: Union[RngStreams, int]) -> SimResult:
    """
    Simulate one episode of `horizon` steps

    Args:
        instance: Tabular or belief instance
        policy: Selection policy
        horizon: Number of steps T >= 1
        rng: RngStreams, or an integer seed to derive them from

    Returns:
        The episode trace
    """
    if horizon < 1:
        raise ArgumentError(f"horizon must be at least 1, got {horizon}")
    env = make_environment(instance)
    view = env.view
    streams = rng if isinstance(rng, RngStreams) else RngStreams.from_seed(rng, view.n)
    policy.reset()
    states = env.reset(streams)

    actions = np.zeros((horizon, view.n), dtype=int)
    reward_sums = np.zeros(horizon)
    step_costs = np.zeros(horizon)
    met = np.zeros(horizon, dtype=bool)
    for t in range(horizon):
        action = np.asarray(policy.select(view, states, streams.policy), dtype=int)
        states, rewards, cost = env.advance(action, streams)
        actions[t] = action
        reward_sums[t] = float(np.dot(action, rewards))
        step_costs[t] = cost
        met[t] = reward_sums[t] >= view.threshold - SATISFACTION_ATOL
        logger.debug(f"{policy.name} t={t + 1}: selected {np.flatnonzero(action).tolist()} "
                     f"cost={cost:g} reward={reward_sums[t]:g}")
    return SimResult(actions, reward_sums, step_costs, met, view.beta)


@dataclass
class Aggregate:
    """Mean and spread of discounted cost over repetitions, plus the violation rate"""

    policy: str
    mean_cost: float
    std_cost: float
    violation_rate: float
    tail_bound: float = 0.0

    @classmethod
    def from_results(cls, policy: str, results: Sequence[SimResult]) -> "Aggregate":
        costs = np.array([r.discounted_cost for r in results])
        steps = sum(len(r.step_costs) for r in results)
        violations = sum(r.violations for r in results)
        return cls(policy, float(costs.mean()), float(costs.std()), violations / steps)


@dataclass
class ExperimentResult:
    """Every episode of an experiment and the per-policy aggregates"""

    results: Dict[str, List[SimResult]] = field(default_factory=dict)
    aggregates: Dict[str, Aggregate] = field(default_factory=dict)

    def runs_frame(self) -> pd.DataFrame:
        frames = [result.to_frame(policy, rep)
                  for policy, results in self.results.items()
                  for rep, result in enumerate(results)]
        return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=RUN_COLUMNS)

    def aggregate_frame(self) -> pd.DataFrame:
        rows = [{key: getattr(agg, key) for key in AGGREGATE_COLUMNS}
                for agg in self.aggregates.values()]
        return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)


def constant_factory(instance: AnyInstance) -> Callable[[int], AnyInstance]:
    """Factory returning the same instance for every repetition"""
    return _Constant(instance)


class _Constant:
    def __init__(self, instance: AnyInstance):
        self.instance = instance

    def __call__(self, seed: int) -> AnyInstance:
        return self.instance


def selector_config(instance: AnyInstance, **options) -> SelectorConfig:
    return SelectorConfig(rho=instance.success_prob, threshold=instance.threshold, **options)


def _run_job(instance_factory, policy_name: str, rep: int, horizon: int, base_seed: int,
             options: dict, index_source: str) -> SimResult:
    seed = derive_seed(base_seed, rep)
    instance = instance_factory(seed)
    provider = IndexProvider(instance.beta, INDEX_TOL, source=index_source, seed=base_seed)
    policy = make_policy(policy_name, selector_config(instance, **options), provider)
    return run_episode(instance, policy, horizon, seed)


def run_experiment(instance_factory: Callable[[int], AnyInstance], policies: Sequence[str],
                   reps: int, horizon: int, base_seed: int, options: Optional[dict] = None,
                   index_source: str = "exact", workers: int = 1) -> ExperimentResult:
    """
    Run every policy for `reps` repetitions

    Repetition k of every policy uses the seed derived from (base_seed, k)
    for both the instance factory and the random streams; each policy runs
    its own episode.

    Args:
        instance_factory: Maps a repetition seed to an instance
        policies: Policy names
        reps: Repetitions per policy
        horizon: Steps per episode
        base_seed: Root seed
        options: Extra SelectorConfig fields (m, prob_estimator, mc_samples, ...)
        index_source: "exact" or "qwi"
        workers: Process count; 1 runs sequentially with a shared index cache

    Returns:
        Episodes and aggregates keyed by policy name
    """
    if reps < 1:
        raise ArgumentError(f"reps must be at least 1, got {reps}")
    options = dict(options or {})
    logger.info(f"Running {len(policies)} policies x {reps} reps, T={horizon}, seed={base_seed}")

    outcome = ExperimentResult()
    if workers > 1:
        jobs = {}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for name in policies:
                for rep in range(reps):
                    jobs[(name, rep)] = pool.submit(_run_job, instance_factory, name, rep, horizon,
                                                    base_seed, options, index_source)
            for name in policies:
                outcome.results[name] = [jobs[(name, rep)].result() for rep in range(reps)]
    else:
        providers: Dict[float, IndexProvider] = {}
        for name in policies:
            outcome.results[name] = []
            for rep in range(reps):
                seed = derive_seed(base_seed, rep)
                instance = instance_factory(seed)
                provider = providers.setdefault(
                    instance.beta, IndexProvider(instance.beta, INDEX_TOL, source=index_source,
                                                 seed=base_seed))
                policy = make_policy(name, selector_config(instance, **options), provider)
                outcome.results[name].append(run_episode(instance, policy, horizon, seed))

    sample = instance_factory(derive_seed(base_seed, 0))
    tail = tail_bound(sample, horizon)
    for name in policies:
        agg = Aggregate.from_results(name, outcome.results[name])
        agg.tail_bound = tail
        outcome.aggregates[name] = agg
        logger.info(f"{name}: mean cost {agg.mean_cost:.4f} (std {agg.std_cost:.4f}), "
                    f"violation rate {agg.violation_rate:.3f}")
    logger.info(f"Truncation tail bound beta^T*max_step_cost/(1-beta) = {tail:.4g}")
    return outcome


def tail_bound(instance: AnyInstance, horizon: int) -> float:
    """Upper bound on the discounted cost beyond the simulated horizon"""
    max_step_cost = sum(arm.cost1 for arm in instance.arms)
    return instance.beta ** horizon * max_step_cost / (1.0 - instance.beta)
