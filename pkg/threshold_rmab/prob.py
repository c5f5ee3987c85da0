#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Probability that the rewards of the selected arms reach the threshold
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from threshold_rmab.config import ENUMERATION_CAP, MC_SAMPLES, SATISFACTION_ATOL
from threshold_rmab.core import ArmSpec, RewardDistribution
from threshold_rmab.errors import ArgumentError, CapacityError, UsageError

logger = logging.getLogger(__name__)

MERGE_DECIMALS = 10


@dataclass(frozen=True)
class SelectionContext:
    """Active reward distributions of the selected arms and the threshold R"""

    distributions: Tuple[RewardDistribution, ...]
    threshold: float

    @classmethod
    def from_selection(cls, arms: Sequence[ArmSpec], states: Sequence[int],
                       selected: Sequence[int], threshold: float) -> "SelectionContext":
        """
        Args:
            arms: Instance arms
            states: Current joint state
            selected: Indices of the arms with action 1
            threshold: Reward threshold R
        """
        return cls(tuple(arms[i].reward[int(states[i])][1] for i in selected), threshold)

    @property
    def empty_satisfied(self) -> bool:
        return 0.0 >= self.threshold - SATISFACTION_ATOL


def exact_satisfaction_prob(ctx: SelectionContext, cap: int = ENUMERATION_CAP) -> float:
    """
    Exact Pr(sum of selected rewards >= R) by convolving the supports

    Equal partial sums are merged; with nonnegative supports every sum that
    already reaches R is collapsed into one absorbing atom.

    Raises:
        CapacityError: more than `cap` distinct partial sums would be tracked
    """
    target = ctx.threshold - SATISFACTION_ATOL
    nonnegative = all(dist.low >= 0.0 for dist in ctx.distributions)
    sums = np.zeros(1)
    probs = np.ones(1)
    for dist in ctx.distributions:
        values = np.asarray(dist.values)
        weights = np.asarray(dist.probs)
        joint = np.round((sums[:, None] + values[None, :]).ravel(), MERGE_DECIMALS)
        mass = (probs[:, None] * weights[None, :]).ravel()
        sums, inverse = np.unique(joint, return_inverse=True)
        probs = np.bincount(inverse, weights=mass, minlength=sums.size)

        if nonnegative:
            reached = sums >= target
            if reached.any():
                sums = np.append(sums[~reached], ctx.threshold)
                probs = np.append(probs[~reached], probs[reached].sum())
        if sums.size > cap:
            raise CapacityError(f"exact enumeration tracks {sums.size} partial sums, above the "
                                f"cap of {cap}; use the Monte Carlo estimator")
    return float(min(1.0, max(0.0, probs[sums >= target].sum())))


def mc_satisfaction_prob(ctx: SelectionContext, samples: int = MC_SAMPLES,
                         rng: Optional[np.random.Generator] = None) -> float:
    """Empirical frequency of the threshold being reached over independent joint draws"""
    if samples < 1:
        raise ArgumentError(f"samples must be at least 1, got {samples}")
    if not ctx.distributions:
        return 1.0 if ctx.empty_satisfied else 0.0
    rng = rng if rng is not None else np.random.default_rng()
    totals = np.zeros(samples)
    for dist in ctx.distributions:
        totals += dist.sample(rng, samples)
    return float(np.mean(totals >= ctx.threshold - SATISFACTION_ATOL))


def hoeffding_lower_bound(ctx: SelectionContext) -> float:
    """
    Hoeffding lower bound 1 - exp(-2(mu - R)^2 / sum (u_i - l_i)^2) when mu > R, else 0

    Valid but possibly loose. A deterministic sum reaching R gives 1.
    """
    lows = np.array([dist.low for dist in ctx.distributions])
    highs = np.array([dist.high for dist in ctx.distributions])
    if not (np.all(np.isfinite(lows)) and np.all(np.isfinite(highs))):
        raise ArgumentError("Hoeffding's bound needs bounded reward supports")
    mu = float(sum(dist.mean for dist in ctx.distributions))
    spread = float(np.sum((highs - lows) ** 2))
    if spread == 0.0:
        return 1.0 if mu >= ctx.threshold - SATISFACTION_ATOL else 0.0
    if mu <= ctx.threshold:
        return 0.0
    return max(0.0, 1.0 - math.exp(-2.0 * (mu - ctx.threshold) ** 2 / spread))


class SatisfactionEstimator:
    """
    Estimator selected by name: "exact", "mc" or "hoeffding"

    The exact estimator falls back to Monte Carlo when the enumeration cap is hit.
    """

    def __init__(self, kind: str = "exact", mc_samples: int = MC_SAMPLES,
                 cap: int = ENUMERATION_CAP):
        if kind not in ("exact", "mc", "hoeffding"):
            raise UsageError(f"unknown prob estimator '{kind}'")
        self.kind = kind
        self.mc_samples = mc_samples
        self.cap = cap

    def probability(self, ctx: SelectionContext, rng: Optional[np.random.Generator] = None) -> float:
        if self.kind == "mc":
            return mc_satisfaction_prob(ctx, self.mc_samples, rng)
        if self.kind == "hoeffding":
            return hoeffding_lower_bound(ctx)
        try:
            return exact_satisfaction_prob(ctx, self.cap)
        except CapacityError as e:
            logger.warning(f"{e}; falling back to {self.mc_samples} Monte Carlo samples")
            return mc_satisfaction_prob(ctx, self.mc_samples, rng)
