#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Instance families, JSON serialization and the instance loader
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np

from threshold_rmab.belief import BeliefArm, BeliefInstance, stationary_probability
from threshold_rmab.config import (BELIEF_HORIZON_K, DEFAULT_BETA, DEFAULT_RHO,
                                   DEFAULT_SEED, DEFAULT_THRESHOLD, FAMILIES,
                                   UNIFORM_THRESHOLD)
from threshold_rmab.core import ArmSpec, RewardDistribution, RmabInstance, bernoulli_arm
from threshold_rmab.errors import ArgumentError, InstanceError, UsageError

logger = logging.getLogger(__name__)

RELIABLE_GAP = 1e-9
RELIABLE_EPSILON = 1e-9

AnyInstance = Union[RmabInstance, BeliefInstance]


def claim1_log(rho: float) -> float:
    """log base 1/(2e) of (1 - rho)"""
    return math.log(1.0 - rho) / math.log(1.0 / (2.0 * math.e))


def claim1_instance(n: int, rho: float = DEFAULT_RHO, R: float = DEFAULT_THRESHOLD,
                    beta: float = DEFAULT_BETA) -> RmabInstance:
    """
    Instance on which the min-index greedy pays n times the optimum

    Arms 0..n-2 pay 10R/p with probability p = log_{1/(2e)}(1-rho)/(n-1);
    the last arm pays R surely. All costs are 1.
    """
    if not 0.0 < rho < 1.0:
        raise ArgumentError(f"claim1 needs rho in (0,1), got {rho}")
    if R <= 0:
        raise ArgumentError(f"claim1 needs a positive threshold, got {R}")
    spread = claim1_log(rho)
    minimal_n = math.floor(spread) + 2
    if n < 2 or spread / (n - 1) >= 1.0:
        raise ArgumentError(f"claim1 with rho={rho} needs n >= {minimal_n}, got {n}")
    p = spread / (n - 1)
    arms = [bernoulli_arm(i, p, 10.0 * R / p) for i in range(n - 1)]
    arms.append(bernoulli_arm(n - 1, 1.0, R))
    logger.info(f"Generated claim1 instance: n={n}, p={p:.5f}, r={10.0 * R / p:.4g}")
    return RmabInstance(tuple(arms), beta, R, rho,
                        meta={"family": "claim1", "p": p, "n": n})


def adversarial_instance(n: int, seed: int = DEFAULT_SEED, beta: float = DEFAULT_BETA,
                         R: float = DEFAULT_THRESHOLD, rho: float = DEFAULT_RHO,
                         horizon_k: int = BELIEF_HORIZON_K) -> BeliefInstance:
    """
    Reliable arms (r=1, stationary belief ~1) against unreliable ones (r=10n^2, stationary reward 2)

    Reliable chains use p11 = 1 - 1e-9*u and p01 = (1 - 1e-9)*u with u ~ U(0.2, 0.6),
    which pins the stationary belief at 1 - 1e-9. Unreliable chains draw
    p11 ~ U(0.1, 0.5) and solve p01 for stationary probability 2/r.
    """
    if n < 2 or n % 2:
        raise ArgumentError(f"adversarial family needs an even n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    half = n // 2
    big = 10.0 * n * n
    target = 2.0 / big
    arms = []
    for i in range(half):
        u = rng.uniform(0.2, 0.6)
        arms.append(BeliefArm(p01=(1.0 - RELIABLE_EPSILON) * u, p11=1.0 - RELIABLE_GAP * u,
                              r=1.0, id=i))
    for i in range(half, n):
        p11 = rng.uniform(0.1, 0.5)
        p01 = target * (1.0 - p11) / (1.0 - target)
        arms.append(BeliefArm(p01=p01, p11=p11, r=big, id=i))
    logger.info(f"Generated adversarial instance: n={n}, unreliable reward {big:g}, seed={seed}")
    return BeliefInstance(tuple(arms), beta, R, rho, horizon_k,
                          meta={"family": "adversarial", "seed": seed,
                                "groups": ["reliable"] * half + ["unreliable"] * half})


def uniform_instance(n: int, seed: int = DEFAULT_SEED, beta: float = DEFAULT_BETA,
                     R: float = UNIFORM_THRESHOLD, rho: float = DEFAULT_RHO,
                     horizon_k: int = BELIEF_HORIZON_K) -> BeliefInstance:
    """Random chains with rewards set so every stationary expected reward is 1 +- 10%"""
    if n < 1:
        raise ArgumentError(f"n must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    arms = []
    for i in range(n):
        p01, p11 = rng.uniform(0.1, 0.9, size=2)
        jitter = rng.uniform(-0.1, 0.1)
        arms.append(BeliefArm(p01=float(p01), p11=float(p11),
                              r=(1.0 + jitter) / stationary_probability(p01, p11), id=i))
    logger.info(f"Generated uniform instance: n={n}, seed={seed}")
    return BeliefInstance(tuple(arms), beta, R, rho, horizon_k,
                          meta={"family": "uniform", "seed": seed})


@dataclass
class FamilyParams:
    """Instance source: a named family with its parameters, or a file"""

    family: str
    n: int
    rho: float = DEFAULT_RHO
    R: Optional[float] = None
    seed: int = DEFAULT_SEED
    beta: float = DEFAULT_BETA
    horizon_k: int = BELIEF_HORIZON_K
    path: Optional[str] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family '{self.family}' (choose from {', '.join(FAMILIES)})")
        if self.family == "claim1" and self.n < 2:
            raise InstanceError(f"claim1 needs n >= 2, got {self.n}", field="n")

    @property
    def threshold(self) -> float:
        """Given threshold, or the family default"""
        if self.R is not None:
            return self.R
        return UNIFORM_THRESHOLD if self.family == "uniform" else DEFAULT_THRESHOLD


def build_family(params: FamilyParams) -> AnyInstance:
    """Generate (or load) the instance described by params"""
    if params.family == "claim1":
        return claim1_instance(params.n, params.rho, params.threshold, params.beta)
    if params.family == "adversarial":
        return adversarial_instance(params.n, params.seed, params.beta, params.threshold,
                                    params.rho, params.horizon_k)
    if params.family == "uniform":
        return uniform_instance(params.n, params.seed, params.beta, params.threshold,
                                params.rho, params.horizon_k)
    if not params.path:
        raise UsageError("family 'file' needs an instance path")
    return load_instance(params.path)


def _distribution_to_json(dist: RewardDistribution) -> List[Dict[str, float]]:
    return [{"v": v, "p": p} for v, p in zip(dist.values, dist.probs)]


def instance_to_dict(instance: AnyInstance) -> Dict[str, Any]:
    """Serializable form of an instance"""
    doc: Dict[str, Any] = {
        "beta": instance.beta,
        "threshold": instance.threshold,
        "rho": instance.success_prob,
    }
    if isinstance(instance, BeliefInstance):
        doc["horizon_k"] = instance.horizon_k
        doc["arms"] = [{"p01": arm.p01, "p11": arm.p11, "r": arm.r, "cost1": arm.cost1}
                       for arm in instance.arms]
    else:
        doc["initial_state"] = list(instance.initial_state)
        doc["arms"] = [{
            "cost1": arm.cost1,
            "transition": arm.transition.tolist(),
            "reward": [[_distribution_to_json(dist) for dist in row] for row in arm.reward],
        } for arm in instance.arms]
    if instance.meta:
        doc["meta"] = instance.meta
    return doc


def dump_instance(instance: AnyInstance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(instance_to_dict(instance), handle, indent=2)
        handle.write("\n")
    logger.info(f"Saved instance with {instance.n} arms to {path}")


def _require(doc: Dict[str, Any], key: str, arm_id: Optional[int] = None) -> Any:
    if key not in doc:
        raise InstanceError(f"missing required key '{key}'", arm_id=arm_id, field=key)
    return doc[key]


def _number(value: Any, key: str, arm_id: Optional[int] = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(f"'{key}' must be a number", arm_id=arm_id, field=key)
    return float(value)


def _parse_distribution(entries: Any, arm_id: int) -> RewardDistribution:
    if not isinstance(entries, list) or not entries:
        raise InstanceError("reward entries must be nonempty lists of {v, p}", arm_id=arm_id,
                            field="reward")
    values, probs = [], []
    for entry in entries:
        if not isinstance(entry, dict):
            raise InstanceError("reward atoms must be objects {v, p}", arm_id=arm_id, field="reward")
        values.append(_number(_require(entry, "v", arm_id), "v", arm_id))
        probs.append(_number(_require(entry, "p", arm_id), "p", arm_id))
    return RewardDistribution(tuple(values), tuple(probs))


def _parse_tabular_arm(doc: Dict[str, Any], arm_id: int) -> ArmSpec:
    cost1 = _number(_require(doc, "cost1", arm_id), "cost1", arm_id)
    try:
        transition = np.array(_require(doc, "transition", arm_id), dtype=float)
    except (TypeError, ValueError) as e:
        raise InstanceError(f"malformed transition table: {e}", arm_id=arm_id, field="transition") from e
    reward_rows = _require(doc, "reward", arm_id)
    if not isinstance(reward_rows, list) or any(not isinstance(r, list) or len(r) != 2
                                                for r in reward_rows):
        raise InstanceError("reward must list a (passive, active) pair per state", arm_id=arm_id,
                            field="reward")
    reward = tuple((_parse_distribution(row[0], arm_id), _parse_distribution(row[1], arm_id))
                   for row in reward_rows)
    return ArmSpec(arm_id, transition, reward, cost1)


def _parse_belief_arm(doc: Dict[str, Any], arm_id: int) -> BeliefArm:
    return BeliefArm(p01=_number(_require(doc, "p01", arm_id), "p01", arm_id),
                     p11=_number(_require(doc, "p11", arm_id), "p11", arm_id),
                     r=_number(_require(doc, "r", arm_id), "r", arm_id),
                     cost1=_number(doc.get("cost1", 1.0), "cost1", arm_id),
                     id=arm_id)


def instance_from_dict(doc: Dict[str, Any]) -> AnyInstance:
    """Build an instance from its parsed JSON document"""
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    beta = _number(_require(doc, "beta"), "beta")
    threshold = _number(_require(doc, "threshold"), "threshold")
    rho = _number(doc.get("rho", 1.0), "rho")
    arms_doc = _require(doc, "arms")
    if not isinstance(arms_doc, list) or not arms_doc:
        raise InstanceError("'arms' must be a nonempty list", field="arms")
    if any(not isinstance(arm, dict) for arm in arms_doc):
        raise InstanceError("every arm must be a JSON object", field="arms")

    belief = ["p01" in arm for arm in arms_doc]
    if any(belief) and not all(belief):
        raise InstanceError("an instance cannot mix tabular and belief arms", field="arms")
    meta = doc.get("meta", {})
    if all(belief):
        arms = tuple(_parse_belief_arm(arm, i) for i, arm in enumerate(arms_doc))
        horizon_k = int(doc.get("horizon_k", BELIEF_HORIZON_K))
        return BeliefInstance(arms, beta, threshold, rho, horizon_k, meta=meta)

    arms = tuple(_parse_tabular_arm(arm, i) for i, arm in enumerate(arms_doc))
    return RmabInstance(arms, beta, threshold, rho, initial_state=doc.get("initial_state"),
                        meta=meta)


def load_instance(path: str) -> AnyInstance:
    """
    Load an instance file

    Raises:
        InstanceError: parse errors (with line position), schema or invariant violations
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except FileNotFoundError as e:
        raise InstanceError(f"instance file {path} does not exist", field="instance") from e
    except json.JSONDecodeError as e:
        raise InstanceError(f"invalid JSON in {path}: {e.msg} (column {e.colno})", line=e.lineno) from e
    instance = instance_from_dict(doc)
    logger.info(f"Loaded instance with {instance.n} arms from {path}")
    return instance
