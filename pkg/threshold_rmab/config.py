#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Configuration settings for threshold RMAB experiments
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from threshold_rmab.errors import InstanceError, UsageError

logger = logging.getLogger(__name__)

# Experiment protocol
DEFAULT_BETA = 0.9
DEFAULT_HORIZON = 10
DEFAULT_REPS = 10
DEFAULT_SEED = 0
DEFAULT_RHO = 0.9
DEFAULT_THRESHOLD = 1.0
# Uniform-family arms pay more than 1 on success, so that family defaults to a higher threshold
UNIFORM_THRESHOLD = 3.0
DEFAULT_N = 20
DEFAULT_BUDGET_MULTIPLIER = 2.0
DEFAULT_BUDGET = 1.0

# Index computation
INDEX_TOL = 1e-6
INDEXABILITY_GRID_POINTS = 256
INDEX_SOLVER = "policy_iteration"
PASSIVE_ATOL = 1e-10
LAMBDA_DOUBLINGS = 60

# Q-learning index approximation
QWI_UPDATES = 50_000
QWI_EPISODE_LENGTH = 1
QWI_LAMBDA_CAP = 1e2

# Satisfaction probability
ENUMERATION_CAP = 10**6
MC_SAMPLES = 1000
SATISFACTION_ATOL = 1e-9

# Hidden two-state arms
BELIEF_HORIZON_K = 30
INITIAL_BELIEF = "stationary"

# Caching
INDEX_CACHE_SIZE = 200_000

# Turing machine reduction (desk scale only)
REDUCTION_T_CAP = 10**7
REDUCTION_STATE_CAP = 2_000

# Logging
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_LEVEL = "INFO"

# Recognized names
POLICIES = ("greedy_min", "increasing_budget", "truncated_reward",
            "random", "all_active", "greedy_max")
FAMILIES = ("claim1", "adversarial", "uniform", "file")
PROB_ESTIMATORS = ("exact", "mc", "hoeffding")
INDEX_SOURCES = ("exact", "qwi")
SWEEP_PARAMETERS = ("R", "n", "rho")


@dataclass
class ExperimentConfig:
    """Every knob of one experiment, loadable from JSON and overridable by flags"""

    family: str = "uniform"
    n: int = DEFAULT_N
    seed: int = DEFAULT_SEED
    instance: Optional[str] = None
    policies: List[str] = field(default_factory=lambda: ["greedy_min", "increasing_budget",
                                                         "truncated_reward", "random"])
    T: int = DEFAULT_HORIZON
    beta: float = DEFAULT_BETA
    rho: float = DEFAULT_RHO
    R: Optional[float] = None
    reps: int = DEFAULT_REPS
    prob_estimator: str = "exact"
    mc_samples: int = MC_SAMPLES
    m: float = DEFAULT_BUDGET_MULTIPLIER
    budget: float = DEFAULT_BUDGET
    persist_budget: bool = False
    index_source: str = "exact"
    horizon_k: int = BELIEF_HORIZON_K
    workers: int = 1
    out: Optional[str] = None
    svg: Optional[str] = None
    log_level: str = LOG_LEVEL

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        """
        Load a configuration file

        Args:
            path: JSON document whose keys are ExperimentConfig field names

        Returns:
            The parsed configuration
        """
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as e:
            raise InstanceError(f"invalid JSON in config {path}: {e.msg}", line=e.lineno) from e
        if not isinstance(data, dict):
            raise InstanceError(f"config {path} must hold a JSON object")

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        if isinstance(data.get("policies"), str):
            data["policies"] = [p.strip() for p in data["policies"].split(",") if p.strip()]
        logger.info(f"Loaded experiment config from {path}")
        return cls(**data)

    def merged(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        """Return a copy with every non-None override applied"""
        applied = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **applied)

    def validate(self) -> "ExperimentConfig":
        """Check ranges and names; raise on the first violating field"""
        unknown = [p for p in self.policies if p not in POLICIES]
        if unknown:
            raise UsageError(f"unknown policy '{unknown[0]}' (choose from {', '.join(POLICIES)})")
        if not self.policies:
            raise UsageError("at least one policy is required")
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family '{self.family}' (choose from {', '.join(FAMILIES)})")
        if self.prob_estimator not in PROB_ESTIMATORS:
            raise UsageError(f"unknown prob estimator '{self.prob_estimator}'")
        if self.index_source not in INDEX_SOURCES:
            raise UsageError(f"unknown index source '{self.index_source}'")
        if self.family == "file" and not self.instance:
            raise UsageError("family 'file' needs an instance path")
        if self.instance and not Path(self.instance).exists():
            raise InstanceError(f"instance file {self.instance} does not exist", field="instance")

        if not 0.0 < self.beta < 1.0:
            raise InstanceError(f"beta must lie in (0,1), got {self.beta}", field="beta")
        if not 0.0 < self.rho <= 1.0:
            raise InstanceError(f"rho must lie in (0,1], got {self.rho}", field="rho")
        if not self.m > 1.0:
            raise InstanceError(f"budget multiplier must exceed 1, got {self.m}", field="m")
        if self.T < 1:
            raise InstanceError(f"horizon must be at least 1, got {self.T}", field="T")
        if self.reps < 1:
            raise InstanceError(f"reps must be at least 1, got {self.reps}", field="reps")
        if self.n < 1:
            raise InstanceError(f"n must be at least 1, got {self.n}", field="n")
        if self.mc_samples < 1:
            raise InstanceError(f"mc_samples must be at least 1, got {self.mc_samples}",
                                field="mc_samples")
        if self.R is not None and not math.isfinite(self.R):
            raise InstanceError("threshold must be finite", field="R")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
