"""
Turing machine to RMAB compiler and its desk-scale verifier
"""

from threshold_rmab.reduction.compiler import CompiledReduction, ReductionParams, compile_tm, derive_params
from threshold_rmab.reduction.turing import TmSpec, load_tm, simulate_tm
from threshold_rmab.reduction.verify import ReductionReport, faithful_policy, special_policy, verify_reduction

__all__ = [
    "CompiledReduction", "ReductionParams", "ReductionReport", "TmSpec",
    "compile_tm", "derive_params", "faithful_policy", "load_tm", "simulate_tm",
    "special_policy", "verify_reduction",
]
