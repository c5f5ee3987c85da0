#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Command-line entry point: gen, index, run, reduce and sweep
"""

import argparse
import logging
import sys
from dataclasses import fields, replace
from typing import List, Optional

import pandas as pd

from threshold_rmab.belief import BeliefInstance
from threshold_rmab.config import (FAMILIES, INDEX_SOURCES, INDEX_TOL, LOG_FORMAT, LOG_LEVEL,
                                   POLICIES, PROB_ESTIMATORS, SWEEP_PARAMETERS, ExperimentConfig)
from threshold_rmab.errors import RmabError, UsageError
from threshold_rmab.index import IndexProvider
from threshold_rmab.instances import FamilyParams, build_family, instance_to_dict
from threshold_rmab.reduction import compile_tm, derive_params, load_tm, verify_reduction
from threshold_rmab.sim import constant_factory, run_experiment
from threshold_rmab.utils.charts import plot_runs, plot_sweep
from threshold_rmab.utils.helpers import parse_grid, parse_list, write_frame, write_json

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
SWEEP_COLUMNS = ["policy", "mean_cost", "std_cost", "violation_rate"]


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with experiment settings; flags override it")
    parser.add_argument("--log-level", dest="log_level", choices=LOG_LEVELS)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", "-o", help="output file (stdout when omitted)")


def _instance_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", choices=FAMILIES)
    parser.add_argument("--instance", help="instance JSON file (family 'file')")
    parser.add_argument("--n", type=int)
    parser.add_argument("--rho", type=float)
    parser.add_argument("--R", type=float,
                        help="reward threshold (3 for the uniform family, 1 otherwise)")
    parser.add_argument("--beta", type=float)
    parser.add_argument("--horizon-k", dest="horizon_k", type=int,
                        help="surrogate depth for hidden two-state arms")


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--T", type=int, help="steps per episode")
    parser.add_argument("--reps", type=int)
    parser.add_argument("--policies", help=f"comma separated subset of {','.join(POLICIES)}")
    parser.add_argument("--m", type=float, help="budget multiplier")
    parser.add_argument("--budget", type=float, help="budget of greedy_max")
    parser.add_argument("--persist-budget", dest="persist_budget", action="store_true",
                        default=None)
    parser.add_argument("--prob-estimator", dest="prob_estimator", choices=PROB_ESTIMATORS)
    parser.add_argument("--mc-samples", dest="mc_samples", type=int)
    parser.add_argument("--index-source", dest="index_source", choices=INDEX_SOURCES)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--svg", help="write an SVG chart here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="threshold-rmab",
        description="Restless bandit cost minimization under a reward threshold")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    _common(gen)
    _instance_flags(gen)

    index = sub.add_parser("index", help="compute the Whittle index table")
    _common(index)
    _instance_flags(index)
    index.add_argument("--index-source", dest="index_source", choices=INDEX_SOURCES)

    run = sub.add_parser("run", help="simulate policies and aggregate discounted costs")
    _common(run)
    _instance_flags(run)
    _experiment_flags(run)
    run.add_argument("--runs-out", dest="runs_out", help="per-step trace CSV")

    sweep = sub.add_parser("sweep", help="vary R, n or rho over a grid")
    _common(sweep)
    _instance_flags(sweep)
    _experiment_flags(sweep)
    sweep.add_argument("--vary", required=True, choices=SWEEP_PARAMETERS)
    sweep.add_argument("--grid", required=True, help="comma separated values")

    reduce = sub.add_parser("reduce", help="compile and verify a Turing machine reduction")
    _common(reduce)
    reduce.add_argument("--tm", required=True, help="TM description JSON")
    reduce.add_argument("--alpha", type=float, default=2.0)
    reduce.add_argument("--R", type=float, default=1.0)
    reduce.add_argument("--horizon", type=int, default=10, help="simulated machine steps")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file values overridden by the flags that were given"""
    cfg = ExperimentConfig.from_json(args.config) if getattr(args, "config", None) \
        else ExperimentConfig()
    overrides = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig)
                 if hasattr(args, f.name)}
    if isinstance(overrides.get("policies"), str):
        overrides["policies"] = parse_list(overrides["policies"])
    if overrides.get("instance") and not overrides.get("family"):
        overrides["family"] = "file"
    cfg = cfg.merged(overrides)
    logging.getLogger().setLevel(cfg.log_level)
    return cfg.validate()


def family_params(cfg: ExperimentConfig) -> FamilyParams:
    return FamilyParams(cfg.family, cfg.n, cfg.rho, cfg.R, cfg.seed, cfg.beta, cfg.horizon_k,
                        cfg.instance)


def cmd_gen(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    if cfg.family == "file":
        raise UsageError("gen needs a generated family (claim1, adversarial or uniform)")
    instance = build_family(family_params(cfg))
    write_json(instance_to_dict(instance), cfg.out)
    return 0


def cmd_index(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    instance = build_family(family_params(cfg))
    view = instance.surrogate() if isinstance(instance, BeliefInstance) else instance
    provider = IndexProvider(view.beta, INDEX_TOL, source=cfg.index_source, seed=cfg.seed)
    table = provider.table(view.arms)
    logger.info(f"Computed {len(table.rows)} indices for {view.n} arms")
    write_frame(table.to_frame(), cfg.out)
    return 0


def _options(cfg: ExperimentConfig) -> dict:
    return {"m": cfg.m, "prob_estimator": cfg.prob_estimator, "mc_samples": cfg.mc_samples,
            "budget": cfg.budget, "persist_budget": cfg.persist_budget}


def _experiment(cfg: ExperimentConfig):
    instance = build_family(family_params(cfg))
    return instance, run_experiment(constant_factory(instance), cfg.policies, cfg.reps, cfg.T,
                                    cfg.seed, _options(cfg), cfg.index_source, cfg.workers)


def cmd_run(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    instance, outcome = _experiment(cfg)
    runs = outcome.runs_frame()
    if getattr(args, "runs_out", None):
        write_frame(runs, args.runs_out)
    write_frame(outcome.aggregate_frame(), cfg.out)
    if cfg.svg:
        plot_runs(runs, instance.beta, cfg.svg, title=f"{cfg.family}, n={instance.n}")
    return 0


def cmd_sweep(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    values = parse_grid(args.grid)
    frames = []
    for value in values:
        point = replace(cfg, **{args.vary: int(value) if args.vary == "n" else value}).validate()
        logger.info(f"Sweep point {args.vary}={value}")
        _, outcome = _experiment(point)
        frame = outcome.aggregate_frame()
        frame.insert(0, args.vary, int(value) if args.vary == "n" else value)
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True)[[args.vary] + SWEEP_COLUMNS]
    write_frame(table, cfg.out)
    if cfg.svg:
        plot_sweep(table, args.vary, cfg.svg, title=f"{cfg.family}: varying {args.vary}")
    return 0


def cmd_reduce(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    tm = load_tm(args.tm)
    params = derive_params(tm, args.alpha, args.R)
    report = verify_reduction(tm, params, args.horizon, compile_tm(tm, params))
    write_json(report.to_dict(), cfg.out)
    return 0 if report.iff_holds else 1


COMMANDS = {
    "gen": cmd_gen,
    "index": cmd_index,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "reduce": cmd_reduce,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and run one subcommand

    Returns:
        0 on success, 2 on usage errors, 1 on any other failure
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(format=LOG_FORMAT, level=args.log_level or LOG_LEVEL,
                        stream=sys.stderr, force=True)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return 2
    except RmabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
