#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
SVG line charts of discounted cost
"""

import logging
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)


def plot_sweep(frame: pd.DataFrame, parameter: str, path: str,
               title: Optional[str] = None) -> None:
    """
    Mean discounted cost against the swept parameter, one line per policy with a +-1 std band

    Args:
        frame: Sweep table with columns <parameter>, policy, mean_cost, std_cost
        parameter: Name of the swept column
        path: Destination SVG file
        title: Optional chart title
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for policy, group in frame.groupby("policy", sort=False):
        group = group.sort_values(parameter)
        x = group[parameter].to_numpy(dtype=float)
        mean = group["mean_cost"].to_numpy(dtype=float)
        std = group["std_cost"].to_numpy(dtype=float)
        ax.plot(x, mean, marker="o", label=policy)
        ax.fill_between(x, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel(parameter)
    ax.set_ylabel("discounted cost")
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_runs(runs: pd.DataFrame, beta: float, path: str, title: Optional[str] = None) -> None:
    """Cumulative discounted cost per step, averaged over repetitions, per policy"""
    frame = runs.copy()
    frame["discounted"] = frame["cost"] * beta ** (frame["step"] - 1)
    frame["cumulative"] = frame.groupby(["policy", "rep"])["discounted"].cumsum()
    stats = frame.groupby(["policy", "step"], sort=False)["cumulative"].agg(["mean", "std"])
    stats = stats.reset_index().fillna(0.0)

    fig, ax = plt.subplots(figsize=(6, 4))
    for policy, group in stats.groupby("policy", sort=False):
        x = group["step"].to_numpy(dtype=float)
        mean = group["mean"].to_numpy(dtype=float)
        std = group["std"].to_numpy(dtype=float)
        ax.plot(x, mean, label=policy)
        ax.fill_between(x, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel("step")
    ax.set_ylabel("cumulative discounted cost")
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)


def _save(fig, path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"Saved chart to {path}")
