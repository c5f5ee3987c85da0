#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Helper functions for parsing arguments and writing result files
"""

import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, List, Optional

import pandas as pd

from threshold_rmab.errors import UsageError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


def parse_list(text: Optional[str]) -> List[str]:
    """Split a comma separated flag value"""
    if not text:
        return []
    return [item.strip() for item in text.split(",") if item.strip()]


def parse_grid(text: str) -> List[float]:
    """Parse a comma separated list of numbers"""
    values = []
    for item in parse_list(text):
        try:
            values.append(float(item))
        except ValueError:
            raise UsageError(f"grid entry '{item}' is not a number")
    if not values:
        raise UsageError("grid must contain at least one value")
    return values


def _atomic_write_text(text: str, path: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_frame(frame: pd.DataFrame, path: Optional[str]) -> None:
    """
    Write a CSV atomically to path, or to stdout when path is None or "-"

    Args:
        frame: Table to write
        path: Destination file
    """
    text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    _atomic_write_text(text, path)
    logger.info(f"Wrote {len(frame)} rows to {path}")


def write_json(data: Any, path: Optional[str]) -> None:
    """Write a JSON document atomically, or to stdout"""
    text = json.dumps(data, indent=2, default=_json_default) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    _atomic_write_text(text, path)
    logger.info(f"Wrote {path}")


def _json_default(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
