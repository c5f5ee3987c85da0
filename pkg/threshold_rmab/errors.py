#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Exception hierarchy for the threshold RMAB toolkit
"""

from typing import Optional


class RmabError(Exception):
    """Base class for every error raised by the package"""


class ArgumentError(RmabError, ValueError):
    """An argument is outside the domain of an operation"""


class InstanceError(RmabError, ValueError):
    """
    An arm or instance violates one of its invariants

    Args:
        message: Human readable description
        arm_id: Offending arm, if the violation is local to one arm
        field: Offending field name
        line: Line in the source document, when parsing a file
    """

    def __init__(self, message: str, arm_id: Optional[int] = None,
                 field: Optional[str] = None, line: Optional[int] = None):
        self.arm_id = arm_id
        self.field = field
        self.line = line

        parts = []
        if arm_id is not None:
            parts.append(f"arm {arm_id}")
        if field is not None:
            parts.append(f"field '{field}'")
        if line is not None:
            parts.append(f"line {line}")
        prefix = f"[{', '.join(parts)}] " if parts else ""
        super().__init__(f"{prefix}{message}")


class CapacityError(RmabError):
    """A computation would exceed a configured size cap"""


class UsageError(RmabError):
    """Unrecognized policy, family, estimator or other user input"""
