#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Single-tape Turing machines on a bounded tape
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from threshold_rmab.errors import ArgumentError, InstanceError

logger = logging.getLogger(__name__)

MOVES = {"L": -1, "R": 1}

Transition = Tuple[str, str, str]


@dataclass(frozen=True)
class TmSpec:
    """
    Turing machine with a tape of fixed length

    Args:
        states: State names; halting states included
        start: Initial state
        accept: Accepting halting state, if any
        reject: Rejecting halting state, if any
        gamma: Tape alphabet
        sigma: Input alphabet, a subset of gamma
        blank: Symbol filling the tape beyond the input
        delta: (state, symbol) -> (state', symbol', "L" | "R")
        input: Input word, one symbol per cell from cell 0
        tape_len: Number of tape cells n
    """

    states: Tuple[str, ...]
    start: str
    gamma: Tuple[str, ...]
    sigma: Tuple[str, ...]
    blank: str
    delta: Dict[Tuple[str, str], Transition]
    input: Tuple[str, ...]
    tape_len: int
    accept: Optional[str] = None
    reject: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "gamma", tuple(self.gamma))
        object.__setattr__(self, "sigma", tuple(self.sigma))
        object.__setattr__(self, "input", tuple(self.input))
        self.validate()

    @property
    def halting(self) -> Tuple[str, ...]:
        return tuple(q for q in (self.accept, self.reject) if q is not None)

    def validate(self) -> None:
        if len(set(self.states)) != len(self.states) or not self.states:
            raise InstanceError("TM states must be distinct and nonempty", field="states")
        for name in (self.start, *self.halting):
            if name not in self.states:
                raise InstanceError(f"state '{name}' is not declared", field="states")
        if self.blank not in self.gamma:
            raise InstanceError(f"blank '{self.blank}' is not in the tape alphabet", field="blank")
        if not set(self.sigma) <= set(self.gamma):
            raise InstanceError("input alphabet must be a subset of the tape alphabet",
                                field="sigma")
        if self.tape_len < 1 or len(self.input) > self.tape_len:
            raise InstanceError("tape must be nonempty and hold the input", field="tape_len")
        if any(symbol not in self.sigma for symbol in self.input):
            raise InstanceError("input uses symbols outside the input alphabet", field="input")
        for (q, g), (q2, g2, move) in self.delta.items():
            if q not in self.states or q2 not in self.states or g not in self.gamma \
                    or g2 not in self.gamma or move not in MOVES:
                raise InstanceError(f"malformed transition ({q}, {g}) -> ({q2}, {g2}, {move})",
                                    field="delta")
        for q in self.states:
            if q in self.halting:
                continue
            for g in self.gamma:
                if (q, g) not in self.delta:
                    raise InstanceError(f"delta is undefined on non-halting ({q}, {g})",
                                        field="delta")

    def initial_tape(self) -> List[str]:
        return list(self.input) + [self.blank] * (self.tape_len - len(self.input))


@dataclass
class TmRun:
    """Trace of a direct simulation"""

    verdict: str
    steps: int
    states: List[str] = field(default_factory=list)
    heads: List[int] = field(default_factory=list)
    tapes: List[Tuple[str, ...]] = field(default_factory=list)

    @property
    def halts(self) -> Optional[bool]:
        if self.verdict == "unknown":
            return None
        return self.verdict == "halts"


def simulate_tm(tm: TmSpec, max_steps: int, detect_loops: bool = True) -> TmRun:
    """
    Run the machine directly, recording every configuration

    The verdict is "halts" on reaching a halting state, "loops" when a
    configuration repeats (only with detect_loops), and "unknown" when
    max_steps runs out first.

    Raises:
        ArgumentError: the head leaves the tape
    """
    tape = tm.initial_tape()
    state, head = tm.start, 0
    run = TmRun("unknown", 0, [state], [head], [tuple(tape)])
    seen = {(state, head, tuple(tape))}
    for _ in range(max_steps):
        if state in tm.halting:
            break
        q2, g2, move = tm.delta[(state, tape[head])]
        tape[head] = g2
        head += MOVES[move]
        state = q2
        if not 0 <= head < tm.tape_len:
            if state not in tm.halting:
                raise ArgumentError(f"head left the tape at step {run.steps + 1}")
            head = min(max(head, 0), tm.tape_len - 1)
        run.steps += 1
        run.states.append(state)
        run.heads.append(head)
        run.tapes.append(tuple(tape))
        config = (state, head, tuple(tape))
        if detect_loops and state not in tm.halting and config in seen:
            run.verdict = "loops"
            return run
        seen.add(config)
    if state in tm.halting:
        run.verdict = "halts"
    logger.info(f"Direct TM simulation: {run.verdict} after {run.steps} steps")
    return run


def tm_from_dict(doc: dict) -> TmSpec:
    try:
        delta = {}
        for row in doc["delta"]:
            if len(row) != 5:
                raise InstanceError(f"delta rows need 5 entries, got {row}", field="delta")
            q, g, q2, g2, move = row
            delta[(q, g)] = (q2, g2, move)
        word = doc.get("input", "")
        return TmSpec(
            states=tuple(doc["states"]),
            start=doc.get("start", doc["states"][0]),
            accept=doc.get("accept"),
            reject=doc.get("reject"),
            gamma=tuple(doc["gamma"]),
            sigma=tuple(doc.get("sigma", doc["gamma"])),
            blank=doc.get("blank", doc["gamma"][0]),
            delta=delta,
            input=tuple(word) if isinstance(word, str) else tuple(word),
            tape_len=int(doc["tape_len"]),
        )
    except KeyError as e:
        raise InstanceError(f"TM description is missing key {e}", field=str(e.args[0])) from e


def load_tm(path: str) -> TmSpec:
    """Load a TM description file"""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except FileNotFoundError as e:
        raise InstanceError(f"TM file {path} does not exist", field="tm") from e
    except json.JSONDecodeError as e:
        raise InstanceError(f"invalid JSON in {path}: {e.msg} (column {e.colno})", line=e.lineno) from e
    return tm_from_dict(doc)
