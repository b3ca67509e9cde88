"""Baseline exhaustive solver: the correctness oracle for everything else.

Enumerates all C(m, k) box subsets in lexicographic index order and returns
the first verified certificate.  No pruning: answers follow the problem
definition and nothing else.  Subsets under which a voter ties exactly
between two boxes cannot be verified and count as non-certificates.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .election import count_wins
from .model import DegenerateGeometryError, Instance


class Status(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass
class SolveStats:
    states_explored: int = 0
    subsets_checked: int = 0
    elapsed_s: float = 0.0
    engine: str = ""
    # Separator-only fields (kept here so both engines share one answer type).
    max_depth: int = 0
    nooses_enumerated: int = 0
    fallback_used: bool = False
    separator_status: Optional[str] = None
    split_shapes: set = field(default_factory=set)  # (parent_k, child_k) pairs
    accepted_nooses: list = field(default_factory=list)  # (noose, state) pairs
    depth_bound: int = 0


@dataclass
class SolveAnswer:
    status: Status
    certificate: Optional[tuple[int, ...]]
    stats: SolveStats

    def __post_init__(self):
        if self.status is Status.YES:
            assert self.certificate is not None
        else:
            assert self.certificate is None


def brute_solve(inst: Instance, rule: str = "plurality") -> SolveAnswer:
    """Decide the instance by full enumeration; deterministic certificate."""
    start = time.perf_counter()
    stats = SolveStats(engine="brute")
    for subset in itertools.combinations(range(inst.m), inst.k):
        stats.subsets_checked += 1
        try:
            outcome = count_wins(inst, subset, rule)
        except DegenerateGeometryError:
            continue
        if outcome.target_wins >= inst.ell:
            stats.states_explored = stats.subsets_checked
            stats.elapsed_s = time.perf_counter() - start
            return SolveAnswer(Status.YES, subset, stats)
    stats.states_explored = stats.subsets_checked
    stats.elapsed_s = time.perf_counter() - start
    return SolveAnswer(Status.NO, None, stats)


def brute_count_optimal(inst: Instance, rule: str = "plurality") -> int:
    """Maximum number of districts the target can win over all k-subsets."""
    best = 0
    for subset in itertools.combinations(range(inst.m), inst.k):
        try:
            outcome = count_wins(inst, subset, rule)
        except DegenerateGeometryError:
            continue
        if outcome.target_wins > best:
            best = outcome.target_wins
    return best
