"""District formation from a chosen box set and win counting.

Every voter votes at the nearest chosen box (exact squared distances); an
exact tie is a degenerate input.  Districts are decided by an anonymous
rule from the registry; empty districts have no winner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .exactgeom import sqd_t
from .model import (
    CandidateId,
    DegenerateGeometryError,
    InputError,
    Instance,
    Point,
    Ranking,
    Voter,
    anonymous_rule_eval,
)


@dataclass(frozen=True)
class Districting:
    """assignment maps voter index -> position in the chosen box list;
    profiles[j] is the (ranking -> count) multiset of district j."""

    assignment: dict[int, int]
    profiles: tuple[dict[Ranking, int], ...]


@dataclass(frozen=True)
class ElectionOutcome:
    winners: tuple[Optional[CandidateId], ...]
    target_wins: int


def assign_voters(voters: Sequence[Voter], chosen: Sequence[Point]) -> Districting:
    """Assign every voter to its unique nearest box among `chosen`."""
    if not chosen:
        raise InputError("no boxes chosen")
    box_pts = [p.as_tuple() for p in chosen]
    assignment: dict[int, int] = {}
    profiles: list[dict[Ranking, int]] = [dict() for _ in chosen]
    for vi, voter in enumerate(voters):
        vt = voter.location.as_tuple()
        best_j = 0
        best = sqd_t(vt, box_pts[0])
        tie = False
        for j in range(1, len(box_pts)):
            d = sqd_t(vt, box_pts[j])
            if d < best:
                best, best_j, tie = d, j, False
            elif d == best:
                tie = True
        if tie:
            raise DegenerateGeometryError("voter %d equidistant from two chosen boxes" % vi)
        assignment[vi] = best_j
        prof = profiles[best_j]
        prof[voter.ranking] = prof.get(voter.ranking, 0) + voter.multiplicity
    return Districting(assignment=assignment, profiles=tuple(profiles))


def count_wins(inst: Instance, chosen: Sequence[int], rule: str = "plurality") -> ElectionOutcome:
    """Winners per chosen box and the number of districts the target wins."""
    idxs = list(chosen)
    if not idxs:
        raise InputError("chosen set is empty")
    if len(set(idxs)) != len(idxs):
        raise InputError("chosen box indices repeat")
    if any(i < 0 or i >= inst.m for i in idxs):
        raise InputError("chosen box index out of range")
    districting = assign_voters(inst.voters, [inst.boxes[i] for i in idxs])
    winners = tuple(anonymous_rule_eval(rule, prof) for prof in districting.profiles)
    target_wins = sum(1 for w in winners if w == inst.target)
    return ElectionOutcome(winners=winners, target_wins=target_wins)


def is_yes_certificate(inst: Instance, chosen: Sequence[int], rule: str = "plurality") -> bool:
    """True iff `chosen` is a size-k box subset under which the target wins
    at least ell districts.  Subsets that hit an exact assignment tie are
    not certificates."""
    idxs = sorted(set(chosen))
    if len(idxs) != inst.k or len(set(chosen)) != len(list(chosen)):
        return False
    if any(i < 0 or i >= inst.m for i in idxs):
        return False
    try:
        outcome = count_wins(inst, idxs, rule)
    except DegenerateGeometryError:
        return False
    return outcome.target_wins >= inst.ell
