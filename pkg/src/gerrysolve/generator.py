"""Seeded random instance generation on a rational grid.

Points violating the validation assumptions (exact voter equidistance,
and with few boxes also cocircularity) are resampled until the instance
validates, so generated instances are always in general position.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

from .model import InputError, Instance, Point, Voter, make_instance, rat, validate_instance

DEEP_CHECK_MAX_BOXES = 12


@dataclass(frozen=True)
class GenParams:
    n_voters: int = 8
    m_boxes: int = 5
    n_candidates: int = 2
    k: int = 3
    ell: int = 1
    # Axis-aligned sampling box and grid resolution (steps of 1/denominator).
    bbox: tuple = (0, 0, 10, 10)
    coord_denominator: int = 7
    target: str = ""

    def candidate_ids(self) -> tuple[str, ...]:
        if self.n_candidates <= 26:
            return tuple(string.ascii_uppercase[: self.n_candidates])
        return tuple("c%d" % i for i in range(1, self.n_candidates + 1))


def _check_params(p: GenParams) -> None:
    if p.n_candidates < 1:
        raise InputError("need at least one candidate")
    if not (1 <= p.k <= p.m_boxes):
        raise InputError("need 1 <= k <= m_boxes")
    if not (0 <= p.ell <= p.k):
        raise InputError("need 0 <= ell <= k")
    if p.coord_denominator < 1:
        raise InputError("coord_denominator must be >= 1")
    x0, y0, x1, y1 = p.bbox
    if not (x0 < x1 and y0 < y1):
        raise InputError("bbox must be non-degenerate")
    if p.n_voters < 0:
        raise InputError("n_voters must be >= 0")


def gen_random(seed: int, params: GenParams, max_rounds: int = 1000) -> Instance:
    """Deterministic per seed; resamples offending points until the instance
    passes validation (deep geometry checks when the box count is small)."""
    _check_params(params)
    rng = random.Random(seed)
    x0, y0, x1, y1 = params.bbox
    den = params.coord_denominator
    nx = (x1 - x0) * den
    ny = (y1 - y0) * den

    def sample_point() -> Point:
        return Point(
            rat(x0 * den + rng.randrange(nx + 1), den),
            rat(y0 * den + rng.randrange(ny + 1), den),
        )

    candidates = params.candidate_ids()
    target = params.target or candidates[0]
    if target not in candidates:
        raise InputError("target %r not among generated candidates" % target)

    def sample_ranking() -> tuple:
        order = list(candidates)
        rng.shuffle(order)
        return tuple(order)

    voters = [Voter(sample_point(), sample_ranking()) for _ in range(params.n_voters)]
    boxes = []
    taken = set()
    for _ in range(params.m_boxes):
        while True:
            p = sample_point()
            if p.as_tuple() not in taken:
                taken.add(p.as_tuple())
                boxes.append(p)
                break

    deep = params.m_boxes <= DEEP_CHECK_MAX_BOXES
    for _round in range(max_rounds):
        inst = make_instance(candidates, voters, boxes, params.k, params.ell, target)
        report = validate_instance(inst, deep_geometry=deep)
        if report.ok:
            return inst
        # Resample one witness point per violation and revalidate.
        for violation in report.violations:
            if violation.kind == "EquidistantVoter":
                vi = violation.witnesses[0]
                voters[vi] = Voter(sample_point(), voters[vi].ranking, voters[vi].multiplicity)
            elif violation.kind in ("DuplicateBox", "Cocircular4", "CircumcenterCoincidence"):
                bi = violation.witnesses[-1]
                while True:
                    p = sample_point()
                    if p.as_tuple() not in taken:
                        taken.add(p.as_tuple())
                        boxes[bi] = p
                        break
            else:
                raise InputError("unfixable validation violation: %s" % (violation,))
    raise InputError("resample budget exceeded; sampling box too coarse for these parameters")
