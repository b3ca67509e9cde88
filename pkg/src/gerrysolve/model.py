"""Problem data types, instance validation, and anonymous voting rules.

All coordinates are exact rationals (gmpy2.mpq when available, else
fractions.Fraction).  Every comparison in this package is exact; floats
appear only in SVG output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

try:
    from gmpy2 import mpq as _ratimpl
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    from fractions import Fraction as _ratimpl


class GerryError(Exception):
    """Base class for errors raised by this package."""


class InputError(GerryError):
    """Malformed or inconsistent input (bad file, unknown rule, ...)."""


class DegenerateGeometryError(GerryError):
    """A geometric general-position assumption was violated exactly."""


def rat(num, den=1):
    """Exact rational from ints, rationals, or strings like '7', '-3/4', '0.25'."""
    if isinstance(num, str):
        s = num.strip()
        if "/" in s:
            n, d = s.split("/", 1)
            return _ratimpl(int(n), int(d) * den)
        if "." in s or "e" in s or "E" in s:
            from fractions import Fraction

            f = Fraction(s)
            return _ratimpl(f.numerator, f.denominator * den)
        return _ratimpl(int(s), den)
    return _ratimpl(num, den)


def rat_str(value) -> str:
    """Canonical string for a rational: lowest terms, '/1' omitted."""
    value = _ratimpl(value)
    if value.denominator == 1:
        return str(int(value.numerator))
    return "%d/%d" % (int(value.numerator), int(value.denominator))


# Type aliases used throughout; both are ordinary values, not wrappers.
Rational = type(_ratimpl(1))
CandidateId = str
# A ranking is a total order over candidate ids, best first.
Ranking = tuple[CandidateId, ...]


@dataclass(frozen=True)
class Point:
    x: object
    y: object

    def as_tuple(self):
        return (self.x, self.y)

    def __iter__(self):
        return iter((self.x, self.y))


def pt(x, y) -> Point:
    return Point(rat(x), rat(y))


@dataclass(frozen=True)
class Voter:
    location: Point
    ranking: Ranking
    multiplicity: int = 1

    def __post_init__(self):
        if self.multiplicity < 1:
            raise InputError("voter multiplicity must be >= 1")


@dataclass(frozen=True)
class Instance:
    """A gerrymandering instance: pick k of the candidate boxes so that the
    target candidate wins at least ell nearest-box districts."""

    candidates: tuple[CandidateId, ...]
    voters: tuple[Voter, ...]
    boxes: tuple[Point, ...]
    k: int
    ell: int
    target: CandidateId

    def __post_init__(self):
        if len(set(self.candidates)) != len(self.candidates):
            raise InputError("candidate ids must be pairwise distinct")
        if any(not c for c in self.candidates):
            raise InputError("candidate ids must be non-empty")
        if self.target not in self.candidates:
            raise InputError("target %r is not a candidate" % (self.target,))

    @property
    def m(self) -> int:
        return len(self.boxes)

    @property
    def n_voters(self) -> int:
        return len(self.voters)

    @property
    def total_multiplicity(self) -> int:
        return sum(v.multiplicity for v in self.voters)


def make_instance(candidates, voters, boxes, k, ell, target) -> Instance:
    return Instance(tuple(candidates), tuple(voters), tuple(boxes), int(k), int(ell), target)


# ---------------------------------------------------------------------------
# Validation


VIOLATION_KINDS = (
    "ParamOrder",
    "DuplicateBox",
    "EquidistantVoter",
    "Cocircular4",
    "CircumcenterCoincidence",
    "BadRanking",
)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    witnesses: tuple[int, ...]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]

    @staticmethod
    def from_violations(violations: Iterable[Violation]) -> "ValidationReport":
        vs = tuple(violations)
        return ValidationReport(ok=not vs, violations=vs)


def _sqd(p: Point, q: Point):
    dx = p.x - q.x
    dy = p.y - q.y
    return dx * dx + dy * dy


def validate_instance(inst: Instance, deep_geometry: bool = False) -> ValidationReport:
    """Check the model assumptions and report every violation found.

    Always checked: parameter ordering, duplicate boxes, rankings being
    permutations of the candidate set, and exact voter equidistance over all
    (voter, box, box) triples.  With deep_geometry, also check that no four
    boxes are cocircular and no box is exactly the circumcenter of three
    others (O(m^4); meant for m up to a few dozen).
    """
    violations: list[Violation] = []

    if not (0 <= inst.ell <= inst.k <= inst.m) or inst.k < 1:
        violations.append(
            Violation(
                "ParamOrder",
                "need 0 <= ell <= k <= m, got ell=%d k=%d m=%d" % (inst.ell, inst.k, inst.m),
                (),
            )
        )

    seen: dict[tuple, int] = {}
    for i, b in enumerate(inst.boxes):
        key = (b.x, b.y)
        if key in seen:
            violations.append(
                Violation("DuplicateBox", "boxes %d and %d coincide" % (seen[key], i), (seen[key], i))
            )
        else:
            seen[key] = i

    cand_set = frozenset(inst.candidates)
    for i, v in enumerate(inst.voters):
        if len(v.ranking) != len(cand_set) or set(v.ranking) != cand_set:
            violations.append(
                Violation("BadRanking", "voter %d ranking is not a permutation of the candidates" % i, (i,))
            )

    for vi, v in enumerate(inst.voters):
        dists = [_sqd(v.location, b) for b in inst.boxes]
        for b1, b2 in itertools.combinations(range(inst.m), 2):
            if dists[b1] == dists[b2]:
                violations.append(
                    Violation(
                        "EquidistantVoter",
                        "voter %d equidistant from boxes %d and %d" % (vi, b1, b2),
                        (vi, b1, b2),
                    )
                )

    if deep_geometry:
        from .exactgeom import circumcenter

        for quad in itertools.combinations(range(inst.m), 4):
            pts = [inst.boxes[i] for i in quad]
            cocircular_reported = False
            for d in range(4):
                triple = [i for i in range(4) if i != d]
                center = circumcenter(pts[triple[0]], pts[triple[1]], pts[triple[2]])
                if center is None:
                    continue
                r2 = _sqd(center, pts[triple[0]])
                if not cocircular_reported and _sqd(center, pts[d]) == r2:
                    violations.append(
                        Violation("Cocircular4", "boxes %s lie on one circle" % (quad,), quad)
                    )
                    cocircular_reported = True
                if (center.x, center.y) == (pts[d].x, pts[d].y):
                    violations.append(
                        Violation(
                            "CircumcenterCoincidence",
                            "box %d is the circumcenter of boxes %s"
                            % (quad[d], tuple(quad[i] for i in triple)),
                            quad,
                        )
                    )

    return ValidationReport.from_violations(violations)


# ---------------------------------------------------------------------------
# Anonymous voting rules

# A profile is a mapping from ranking to a non-negative vote count.
Profile = Mapping[Ranking, int]
RuleFn = Callable[[Profile], Optional[CandidateId]]


def plurality_winner(profile: Profile) -> Optional[CandidateId]:
    """Strict-win plurality: the candidate with strictly more top votes than
    every rival, or None on a tie for first place or an empty profile."""
    tally: dict[CandidateId, int] = {}
    for ranking, count in profile.items():
        if count < 0:
            raise InputError("negative vote count")
        if count == 0 or not ranking:
            continue
        tally[ranking[0]] = tally.get(ranking[0], 0) + count
    if not tally:
        return None
    best = max(tally.values())
    if best == 0:
        return None
    winners = [c for c, t in tally.items() if t == best]
    return winners[0] if len(winners) == 1 else None


_RULES: dict[str, RuleFn] = {"plurality": plurality_winner}


def register_rule(rule_id: str, fn: RuleFn) -> None:
    """Register an anonymous district rule: a pure function of the profile
    (the multiset of (ranking, count)), returning a winner or None."""
    _RULES[rule_id] = fn


def known_rules() -> tuple[str, ...]:
    return tuple(sorted(_RULES))


def anonymous_rule_eval(rule_id: str, profile: Profile) -> Optional[CandidateId]:
    try:
        fn = _RULES[rule_id]
    except KeyError:
        raise InputError("unknown voting rule %r (known: %s)" % (rule_id, ", ".join(known_rules())))
    return fn(profile)
