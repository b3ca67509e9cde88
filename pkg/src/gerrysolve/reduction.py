"""Grid tiling instances, their brute-force solver, and the reduction to
the ballot-box gerrymandering problem.

The instance lives on a k x k grid of large cells, one small n x n box grid
centred in each cell; neighbouring cells have mirrored box grids.  Blue
voter blocks sit near the four border midpoints of each cell and one red
block (larger by exactly one voter) sits at the cell centre, with block
sizes growing geometrically across cells, so a full red sweep forces one
box per cell and consistent coordinates along rows and columns.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .exactgeom import sqd_t
from .model import InputError, Instance, Point, Voter, make_instance, rat

RED = "red"
BLUE = "blue"

GROUPS = ("left", "up", "right", "down", "center")


@dataclass(frozen=True)
class GridTilingInstance:
    """k, n, and one non-empty set of (p, q) pairs per cell (i, j), with
    1 <= p, q <= n.  Cell (i, j) is stored at index (i-1)*k + (j-1)."""

    k: int
    n: int
    sets: tuple[frozenset, ...]

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise InputError("grid tiling needs k >= 1 and n >= 1")
        if len(self.sets) != self.k * self.k:
            raise InputError("expected %d cell sets, got %d" % (self.k * self.k, len(self.sets)))
        for idx, cell in enumerate(self.sets):
            if not cell:
                raise InputError("cell set %d is empty" % idx)
            for p, q in cell:
                if not (1 <= p <= self.n and 1 <= q <= self.n):
                    raise InputError("pair (%d, %d) outside [1..%d]^2" % (p, q, self.n))

    def cell(self, i: int, j: int) -> frozenset:
        return self.sets[(i - 1) * self.k + (j - 1)]


def make_grid_tiling(k: int, n: int, sets) -> GridTilingInstance:
    return GridTilingInstance(int(k), int(n), tuple(frozenset((int(p), int(q)) for p, q in s) for s in sets))


@dataclass(frozen=True)
class GridTilingSolution:
    """selection[(i, j)] = the chosen pair of cell (i, j)."""

    selection: dict

    def pair(self, i: int, j: int):
        return self.selection[(i, j)]


def solution_is_consistent(gt: GridTilingInstance, sol: GridTilingSolution) -> bool:
    """Membership plus the row/column matching constraints."""
    for i in range(1, gt.k + 1):
        for j in range(1, gt.k + 1):
            if (i, j) not in sol.selection or sol.selection[(i, j)] not in gt.cell(i, j):
                return False
    for i in range(1, gt.k):
        for j in range(1, gt.k + 1):
            if sol.selection[(i, j)][0] != sol.selection[(i + 1, j)][0]:
                return False
    for i in range(1, gt.k + 1):
        for j in range(1, gt.k):
            if sol.selection[(i, j)][1] != sol.selection[(i, j + 1)][1]:
                return False
    return True


def gt_brute_solve(gt: GridTilingInstance) -> Optional[GridTilingSolution]:
    """Exhaustive search with neighbour propagation; returns the
    lexicographically first solution in cell-index order, or None."""
    cells = [(i, j) for i in range(1, gt.k + 1) for j in range(1, gt.k + 1)]
    choice: dict = {}

    def feasible(cell, pair):
        i, j = cell
        p, q = pair
        if (i - 1, j) in choice and choice[(i - 1, j)][0] != p:
            return False
        if (i, j - 1) in choice and choice[(i, j - 1)][1] != q:
            return False
        return True

    def backtrack(pos: int) -> bool:
        if pos == len(cells):
            return True
        cell = cells[pos]
        for pair in sorted(gt.cell(*cell)):
            if feasible(cell, pair):
                choice[cell] = pair
                if backtrack(pos + 1):
                    return True
                del choice[cell]
        return False

    if backtrack(0):
        return GridTilingSolution(dict(choice))
    return None


# ---------------------------------------------------------------------------
# Reduction to gerrymandering


@dataclass(frozen=True)
class VoterGroup:
    cell: tuple[int, int]
    position: str  # one of GROUPS
    location: Point
    candidate: str
    multiplicity: int


@dataclass(frozen=True)
class ReductionMap:
    box_of_pair: dict  # (i, j, p, q) -> box index
    pair_of_box: dict  # box index -> (i, j, p, q)
    voter_groups: tuple[VoterGroup, ...]

    def boxes_of_cell(self, i: int, j: int) -> list[int]:
        return sorted(b for b, (bi, bj, _, _) in self.pair_of_box.items() if (bi, bj) == (i, j))


def _cell_width(n: int) -> int:
    return 10 * n * n + 4 * n


def box_coordinates(n: int, i: int, j: int, p: int, q: int) -> tuple[int, int]:
    """Integer coordinates of the box for pair (p, q) in cell (i, j); the
    small grid is mirrored in odd-index cells."""
    w = _cell_width(n)
    x = w * (i - 1) + 5 * n * n + (4 * p if i % 2 == 0 else 4 * (n - p))
    y = w * (j - 1) + 5 * n * n + (4 * q if j % 2 == 0 else 4 * (n - q))
    return x, y


def group_positions(n: int, i: int, j: int) -> dict[str, tuple[int, int]]:
    """Positions of the four blue border blocks and the red centre block."""
    w = _cell_width(n)
    cx = w * (i - 1) + 5 * n * n + 2 * n
    cy = w * (j - 1) + 5 * n * n + 2 * n
    return {
        "left": (w * (i - 1) + 1, cy),
        "up": (cx, w * (j - 1) + 1),
        "right": (w * i - 1, cy),
        "down": (cx, w * j - 1),
        "center": (cx, cy),
    }


def reduce_instance(gt: GridTilingInstance, extra_candidates: int = 0) -> tuple[Instance, ReductionMap]:
    """Build the equivalent gerrymandering instance: one box per pair, five
    voter blocks per cell, k' = ell' = k^2, target red.

    extra_candidates appends that many never-top dummy candidates to every
    ranking (the construction works for any number of candidates >= 2).
    """
    k, n = gt.k, gt.n
    dummies = tuple("pad%d" % d for d in range(1, extra_candidates + 1))
    candidates = (RED, BLUE) + dummies
    red_ranking = (RED, BLUE) + dummies
    blue_ranking = (BLUE, RED) + dummies

    boxes: list[Point] = []
    box_of_pair: dict = {}
    pair_of_box: dict = {}
    voters: list[Voter] = []
    groups: list[VoterGroup] = []

    for i in range(1, k + 1):
        for j in range(1, k + 1):
            for p, q in sorted(gt.cell(i, j)):
                x, y = box_coordinates(n, i, j, p, q)
                box_of_pair[(i, j, p, q)] = len(boxes)
                pair_of_box[len(boxes)] = (i, j, p, q)
                boxes.append(Point(rat(x), rat(y)))

    for i in range(1, k + 1):
        for j in range(1, k + 1):
            block = 5 ** ((i - 1) * k + (j - 1))
            positions = group_positions(n, i, j)
            for name in GROUPS:
                x, y = positions[name]
                if name == "center":
                    cand, mult = RED, 4 * block + 1
                    ranking = red_ranking
                else:
                    cand, mult = BLUE, block
                    ranking = blue_ranking
                loc = Point(rat(x), rat(y))
                voters.append(Voter(loc, ranking, mult))
                groups.append(VoterGroup((i, j), name, loc, cand, mult))

    inst = make_instance(candidates, voters, boxes, k * k, k * k, RED)
    return inst, ReductionMap(box_of_pair, pair_of_box, tuple(groups))


def lift_solution(rmap: ReductionMap, chosen) -> Optional[GridTilingSolution]:
    """Invert box_of_pair: exactly one chosen box per cell lifts to a pair
    selection, anything else gives None."""
    selection: dict = {}
    for b in chosen:
        if b not in rmap.pair_of_box:
            return None
        i, j, p, q = rmap.pair_of_box[b]
        if (i, j) in selection:
            return None
        selection[(i, j)] = (p, q)
    cells = {(i, j) for (i, j, _, _) in rmap.box_of_pair}
    if set(selection) != cells:
        return None
    return GridTilingSolution(selection)


# ---------------------------------------------------------------------------
# Distance-claim verification


@dataclass(frozen=True)
class ClaimViolation:
    axis: str  # "x" or "y"
    cells: tuple
    own_pair: tuple
    other_pair: tuple
    group: str
    detail: str


@dataclass(frozen=True)
class ClaimReport:
    violations: tuple[ClaimViolation, ...]
    checks: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def _expected_home_right(i: int, p: int, pp: int) -> bool:
    """Does the right-border block of cell i stay with its own box when the
    neighbour picked pp?  Mirroring flips the comparison with cell parity."""
    return p <= pp if i % 2 == 1 else p >= pp


def _expected_home_left(i: int, p: int, pp: int) -> bool:
    """Same for the left-border block of cell i+1 (p is cell i's choice)."""
    return p <= pp if i % 2 == 0 else p >= pp


def verify_claims(gt: GridTilingInstance) -> ClaimReport:
    """Exactly check, for every adjacent cell pair and every pair of box
    choices, that the border blocks vote with the side predicted by the
    mirrored-grid distance bands, and that no comparison ties."""
    n = gt.n
    violations: list[ClaimViolation] = []
    n_checks = 0

    def check(axis, cells, own_pair, other_pair, group, voter_xy, own_xy, other_xy, expect_home):
        nonlocal n_checks
        n_checks += 1
        d_own = sqd_t(voter_xy, own_xy)
        d_other = sqd_t(voter_xy, other_xy)
        if d_own == d_other:
            violations.append(
                ClaimViolation(axis, cells, own_pair, other_pair, group, "exact distance tie")
            )
        elif (d_own < d_other) != expect_home:
            violations.append(
                ClaimViolation(
                    axis,
                    cells,
                    own_pair,
                    other_pair,
                    group,
                    "expected home=%s but d_own=%s d_other=%s" % (expect_home, d_own, d_other),
                )
            )

    for i in range(1, gt.k):
        for j in range(1, gt.k + 1):
            pos_a = group_positions(n, i, j)
            pos_b = group_positions(n, i + 1, j)
            for (p, q) in sorted(gt.cell(i, j)):
                ba = box_coordinates(n, i, j, p, q)
                for (pp, qq) in sorted(gt.cell(i + 1, j)):
                    bb = box_coordinates(n, i + 1, j, pp, qq)
                    check(
                        "x", ((i, j), (i + 1, j)), (p, q), (pp, qq), "right",
                        pos_a["right"], ba, bb, _expected_home_right(i, p, pp),
                    )
                    check(
                        "x", ((i + 1, j), (i, j)), (pp, qq), (p, q), "left",
                        pos_b["left"], bb, ba, _expected_home_left(i, p, pp),
                    )

    for i in range(1, gt.k + 1):
        for j in range(1, gt.k):
            pos_a = group_positions(n, i, j)
            pos_b = group_positions(n, i, j + 1)
            for (p, q) in sorted(gt.cell(i, j)):
                ba = box_coordinates(n, i, j, p, q)
                for (pp, qq) in sorted(gt.cell(i, j + 1)):
                    bb = box_coordinates(n, i, j + 1, pp, qq)
                    check(
                        "y", ((i, j), (i, j + 1)), (p, q), (pp, qq), "down",
                        pos_a["down"], ba, bb, _expected_home_right(j, q, qq),
                    )
                    check(
                        "y", ((i, j + 1), (i, j)), (pp, qq), (p, q), "up",
                        pos_b["up"], bb, ba, _expected_home_left(j, q, qq),
                    )

    return ClaimReport(tuple(violations), n_checks)
