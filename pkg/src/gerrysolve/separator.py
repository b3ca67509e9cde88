"""Recursive solver that guesses balanced noose separators in the Voronoi
diagram of a hypothetical solution.

A state carries voters, candidate boxes, the boxes already committed
(`fixed`), exact per-ranking vote counts demanded at each fixed box, and
boundary segments that must stay inside their anchors' Voronoi cells.  When
few boxes remain free the state is decided by exhaustive search; otherwise
the solver enumerates closed polygons that alternate between boxes and
circumcenters of box triples, splits the state along each polygon, guesses
how budgets and vote counts divide, and recurses on both sides.

Soundness never depends on the enumeration: every certificate is
re-verified against the problem definition.  Completeness under the
configured noose-length cap is an assumption, so a fruitless search yields
Unknown unless the caller asserts the cap (assumed_alpha) or enables
safe_mode, which confirms any non-yes outcome with the brute-force oracle.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .brute import SolveAnswer, SolveStats, Status, brute_solve
from .election import is_yes_certificate
from .exactgeom import (
    PointLocation,
    build_voronoi,
    circumcenter_t,
    orient_t,
    point_in_polygon_t,
    polygon_is_simple_t,
    proper_cross_t,
    segments_intersect_t,
    sqd_t,
)
from .model import (
    DegenerateGeometryError,
    GerryError,
    InputError,
    Instance,
    Point,
    anonymous_rule_eval,
)


def ceil34(k: int) -> int:
    """Ceiling of 3k/4: the balance cap for child budgets."""
    return -((-3 * k) // 4)


def depth_bound(k: int, gamma: int) -> int:
    """Smallest t with (4/3)^t >= k/gamma, plus one; exact integer search."""
    if k <= gamma:
        return 1
    t = 0
    num, den = 1, 1
    while num * gamma < k * den:
        num *= 4
        den *= 3
        t += 1
    return t + 1


@dataclass
class SeparatorConfig:
    gamma: int = 2
    max_noose_boxes: int = 4
    safe_mode: bool = False
    rule: str = "plurality"
    # Asserted constant for the noose-length bound alpha*sqrt(k).  When set
    # and max_noose_boxes covers ceil(alpha*sqrt(k)) at the state's k, an
    # exhausted search certifies a No; otherwise exhaustion means Unknown.
    assumed_alpha: Optional[float] = None
    # Instrumentation hooks: on_noose(state, noose) for every noose tried,
    # on_split(state, noose, guess, child1, child2) for every recursion.
    on_noose: Optional[Callable] = None
    on_split: Optional[Callable] = None

    def __post_init__(self):
        if self.gamma < 1:
            raise InputError("gamma must be >= 1")
        if self.max_noose_boxes < 3:
            raise InputError("max_noose_boxes must be >= 3")

    def covers(self, k: int) -> bool:
        if self.assumed_alpha is None:
            return False
        return self.max_noose_boxes >= self.assumed_alpha * (k ** 0.5)


class _Ctx:
    """Shared per-solve geometry tables: coordinates, interned rankings,
    memoized squared distances, circumcenters, and crossing predicates."""

    def __init__(self, inst: Instance, rule: str):
        self.inst = inst
        self.rule = rule
        self.target = inst.target
        self.boxes: list[tuple] = [b.as_tuple() for b in inst.boxes]
        self.rankings: list[tuple] = []
        rank_ix: dict[tuple, int] = {}
        self.voters: list[tuple] = []
        self.voter_rank: list[int] = []
        self.voter_mult: list[int] = []
        for v in inst.voters:
            if v.ranking not in rank_ix:
                rank_ix[v.ranking] = len(self.rankings)
                self.rankings.append(v.ranking)
            self.voters.append(v.location.as_tuple())
            self.voter_rank.append(rank_ix[v.ranking])
            self.voter_mult.append(v.multiplicity)
        self.sqd_vb: list[list] = []
        self._sqd_pb: dict = {}
        self._circ: dict = {}
        self._cross: dict = {}
        self._segint: dict = {}
        # Closed region polygon of the initial boundary; set by init_state
        # and used by the solver to discard far-out candidate vertices.
        self.region_hull: Optional[list] = None
        # (voters, boxes, fixed, boundary, thirds limit) -> noose records.
        # Child states for one noose side differ only in budgets and count
        # demands, so the geometric work is shared across those variants.
        self.noose_cache: dict = {}
        self.stats = SolveStats(engine="separator")

    def add_anchor_boxes(self, anchors: list[tuple]) -> None:
        self.boxes = list(self.boxes) + list(anchors)
        self.sqd_vb = [[sqd_t(v, b) for b in self.boxes] for v in self.voters]

    def sqd_pb(self, p: tuple, b: int):
        key = (p, b)
        d = self._sqd_pb.get(key)
        if d is None:
            d = sqd_t(p, self.boxes[b])
            self._sqd_pb[key] = d
        return d

    def circumcenter(self, triple: tuple) -> Optional[tuple]:
        if triple in self._circ:
            return self._circ[triple]
        a, b, c = triple
        u = circumcenter_t(self.boxes[a], self.boxes[b], self.boxes[c])
        self._circ[triple] = u
        return u

    def crosses(self, a, b, c, d) -> bool:
        key = (a, b, c, d)
        r = self._cross.get(key)
        if r is None:
            r = proper_cross_t(a, b, c, d)
            self._cross[key] = r
        return r

    def intersects(self, a, b, c, d) -> bool:
        key = (a, b, c, d)
        r = self._segint.get(key)
        if r is None:
            r = segments_intersect_t(a, b, c, d)
            self._segint[key] = r
        return r

    def profile_of(self, counts: dict) -> dict:
        """{ranking index: count} -> {ranking: count} for the rule registry."""
        return {self.rankings[rix]: c for rix, c in counts.items() if c}


@dataclass(frozen=True, eq=False)
class State:
    """Recursion state (V, B, ell, k, F, v, Delta) over shared geometry."""

    voters: tuple[int, ...]
    boxes: frozenset
    ell: int
    k: int
    fixed: frozenset
    # (box index, ranking index) -> demanded count; absent means zero.
    fixed_counts: dict
    # Boundary soup: (endpoint a, endpoint b, anchor box index); exactly one
    # endpoint of each segment is the anchor box's location.
    boundary: tuple
    ctx: _Ctx = field(repr=False)

    def demanded_profile(self, box: int) -> dict:
        return {rix: c for (b, rix), c in self.fixed_counts.items() if b == box and c}


@dataclass(frozen=True)
class Noose:
    """Closed polygon alternating box anchors and circumcenter vertices:
    boxes[0], verts[0], boxes[1], verts[1], ..., closing at boxes[0].
    verts[i] is the exact circumcenter of triples[i], which contains
    boxes[i] and boxes[i+1]."""

    boxes: tuple[int, ...]
    verts: tuple[tuple, ...]
    triples: tuple[tuple, ...]

    @property
    def t(self) -> int:
        return len(self.boxes)

    def polygon_points(self, ctx: _Ctx) -> list[tuple]:
        pts = []
        for i, b in enumerate(self.boxes):
            pts.append(ctx.boxes[b])
            pts.append(self.verts[i])
        return pts

    def segments_with_anchors(self, ctx: _Ctx) -> list[tuple]:
        """2t boundary entries (a, b, anchor box index)."""
        out = []
        t = self.t
        for i in range(t):
            b_pt = ctx.boxes[self.boxes[i]]
            nxt = self.boxes[(i + 1) % t]
            out.append((b_pt, self.verts[i], self.boxes[i]))
            out.append((self.verts[i], ctx.boxes[nxt], nxt))
        return out

    def canonical_key(self):
        t = self.t
        fwd = [(self.boxes[i], self.triples[i]) for i in range(t)]
        # Reversal pairs box i with the vertex that precedes it.
        rev = [(self.boxes[i], self.triples[i - 1]) for i in range(t - 1, -1, -1)]
        best = None
        for seq in (fwd, rev):
            for r in range(t):
                rot = tuple(seq[r:] + seq[:r])
                if best is None or rot < best:
                    best = rot
        return best


@dataclass(frozen=True)
class SplitGuess:
    """One recursion guess: child budgets, win quotas, and demanded
    per-ranking counts at each child's fixed boxes (sorted item tuples)."""

    k1: int
    k2: int
    ell1: int
    ell2: int
    v1: tuple
    v2: tuple


# ---------------------------------------------------------------------------
# Initial state


def _mirror(p, a, b):
    """Reflect point p across the line through a and b (all tuples)."""
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
    return (2 * (a[0] + t * dx) - p[0], 2 * (a[1] + t * dy) - p[1])


def init_state(inst: Instance, rule: str = "plurality") -> State:
    """Wrap the instance for the recursion: add three distant anchor boxes
    (corners of a large triangle mirrored across their opposite sides),
    build the closed boundary hexagon walking their cells, and return the
    k+3 state whose validity matches the instance's answer."""
    base_ctx = _Ctx(inst, rule)
    pts = list(base_ctx.voters) + list(base_ctx.boxes)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    cx = (min(xs) + max(xs)) / 2
    cy = (min(ys) + max(ys)) / 2
    diam = max(max(xs) - min(xs), max(ys) - min(ys), 1)

    last_err: Optional[Exception] = None
    for attempt in range(6):
        m = 3 * diam * (2 ** attempt)
        t0 = (cx, cy + 6 * m)
        t1 = (cx - 4 * m, cy - 3 * m)
        t2 = (cx + 4 * m, cy - 3 * m)
        anchors = [_mirror(t0, t1, t2), _mirror(t1, t0, t2), _mirror(t2, t0, t1)]
        ctx = _Ctx(inst, rule)
        try:
            return _build_initial_state(inst, ctx, anchors, (cx, cy))
        except DegenerateGeometryError as err:
            last_err = err
    raise DegenerateGeometryError("could not place anchor triangle: %s" % last_err)


def _build_initial_state(inst: Instance, ctx: _Ctx, anchors: list, centre: tuple) -> State:
    n_orig = inst.m
    if set(anchors) & set(ctx.boxes) or len(set(anchors)) != 3:
        raise DegenerateGeometryError("anchor collides with an existing box")
    ctx.add_anchor_boxes(anchors)
    f_idx = [n_orig, n_orig + 1, n_orig + 2]

    # Anchors must be strictly farther from every voter than every real box.
    for vi in range(len(ctx.voters)):
        row = ctx.sqd_vb[vi]
        worst_real = max(row[b] for b in range(n_orig))
        for f in f_idx:
            if row[f] <= worst_real:
                raise DegenerateGeometryError("anchor too close to voter %d" % vi)

    diagram = build_voronoi([Point(*b) for b in ctx.boxes])

    # Hexagon corner between the cells of each anchor pair: the finite end
    # of their shared bisector edge (the outermost end if bounded).
    corners = {}
    for fa, fb in itertools.combinations(f_idx, 2):
        corner = None
        for e in diagram.edges:
            if set(e.sites) == {fa, fb}:
                lo, hi = e.endpoints()
                ends = [p.as_tuple() for p in (lo, hi) if p is not None]
                if len(ends) == 1:
                    corner = ends[0]
                elif len(ends) == 2:
                    corner = max(ends, key=lambda p: sqd_t(p, centre))
                break
        if corner is None:
            raise DegenerateGeometryError("anchor cells %d,%d not adjacent" % (fa, fb))
        corners[frozenset((fa, fb))] = corner

    boundary = []
    hex_points = []
    for i in range(3):
        fa = f_idx[i]
        fb = f_idx[(i + 1) % 3]
        u = corners[frozenset((fa, fb))]
        boundary.append((ctx.boxes[fa], u, fa))
        boundary.append((u, ctx.boxes[fb], fb))
        hex_points.append(ctx.boxes[fa])
        hex_points.append(u)

    if not polygon_is_simple_t(hex_points):
        raise DegenerateGeometryError("boundary hexagon is not simple")
    for p in list(ctx.voters) + ctx.boxes[:n_orig]:
        if point_in_polygon_t(hex_points, p) is not PointLocation.INSIDE:
            raise DegenerateGeometryError("point %s not strictly inside the boundary" % (p,))
    ctx.region_hull = hex_points

    return State(
        voters=tuple(range(len(ctx.voters))),
        boxes=frozenset(range(n_orig + 3)),
        ell=inst.ell,
        k=inst.k + 3,
        fixed=frozenset(f_idx),
        fixed_counts={},
        boundary=tuple(boundary),
        ctx=ctx,
    )


# ---------------------------------------------------------------------------
# Noose enumeration


def noose_respects_boundary(noose: Noose, state: State) -> bool:
    """Containment in the region bounded by Delta, decided as: no noose
    segment properly crosses a boundary segment (touching is allowed)."""
    ctx = state.ctx
    for a, b, _anchor in noose.segments_with_anchors(ctx):
        for c, d, _anc in state.boundary:
            if ctx.crosses(a, b, c, d):
                return False
    return True


def noose_is_wellformed(noose: Noose, state: State) -> bool:
    """Alternation, exact circumcenters, closure, simplicity; re-checked
    from scratch for tests and instrumentation."""
    ctx = state.ctx
    t = noose.t
    if t < 3 or len(set(noose.boxes)) != t:
        return False
    if any(b not in state.boxes for b in noose.boxes):
        return False
    for i in range(t):
        tri = noose.triples[i]
        if len(set(tri)) != 3 or any(b not in state.boxes for b in tri):
            return False
        if noose.boxes[i] not in tri or noose.boxes[(i + 1) % t] not in tri:
            return False
        if ctx.circumcenter(tri) != noose.verts[i]:
            return False
    return polygon_is_simple_t(noose.polygon_points(ctx))


def _forward_overlap(shared, x, y) -> bool:
    """x and y leave `shared` along the same ray (positive dot product)."""
    return ((x[0] - shared[0]) * (y[0] - shared[0]) + (x[1] - shared[1]) * (y[1] - shared[1])) > 0


def enumerate_nooses(
    state: State,
    cfg: SeparatorConfig,
    _vertex_ok: Optional[Callable] = None,
    _site_consistent: bool = False,
    _thirds_limit: Optional[int] = None,
) -> Iterator[Noose]:
    """Yield every simple closed alternating noose with 3..max_noose_boxes
    box anchors whose segments respect the state boundary, each exactly once
    up to rotation and reflection, in order of increasing box count.

    The private knobs let the solver drop vertices and partial chains that
    provably cannot match any solution diagram; the public default applies
    only the documented invariants.
    """
    ctx = state.ctx
    if cfg.max_noose_boxes < 3:
        return
    boxes = sorted(state.boxes)

    seg_ok_cache: dict = {}

    def seg_ok(b: int, u: tuple) -> bool:
        key = (b, u)
        r = seg_ok_cache.get(key)
        if r is None:
            a = ctx.boxes[b]
            r = a != u and all(not ctx.crosses(a, u, c, d) for c, d, _anc in state.boundary)
            seg_ok_cache[key] = r
        return r

    # Candidate connectors per ordered box pair: circumcenters of triples
    # containing the pair, with both incident segments admissible.
    conn: dict = {}
    radius2: dict = {}
    box_pts = {ctx.boxes[b] for b in boxes}
    for tri in itertools.combinations(boxes, 3):
        u = ctx.circumcenter(tri)
        if u is None or u in box_pts:
            continue
        if _vertex_ok is not None and not _vertex_ok(u, tri):
            continue
        radius2[tri] = ctx.sqd_pb(u, tri[0])
        for b1, b2 in itertools.combinations(tri, 2):
            if seg_ok(b1, u) and seg_ok(b2, u):
                conn.setdefault((b1, b2), []).append((u, tri))
                conn.setdefault((b2, b1), []).append((u, tri))

    for t in range(3, cfg.max_noose_boxes + 1):
        for pos, b0 in enumerate(boxes):
            rest = boxes[pos + 1 :]
            if len(rest) < t - 1:
                break
            yield from _assemble(
                ctx, state.fixed, conn, radius2, b0, rest, t, _site_consistent, _thirds_limit
            )


def _assemble(ctx, fixed, conn, radius2, b0, rest, t, site_consistent, thirds_limit) -> Iterator[Noose]:
    """DFS over alternating chains starting at b0 (the cycle minimum), with
    reflection killed by requiring boxes[1] < boxes[-1].

    With site_consistent, a connector whose circumcircle strictly contains a
    chain box (or a box inside an earlier circle) is pruned: such a vertex is
    never a Voronoi vertex of a diagram containing all noose boxes.

    With thirds_limit, the non-fixed boxes of the noose plus the off-noose
    non-fixed triple members must fit into the selection budget k - |F|:
    every triple of a solution diagram's vertex consists of chosen boxes.
    The tracked count never decreases along a chain, so partial chains are
    pruned exactly.
    """
    b0_pt = ctx.boxes[b0]
    intersects = ctx.intersects

    def chain_ok(pts, q) -> bool:
        # New segment pts[-1] -> q: no doubling back, no hit on committed
        # non-adjacent segments.
        a = pts[-1]
        if len(pts) >= 2 and orient_t(pts[-2], a, q) == 0 and _forward_overlap(a, pts[-2], q):
            return False
        for i in range(len(pts) - 2):
            if intersects(pts[i], pts[i + 1], a, q):
                return False
        return True

    def close_ok(pts) -> bool:
        a, b = pts[-1], pts[0]
        if orient_t(pts[-2], a, b) == 0 and _forward_overlap(a, pts[-2], b):
            return False
        if orient_t(a, b, pts[1]) == 0 and _forward_overlap(b, a, pts[1]):
            return False
        for i in range(1, len(pts) - 2):
            if intersects(pts[i], pts[i + 1], a, b):
                return False
        return True

    def circle_ok(u, tri, box_seq) -> bool:
        if not site_consistent:
            return True
        r2 = radius2[tri]
        return all(b in tri or ctx.sqd_pb(u, b) >= r2 for b in box_seq)

    def box_ok(nxt, vert_seq, tri_seq) -> bool:
        if not site_consistent:
            return True
        for u, tri in zip(vert_seq, tri_seq):
            if nxt not in tri and ctx.sqd_pb(u, nxt) < radius2[tri]:
                return False
        return True

    def budget(box_seq, tri_seq) -> int:
        nf = sum(1 for b in box_seq if b not in fixed)
        extras = {c for tri in tri_seq for c in tri if c not in fixed and c not in box_seq}
        return nf + len(extras)

    def extend(box_seq, vert_seq, tri_seq, pts, pts_set):
        if len(box_seq) == t:
            if box_seq[1] > box_seq[-1]:
                return
            for u, tri in conn.get((box_seq[-1], b0), ()):
                if u in pts_set or not circle_ok(u, tri, box_seq):
                    continue
                if thirds_limit is not None and budget(box_seq, tri_seq + [tri]) > thirds_limit:
                    continue
                if not chain_ok(pts, u):
                    continue
                closed = pts + [u]
                if not close_ok(closed):
                    continue
                yield Noose(tuple(box_seq), tuple(vert_seq) + (u,), tuple(tri_seq) + (tri,))
            return
        prev = box_seq[-1]
        for nxt in rest:
            if nxt in box_seq:
                continue
            nxt_pt = ctx.boxes[nxt]
            if nxt_pt in pts_set or not box_ok(nxt, vert_seq, tri_seq):
                continue
            chain = box_seq + [nxt]
            for u, tri in conn.get((prev, nxt), ()):
                if u in pts_set or u == nxt_pt:
                    continue
                if not circle_ok(u, tri, chain):
                    continue
                if thirds_limit is not None and budget(chain, tri_seq + [tri]) > thirds_limit:
                    continue
                if not chain_ok(pts, u):
                    continue
                mid = pts + [u]
                if not chain_ok(mid, nxt_pt):
                    continue
                yield from extend(
                    chain,
                    vert_seq + [u],
                    tri_seq + [tri],
                    mid + [nxt_pt],
                    pts_set | {u, nxt_pt},
                )

    yield from extend([b0], [], [], [b0_pt], {b0_pt})


# ---------------------------------------------------------------------------
# Splitting


@dataclass(frozen=True)
class _SideData:
    """Noose classification: which voters and boxes fall on which side."""

    q_set: frozenset
    d_in: tuple
    d_out: tuple
    oldf_in: tuple
    oldf_out: tuple
    v_in: tuple
    v_out: tuple
    f1: frozenset
    f2: frozenset

    def side(self, which: int):
        if which == 1:
            return self.v_in, self.d_in, self.f1
        return self.v_out, self.d_out, self.f2


def _classify_noose(state: State, noose: Noose) -> _SideData:
    """Full classification; raises DegenerateGeometryError when a voter or
    an off-noose box lies exactly on the noose polygon."""
    ctx = state.ctx
    poly = noose.polygon_points(ctx)
    q_set = frozenset(noose.boxes)
    d_in, d_out, oldf_in, oldf_out, v_in, v_out = [], [], [], [], [], []
    for b in sorted(state.boxes):
        if b in q_set:
            continue
        loc = point_in_polygon_t(poly, ctx.boxes[b])
        if loc is PointLocation.BOUNDARY:
            raise DegenerateGeometryError("box %d lies on the noose" % b)
        inside = loc is PointLocation.INSIDE
        if b in state.fixed:
            (oldf_in if inside else oldf_out).append(b)
        else:
            (d_in if inside else d_out).append(b)
    for vi in state.voters:
        loc = point_in_polygon_t(poly, ctx.voters[vi])
        if loc is PointLocation.BOUNDARY:
            raise DegenerateGeometryError("voter %d lies on the noose" % vi)
        (v_in if loc is PointLocation.INSIDE else v_out).append(vi)
    return _SideData(
        q_set,
        tuple(d_in),
        tuple(d_out),
        tuple(oldf_in),
        tuple(oldf_out),
        tuple(v_in),
        tuple(v_out),
        q_set | frozenset(oldf_in),
        q_set | frozenset(oldf_out),
    )


def _make_side_state(state: State, noose: Noose, cls, which: int, k_i, ell_i, v_items) -> State:
    voters, d_side, f_side = cls.side(which)
    ctx = state.ctx
    noose_segs = noose.segments_with_anchors(ctx)
    boundary = tuple(seg for seg in state.boundary if seg[2] in f_side) + tuple(noose_segs)
    child = State(
        voters=tuple(voters),
        boxes=frozenset(d_side) | f_side,
        ell=ell_i,
        k=k_i,
        fixed=f_side,
        fixed_counts=dict(v_items),
        boundary=boundary,
        ctx=ctx,
    )
    ctx.stats.split_shapes.add((state.k, k_i))
    return child


def split_state(state: State, noose: Noose, guess: SplitGuess) -> tuple[State, State]:
    """Split a state along a noose into its inside and outside children.

    Raises DegenerateGeometryError when a voter or an off-noose box lies
    exactly on the noose (the solver skips such nooses) and InputError when
    the guess violates the budget identities or the balance cap."""
    if guess.k1 + guess.k2 != state.k + noose.t:
        raise InputError("child budgets must sum to k plus the noose box count")
    cap = ceil34(state.k)
    if guess.k1 > cap or guess.k2 > cap:
        raise InputError("child budget exceeds ceil(3k/4)")
    cls = _classify_noose(state, noose)
    s1 = _make_side_state(state, noose, cls, 1, guess.k1, guess.ell1, guess.v1)
    s2 = _make_side_state(state, noose, cls, 2, guess.k2, guess.ell2, guess.v2)
    return s1, s2


# ---------------------------------------------------------------------------
# Validity search


def _quick_infeasible(state: State) -> bool:
    ctx = state.ctx
    n_fixed = len(state.fixed)
    if state.k < n_fixed or state.k > len(state.boxes):
        return True
    if state.ell > state.k - n_fixed:
        return True
    avail: dict = {}
    for vi in state.voters:
        rix = ctx.voter_rank[vi]
        avail[rix] = avail.get(rix, 0) + ctx.voter_mult[vi]
    demand_tot: dict = {}
    for (_b, rix), c in state.fixed_counts.items():
        demand_tot[rix] = demand_tot.get(rix, 0) + c
    if any(c > avail.get(rix, 0) for rix, c in demand_tot.items()):
        return True
    # Voters that no free box can rescue are forced into their nearest fixed
    # box; the demanded counts must leave room for them.
    fixed_sorted = sorted(state.fixed)
    free_sorted = sorted(state.boxes - state.fixed)
    forced: dict = {}
    for vi in state.voters:
        row = ctx.sqd_vb[vi]
        best_f, best_d, tie = None, None, False
        for f in fixed_sorted:
            d = row[f]
            if best_d is None or d < best_d:
                best_f, best_d, tie = f, d, False
            elif d == best_d:
                tie = True
        if any(row[b] < best_d for b in free_sorted):
            continue
        if tie:
            return True
        key = (best_f, ctx.voter_rank[vi])
        forced[key] = forced.get(key, 0) + ctx.voter_mult[vi]
    return any(c > state.fixed_counts.get(key, 0) for key, c in forced.items())


def _selection_valid(state: State, selection, demands: dict) -> bool:
    """Exact validity of one base-case selection S: unique nearest-box
    assignment, demanded counts at fixed boxes realized exactly, target wins
    at least ell districts of S, boundary segments inside anchor cells."""
    ctx = state.ctx
    sites = sorted(state.fixed) + list(selection)
    profiles: dict = {b: {} for b in sites}
    for vi in state.voters:
        row = ctx.sqd_vb[vi]
        best_b, best_d, tie = None, None, False
        for b in sites:
            d = row[b]
            if best_d is None or d < best_d:
                best_b, best_d, tie = b, d, False
            elif d == best_d:
                tie = True
        if tie:
            return False
        prof = profiles[best_b]
        rix = ctx.voter_rank[vi]
        prof[rix] = prof.get(rix, 0) + ctx.voter_mult[vi]
    for f in state.fixed:
        if profiles[f] != demands.get(f, {}):
            return False
    wins = 0
    for b in selection:
        if anonymous_rule_eval(ctx.rule, ctx.profile_of(profiles[b])) == ctx.target:
            wins += 1
    if wins < state.ell:
        return False
    for a, b_pt, anchor in state.boundary:
        for e in (a, b_pt):
            da = ctx.sqd_pb(e, anchor)
            for s in sites:
                if s != anchor and ctx.sqd_pb(e, s) < da:
                    return False
    return True


def _base_case(state: State):
    ctx = state.ctx
    need = state.k - len(state.fixed)
    free = sorted(state.boxes - state.fixed)
    if need < 0 or need > len(free):
        return Status.NO, None
    demands = {f: state.demanded_profile(f) for f in state.fixed}
    for selection in itertools.combinations(free, need):
        ctx.stats.subsets_checked += 1
        if _selection_valid(state, selection, demands):
            return Status.YES, frozenset(selection)
    return Status.NO, None


def _combine_counts(c1: dict, c2: dict) -> dict:
    out = dict(c1)
    for rix, c in c2.items():
        out[rix] = out.get(rix, 0) + c
    return {rix: c for rix, c in out.items() if c}


def _side_candidates(ctx: _Ctx, voters, d_side, f_side, required):
    """All realizable demanded-count vectors for one side of a noose.

    A voter can vote at a fixed box only at its unique nearest one, and does
    so exactly when the chosen free boxes miss its escape set, so the
    realizable vectors are indexed by which escape boxes get chosen.
    `required` boxes are known members of the side's selection (triple
    members of the noose vertices), so patterns must include them.  Returns
    a list of (v_items, per_box, min_free_boxes) sorted by v_items, or None
    when the side admits no realizable vector.
    """
    f_sorted = sorted(f_side)
    infos = []
    relevant: set = set()
    for vi in voters:
        row = ctx.sqd_vb[vi]
        best_f, best_d, tie = None, None, False
        for f in f_sorted:
            d = row[f]
            if best_d is None or d < best_d:
                best_f, best_d, tie = f, d, False
            elif d == best_d:
                tie = True
        esc = frozenset(b for b in d_side if row[b] < best_d)
        ties = frozenset(b for b in d_side if row[b] == best_d)
        relevant |= esc | ties
        infos.append((vi, best_f, tie, esc, ties))

    base = frozenset(required) & relevant
    extra_slots = len(set(required) - relevant)
    universe = sorted(relevant - base)
    out: dict = {}
    for r in range(len(universe) + 1):
        for pattern_t in itertools.combinations(universe, r):
            pattern = frozenset(pattern_t) | base
            per_box: dict = {}
            ok = True
            for vi, best_f, tie, esc, ties in infos:
                if esc & pattern:
                    continue  # escaped into the free selection
                if tie or (ties & pattern):
                    ok = False  # exact assignment tie would materialize
                    break
                rix = ctx.voter_rank[vi]
                prof = per_box.setdefault(best_f, {})
                prof[rix] = prof.get(rix, 0) + ctx.voter_mult[vi]
            if not ok:
                continue
            items = tuple(
                sorted(((b, rix), c) for b, prof in per_box.items() for rix, c in prof.items() if c)
            )
            min_size = len(pattern) + extra_slots
            prev = out.get(items)
            if prev is None or min_size < prev[1]:
                out[items] = (per_box, min_size)
    if not out:
        return None
    return sorted((items, per_box, min_size) for items, (per_box, min_size) in out.items())


def _solve(state: State, cfg: SeparatorConfig, depth: int):
    ctx = state.ctx
    ctx.stats.states_explored += 1
    if depth > ctx.stats.max_depth:
        ctx.stats.max_depth = depth
    if _quick_infeasible(state):
        return Status.NO, None
    if state.k - len(state.fixed) <= cfg.gamma:
        return _base_case(state)

    taint = False
    for noose, cls, required in _noose_records(state, cfg):
        ctx.stats.nooses_enumerated += 1
        if cfg.on_noose is not None:
            cfg.on_noose(state, noose)
        status, selection = _try_noose(state, noose, cls, required, cfg, depth)
        if status is Status.YES:
            return status, selection
        if status is Status.UNKNOWN:
            taint = True
    if taint or not cfg.covers(state.k):
        return Status.UNKNOWN, None
    return Status.NO, None


@dataclass(frozen=True)
class _NooseRecord:
    """Everything about one feasible noose that depends only on the state's
    geometry: classification, feasible budget splits, and the realizable
    demanded-count vectors per side (not yet filtered by demands)."""

    noose: Noose
    cls: _SideData
    s_pairs: tuple
    raw_side1: tuple
    raw_side2: tuple


def _noose_records(state: State, cfg: SeparatorConfig):
    """Feasible nooses plus precomputed split data for this state's
    geometry.  States produced by different count/quota guesses over the
    same noose side share geometry, so this work is cached on the context
    and classification is staged to abort cheaply."""
    ctx = state.ctx
    thirds_limit = state.k - len(state.fixed)
    key = (
        state.voters,
        state.boxes,
        state.fixed,
        state.boundary,
        thirds_limit,
        cfg.max_noose_boxes,
    )
    records = ctx.noose_cache.get(key)
    if records is not None:
        return records

    def vertex_ok(u, tri):
        # Vertices with a committed box strictly inside their circle, or
        # outside the initial region, never appear in a solution diagram.
        r2 = sqd_t(u, ctx.boxes[tri[0]])
        if any(ctx.sqd_pb(u, f) < r2 for f in state.fixed if f not in tri):
            return False
        hull = ctx.region_hull
        return hull is None or point_in_polygon_t(hull, u) is not PointLocation.OUTSIDE

    fixed = state.fixed
    k = state.k
    cap = ceil34(k)
    old_fixed = sorted(fixed)
    free_boxes = sorted(state.boxes - fixed)

    records = []
    for noose in enumerate_nooses(
        state, cfg, _vertex_ok=vertex_ok, _site_consistent=True, _thirds_limit=thirds_limit
    ):
        poly = noose.polygon_points(ctx)
        q_set = frozenset(noose.boxes)

        # Stage 1: committed boxes bound the child budgets.
        cls_f = _classify_points(poly, ctx.boxes, [f for f in old_fixed if f not in q_set])
        if cls_f is None:
            continue
        oldf_in, oldf_out = cls_f
        lo1 = len(q_set) + len(oldf_in)
        lo2 = len(q_set) + len(oldf_out)
        total = k + len(q_set)
        if max(lo1, total - cap) > min(cap, total - lo2):
            continue

        # Stage 2: free boxes; triple members off the noose must join the
        # selection on their own side.
        cls_d = _classify_points(poly, ctx.boxes, [b for b in free_boxes if b not in q_set])
        if cls_d is None:
            continue
        d_in, d_out = cls_d
        required = frozenset({c for tri in noose.triples for c in tri}) - q_set - fixed
        ks = thirds_limit - len(q_set - fixed)
        req_in = sorted(required.intersection(d_in))
        req_out = sorted(required.intersection(d_out))
        s_pairs = []
        for s1 in range(max(len(req_in), ks - len(d_out)), min(ks - len(req_out), len(d_in)) + 1):
            s2 = ks - s1
            k1, k2 = s1 + lo1, s2 + lo2
            if k1 <= cap and k2 <= cap:
                s_pairs.append((s1, s2, k1, k2))
        if not s_pairs:
            continue
        s_pairs.sort(key=lambda x: (abs(x[2] - x[3]), x[2]))

        # Stage 3: voters, then the per-side realizable count vectors.
        cls_v = _classify_points(poly, ctx.voters, state.voters)
        if cls_v is None:
            continue
        v_in, v_out = cls_v
        cls = _SideData(
            q_set,
            tuple(d_in),
            tuple(d_out),
            tuple(oldf_in),
            tuple(oldf_out),
            tuple(v_in),
            tuple(v_out),
            q_set | frozenset(oldf_in),
            q_set | frozenset(oldf_out),
        )
        raw1 = _side_candidates(ctx, cls.v_in, cls.d_in, cls.f1, req_in)
        if raw1 is None:
            continue
        raw2 = _side_candidates(ctx, cls.v_out, cls.d_out, cls.f2, req_out)
        if raw2 is None:
            continue
        records.append(_NooseRecord(noose, cls, tuple(s_pairs), tuple(raw1), tuple(raw2)))
    ctx.noose_cache[key] = records
    return records


def _classify_points(poly, table, keys) -> Optional[tuple[list, list]]:
    """Split table[key] points into inside/outside; None on a boundary hit
    (no point of a real solution diagram lies on its noose)."""
    inside, outside = [], []
    for key in keys:
        loc = point_in_polygon_t(poly, table[key])
        if loc is PointLocation.BOUNDARY:
            return None
        (inside if loc is PointLocation.INSIDE else outside).append(key)
    return inside, outside


def _try_noose(state: State, record: _NooseRecord, cfg: SeparatorConfig, depth: int):
    """Try every demand-consistent guess for one precomputed noose record."""
    ctx = state.ctx
    noose = record.noose
    cls = record.cls
    s_pairs = record.s_pairs
    q_and_f = sorted(cls.q_set & state.fixed)

    def matches_demands(raw_side, oldf):
        out = []
        for items, per_box, min_size in raw_side:
            if all(per_box.get(f, {}) == state.demanded_profile(f) for f in oldf):
                out.append((items, per_box, min_size))
        return out

    side1 = matches_demands(record.raw_side1, cls.oldf_in)
    if not side1:
        return Status.NO, None
    side2 = matches_demands(record.raw_side2, cls.oldf_out)
    if not side2:
        return Status.NO, None

    demands = {f: state.demanded_profile(f) for f in q_and_f}
    memo: dict = {}
    taint = False

    def sub_solve(which, k_i, ell_i, v_items):
        """Solve one child; quota monotonicity reuses earlier outcomes."""
        rec = memo.setdefault((which, k_i, v_items), {})
        best_yes = rec.get("max_yes")
        if best_yes is not None and ell_i <= best_yes[0]:
            return Status.YES, best_yes[1]
        min_no = rec.get("min_no")
        if min_no is not None and ell_i >= min_no:
            return Status.NO, None
        if ("u", ell_i) in rec:
            return Status.UNKNOWN, None
        child = _make_side_state(state, noose, cls, which, k_i, ell_i, v_items)
        result = _solve(child, cfg, depth + 1)
        status, selection = result
        if status is Status.YES:
            if best_yes is None or ell_i > best_yes[0]:
                rec["max_yes"] = (ell_i, selection)
        elif status is Status.NO:
            if min_no is None or ell_i < min_no:
                rec["min_no"] = ell_i
        else:
            rec[("u", ell_i)] = True
        return result

    for s1, s2, k1, k2 in s_pairs:
        for v1_items, v1_by_box, min1 in side1:
            if min1 > s1:
                continue
            for v2_items, v2_by_box, min2 in side2:
                if min2 > s2:
                    continue
                consistent = True
                for f in q_and_f:
                    combined = _combine_counts(v1_by_box.get(f, {}), v2_by_box.get(f, {}))
                    if combined != demands[f]:
                        consistent = False
                        break
                if not consistent:
                    continue
                w = 0
                for q in q_not_f:
                    prof = _combine_counts(v1_by_box.get(q, {}), v2_by_box.get(q, {}))
                    if anonymous_rule_eval(ctx.rule, ctx.profile_of(prof)) == ctx.target:
                        w += 1
                quota = max(0, state.ell - w)
                for ell1 in range(max(0, quota - s2), min(s1, quota) + 1):
                    ell2 = quota - ell1
                    r1, sel1 = sub_solve(1, k1, ell1, v1_items)
                    if r1 is not Status.YES:
                        taint = taint or r1 is Status.UNKNOWN
                        continue
                    r2, sel2 = sub_solve(2, k2, ell2, v2_items)
                    if r2 is not Status.YES:
                        taint = taint or r2 is Status.UNKNOWN
                        continue
                    if cfg.on_split is not None:
                        guess = SplitGuess(k1, k2, ell1, ell2, v1_items, v2_items)
                        cfg.on_split(state, noose, guess, sel1, sel2)
                    ctx.stats.accepted_nooses.append((noose, state))
                    return Status.YES, frozenset(sel1) | frozenset(sel2) | set(q_not_f)
    return (Status.UNKNOWN if taint else Status.NO), None


# ---------------------------------------------------------------------------
# Public entry points


def solve_state(state: State, cfg: SeparatorConfig) -> SolveAnswer:
    """Decide one recursion state; Yes answers carry the selected free-box
    set (the state's fixed boxes are already committed)."""
    start = time.perf_counter()
    status, selection = _solve(state, cfg, depth=1)
    stats = state.ctx.stats
    stats.elapsed_s += time.perf_counter() - start
    cert = tuple(sorted(selection)) if status is Status.YES else None
    return SolveAnswer(status, cert, stats)


def solve(inst: Instance, cfg: Optional[SeparatorConfig] = None) -> SolveAnswer:
    """Full pipeline: wrap the instance, run the recursion, strip the anchor
    boxes, and re-verify any certificate.  In safe mode every non-yes
    outcome is confirmed (and, on disagreement, replaced) by brute force."""
    cfg = cfg if cfg is not None else SeparatorConfig()
    start = time.perf_counter()
    state = init_state(inst, cfg.rule)
    ctx = state.ctx
    stats = ctx.stats
    stats.depth_bound = depth_bound(state.k, cfg.gamma)
    status, selection = _solve(state, cfg, depth=1)
    stats.separator_status = status.value

    if status is Status.YES:
        cert = tuple(sorted(selection))
        if any(b >= inst.m for b in cert) or not is_yes_certificate(inst, cert, cfg.rule):
            raise GerryError("internal error: recursion produced an invalid certificate")
        stats.elapsed_s = time.perf_counter() - start
        return SolveAnswer(Status.YES, cert, stats)

    if cfg.safe_mode:
        confirmed = brute_solve(inst, cfg.rule)
        stats.fallback_used = True
        stats.subsets_checked += confirmed.stats.subsets_checked
        stats.elapsed_s = time.perf_counter() - start
        return SolveAnswer(confirmed.status, confirmed.certificate, stats)

    stats.elapsed_s = time.perf_counter() - start
    return SolveAnswer(status, None, stats)
