"""Exact rational geometric predicates and Voronoi diagrams.

Cells are built by half-plane intersection along each bisector: simple,
exact, and fast enough at the instance sizes this package targets.  Rays
are kept symbolic (base point, direction, open interval end) and are only
clipped to a box for rendering.

The *_t functions operate on raw (x, y) tuples of rationals; they are the
hot path shared with the separator engine.  Public wrappers take Points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

from .model import DegenerateGeometryError, InputError, Point


# ---------------------------------------------------------------------------
# Tuple-level predicates


def sqd_t(p, q):
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return dx * dx + dy * dy


def orient_t(a, b, c):
    """Twice the signed area of the triangle abc (>0 for a left turn)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def on_segment_t(p, a, b) -> bool:
    """Exact: p lies on the closed segment ab."""
    if orient_t(a, b, p) != 0:
        return False
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def segments_intersect_t(a, b, c, d) -> bool:
    """Closed-segment intersection predicate; touching endpoints count."""
    if (
        max(a[0], b[0]) < min(c[0], d[0])
        or max(c[0], d[0]) < min(a[0], b[0])
        or max(a[1], b[1]) < min(c[1], d[1])
        or max(c[1], d[1]) < min(a[1], b[1])
    ):
        return False
    o1 = orient_t(a, b, c)
    o2 = orient_t(a, b, d)
    o3 = orient_t(c, d, a)
    o4 = orient_t(c, d, b)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and (
        (o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)
    ):
        return True
    if o1 == 0 and on_segment_t(c, a, b):
        return True
    if o2 == 0 and on_segment_t(d, a, b):
        return True
    if o3 == 0 and on_segment_t(a, c, d):
        return True
    if o4 == 0 and on_segment_t(b, c, d):
        return True
    return False


def proper_cross_t(a, b, c, d) -> bool:
    """True if segments ab and cd cross through each other's interiors, or
    overlap collinearly over a positive length.  Touching at an endpoint of
    either segment does not count."""
    if (
        max(a[0], b[0]) < min(c[0], d[0])
        or max(c[0], d[0]) < min(a[0], b[0])
        or max(a[1], b[1]) < min(c[1], d[1])
        or max(c[1], d[1]) < min(a[1], b[1])
    ):
        return False
    o1 = orient_t(a, b, c)
    o2 = orient_t(a, b, d)
    o3 = orient_t(c, d, a)
    o4 = orient_t(c, d, b)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and (
        (o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)
    ):
        return True
    if o1 == 0 and o2 == 0:
        # Collinear: proper only if the overlap has positive length.
        axis = 0 if a[0] != b[0] else 1
        lo1, hi1 = sorted((a[axis], b[axis]))
        lo2, hi2 = sorted((c[axis], d[axis]))
        return max(lo1, lo2) < min(hi1, hi2)
    return False


class PointLocation(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


def point_in_polygon_t(points, q) -> PointLocation:
    """Exact crossing-number test against the closed polygon with the given
    vertex tuple sequence (implicitly closed).  Division-free: the crossing
    comparison reuses the orientation product's sign."""
    n = len(points)
    inside = False
    qx, qy = q
    ax, ay = points[n - 1]
    for i in range(n):
        bx, by = points[i]
        o = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
        if (
            o == 0
            and min(ax, bx) <= qx <= max(ax, bx)
            and min(ay, by) <= qy <= max(ay, by)
        ):
            return PointLocation.BOUNDARY
        if (ay > qy) != (by > qy):
            # o == (by - ay) * (x_edge_at_qy - qx): a crossing strictly right
            # of q flips parity.
            if (o > 0) == (by > ay):
                inside = not inside
        ax, ay = bx, by
    return PointLocation.INSIDE if inside else PointLocation.OUTSIDE


def polygon_is_simple_t(points) -> bool:
    """No repeated vertices; adjacent edges meet only at the shared vertex;
    non-adjacent edges are disjoint."""
    n = len(points)
    if n < 3:
        return False
    if len(set(points)) != n:
        return False
    segs = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        a, b = segs[i]
        if a == b:
            return False
        for j in range(i + 1, n):
            c, d = segs[j]
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent:
                # Shared endpoint only; reject collinear doubling-back.
                shared = b if j == i + 1 else a
                other1 = a if j == i + 1 else b
                other2 = d if j == i + 1 else c
                if orient_t(shared, other1, other2) == 0:
                    # Collinear neighbours are fine only when extending
                    # oppositely; overlap means the far points sit on the
                    # same side of the shared vertex.
                    if on_segment_t(other1, shared, other2) or on_segment_t(other2, shared, other1):
                        return False
            else:
                if segments_intersect_t(a, b, c, d):
                    return False
    return True


# ---------------------------------------------------------------------------
# Public point/segment API


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self):
        if (self.a.x, self.a.y) == (self.b.x, self.b.y):
            raise InputError("degenerate segment")

    def as_tuples(self):
        return (self.a.as_tuple(), self.b.as_tuple())


def sq_dist(p: Point, q: Point):
    """Exact squared Euclidean distance."""
    return sqd_t(p.as_tuple(), q.as_tuple())


def circumcenter(a: Point, b: Point, c: Point) -> Optional[Point]:
    """The unique point equidistant from a, b, c, or None if collinear."""
    u = circumcenter_t(a.as_tuple(), b.as_tuple(), c.as_tuple())
    return None if u is None else Point(*u)


def circumcenter_t(a, b, c):
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
    if d == 0:
        return None
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return (ux, uy)


def segments_intersect(s1: Segment, s2: Segment) -> bool:
    (a, b), (c, d) = s1.as_tuples(), s2.as_tuples()
    return segments_intersect_t(a, b, c, d)


def segment_properly_crosses(s1: Segment, s2: Segment) -> bool:
    (a, b), (c, d) = s1.as_tuples(), s2.as_tuples()
    return proper_cross_t(a, b, c, d)


PolygonLike = Union[Sequence[Segment], Sequence[Point]]


def _polygon_points(poly: PolygonLike):
    items = list(poly)
    if not items:
        raise InputError("empty polygon")
    if isinstance(items[0], Segment):
        pts = []
        for i, seg in enumerate(items):
            nxt = items[(i + 1) % len(items)]
            if seg.b.as_tuple() != nxt.a.as_tuple():
                raise InputError("polygon segments are not a closed chain")
            pts.append(seg.a.as_tuple())
        return pts
    return [p.as_tuple() for p in items]


def point_in_polygon(poly: PolygonLike, q: Point, require_simple: bool = False) -> PointLocation:
    """Classify q against a simple closed polygon given as Points or as a
    closed chain of Segments.  Simplicity is the caller's contract; pass
    require_simple=True to verify it (quadratic) and raise InputError."""
    pts = _polygon_points(poly)
    if len(pts) < 3:
        raise InputError("polygon needs at least 3 vertices")
    if require_simple and not polygon_is_simple_t(pts):
        raise InputError("polygon is not simple")
    return point_in_polygon_t(pts, q.as_tuple())


def nearest_site(diagram_or_sites, q: Point) -> int:
    """Index of the unique closest site; exact tie raises
    DegenerateGeometryError."""
    if isinstance(diagram_or_sites, VoronoiDiagram):
        sites = diagram_or_sites.sites
    else:
        sites = tuple(diagram_or_sites)
    if not sites:
        raise InputError("no sites")
    qt = q.as_tuple()
    best_i = 0
    best = sqd_t(qt, sites[0].as_tuple())
    tie = False
    for i in range(1, len(sites)):
        d = sqd_t(qt, sites[i].as_tuple())
        if d < best:
            best, best_i, tie = d, i, False
        elif d == best:
            tie = True
    if tie:
        raise DegenerateGeometryError("query point equidistant from two nearest sites")
    return best_i


# ---------------------------------------------------------------------------
# Voronoi diagrams


@dataclass(frozen=True)
class VoronoiVertex:
    location: Point
    defining_sites: tuple[int, int, int]


@dataclass(frozen=True)
class VoronoiEdge:
    """Portion of the bisector of `sites` on the cell boundary.

    The edge is {base + t*direction : t_lo <= t <= t_hi}; t_lo/t_hi of None
    mean unbounded (a ray, or a full line when both are None).  v_lo/v_hi
    are vertex indices for the finite ends.
    """

    sites: tuple[int, int]
    base: Point
    direction: Point
    t_lo: Optional[object]
    t_hi: Optional[object]
    v_lo: Optional[int]
    v_hi: Optional[int]

    @property
    def is_segment(self) -> bool:
        return self.t_lo is not None and self.t_hi is not None

    def point_at(self, t) -> Point:
        return Point(self.base.x + t * self.direction.x, self.base.y + t * self.direction.y)

    def endpoints(self) -> tuple[Optional[Point], Optional[Point]]:
        lo = self.point_at(self.t_lo) if self.t_lo is not None else None
        hi = self.point_at(self.t_hi) if self.t_hi is not None else None
        return lo, hi


@dataclass(frozen=True)
class VoronoiDiagram:
    sites: tuple[Point, ...]
    vertices: tuple[VoronoiVertex, ...]
    edges: tuple[VoronoiEdge, ...]
    # Per site, indices into `edges` in exact angular order of the outward
    # bisector normal (site_j - site_i).
    cells: tuple[tuple[int, ...], ...]


def _angle_cmp(u, v) -> int:
    """Exact comparison of direction vectors by angle in [0, 2*pi)."""
    def half(w):
        return 0 if (w[1] > 0 or (w[1] == 0 and w[0] > 0)) else 1

    hu, hv = half(u), half(v)
    if hu != hv:
        return -1 if hu < hv else 1
    cross = u[0] * v[1] - u[1] * v[0]
    if cross == 0:
        return 0
    return -1 if cross > 0 else 1


def build_voronoi(sites: Sequence[Point]) -> VoronoiDiagram:
    """Exact Voronoi diagram by per-pair bisector clipping.

    Raises InputError on duplicate sites and DegenerateGeometryError when a
    cocircularity (a vertex of degree > 3, or a point-degenerate edge) shows
    up during construction.
    """
    sites = tuple(sites)
    st = [s.as_tuple() for s in sites]
    n = len(sites)
    if len(set(st)) != n:
        raise InputError("duplicate sites")

    edges: list[dict] = []
    # vertex point tuple -> {"sites": set, "index": int}
    vertex_map: dict[tuple, dict] = {}

    for i, j in itertools.combinations(range(n), 2):
        si, sj = st[i], st[j]
        mx = (si[0] + sj[0]) / 2
        my = (si[1] + sj[1]) / 2
        dx = sj[0] - si[0]
        dy = sj[1] - si[1]
        # Direction along the bisector.
        ux, uy = -dy, dx
        t_lo = None  # -infinity
        t_hi = None  # +infinity
        lo_site = None
        hi_site = None
        alive = True
        for h in range(n):
            if h == i or h == j:
                continue
            sh = st[h]
            a = 2 * (ux * (sh[0] - si[0]) + uy * (sh[1] - si[1]))
            rhs = (
                sh[0] * sh[0]
                + sh[1] * sh[1]
                - si[0] * si[0]
                - si[1] * si[1]
                - 2 * (mx * (sh[0] - si[0]) + my * (sh[1] - si[1]))
            )
            if a == 0:
                if rhs < 0:
                    alive = False
                    break
                continue
            bound = rhs / a
            if a > 0:
                if t_hi is None or bound < t_hi:
                    t_hi, hi_site = bound, h
            else:
                if t_lo is None or bound > t_lo:
                    t_lo, lo_site = bound, h
        if not alive:
            continue
        if t_lo is not None and t_hi is not None:
            if t_lo > t_hi:
                continue
            if t_lo == t_hi:
                raise DegenerateGeometryError(
                    "sites %s are cocircular (edge of zero length)" % ((i, j, lo_site, hi_site),)
                )
        edges.append(
            {
                "sites": (i, j),
                "base": (mx, my),
                "dir": (ux, uy),
                "t_lo": t_lo,
                "t_hi": t_hi,
                "lo_site": lo_site,
                "hi_site": hi_site,
            }
        )

    # Register vertices from finite edge ends.
    for e in edges:
        for end, other in (("t_lo", "lo_site"), ("t_hi", "hi_site")):
            t = e[end]
            if t is None:
                continue
            px = e["base"][0] + t * e["dir"][0]
            py = e["base"][1] + t * e["dir"][1]
            key = (px, py)
            entry = vertex_map.setdefault(key, {"sites": set()})
            entry["sites"].update(e["sites"])
            entry["sites"].add(e[other])

    vertices: list[VoronoiVertex] = []
    for key in sorted(vertex_map):
        entry = vertex_map[key]
        def_sites = sorted(entry["sites"])
        if len(def_sites) != 3:
            raise DegenerateGeometryError(
                "Voronoi vertex at %s has %d defining sites (cocircularity)" % (key, len(def_sites))
            )
        entry["index"] = len(vertices)
        vertices.append(VoronoiVertex(Point(*key), tuple(def_sites)))

    # Internal sanity: vertices are equidistant from their defining sites and
    # not closer to any other site.
    for v in vertices:
        vt = v.location.as_tuple()
        d0 = sqd_t(vt, st[v.defining_sites[0]])
        for s in v.defining_sites[1:]:
            if sqd_t(vt, st[s]) != d0:
                raise DegenerateGeometryError("inconsistent vertex distances")
        for s in range(n):
            if s not in v.defining_sites and sqd_t(vt, st[s]) < d0:
                raise DegenerateGeometryError("foreign site closer than defining sites")

    out_edges: list[VoronoiEdge] = []
    for e in edges:
        v_lo = v_hi = None
        if e["t_lo"] is not None:
            t = e["t_lo"]
            v_lo = vertex_map[(e["base"][0] + t * e["dir"][0], e["base"][1] + t * e["dir"][1])]["index"]
        if e["t_hi"] is not None:
            t = e["t_hi"]
            v_hi = vertex_map[(e["base"][0] + t * e["dir"][0], e["base"][1] + t * e["dir"][1])]["index"]
        out_edges.append(
            VoronoiEdge(
                sites=e["sites"],
                base=Point(*e["base"]),
                direction=Point(*e["dir"]),
                t_lo=e["t_lo"],
                t_hi=e["t_hi"],
                v_lo=v_lo,
                v_hi=v_hi,
            )
        )

    import functools

    cells = []
    for i in range(n):
        incident = [k for k, e in enumerate(out_edges) if i in e.sites]

        def normal(k, _i=i):
            a, b = out_edges[k].sites
            other = st[b] if a == _i else st[a]
            return (other[0] - st[_i][0], other[1] - st[_i][1])

        incident.sort(key=functools.cmp_to_key(lambda p, q: _angle_cmp(normal(p), normal(q))))
        cells.append(tuple(incident))

    return VoronoiDiagram(sites=sites, vertices=tuple(vertices), edges=tuple(out_edges), cells=tuple(cells))


def point_in_cell(sites: Sequence[Point], site: int, q: Point) -> bool:
    """q belongs to the closed Voronoi cell of `site` (ties with other sites
    allowed: the cell boundary counts as inside)."""
    st = [s.as_tuple() for s in sites]
    qt = q.as_tuple()
    d = sqd_t(qt, st[site])
    return all(d <= sqd_t(qt, st[h]) for h in range(len(st)) if h != site)


def segment_in_cell(diagram_or_sites, site: int, seg: Segment) -> bool:
    """Whole segment inside the closed cell of `site`: by convexity it is
    enough to test both endpoints against every other site's half-plane."""
    if isinstance(diagram_or_sites, VoronoiDiagram):
        sites = diagram_or_sites.sites
    else:
        sites = tuple(diagram_or_sites)
    return point_in_cell(sites, site, seg.a) and point_in_cell(sites, site, seg.b)


def clip_edge_to_box(edge: VoronoiEdge, xmin, ymin, xmax, ymax) -> Optional[tuple[Point, Point]]:
    """Clip a (possibly unbounded) Voronoi edge to an axis-aligned box;
    returns segment endpoints or None when the edge misses the box."""
    t_lo, t_hi = edge.t_lo, edge.t_hi
    bx, by = edge.base.x, edge.base.y
    dx, dy = edge.direction.x, edge.direction.y
    lo = t_lo
    hi = t_hi
    for coord_b, coord_d, lo_bound, hi_bound in ((bx, dx, xmin, xmax), (by, dy, ymin, ymax)):
        if coord_d == 0:
            if not (lo_bound <= coord_b <= hi_bound):
                return None
            continue
        t1 = (lo_bound - coord_b) / coord_d
        t2 = (hi_bound - coord_b) / coord_d
        if t1 > t2:
            t1, t2 = t2, t1
        lo = t1 if lo is None else max(lo, t1)
        hi = t2 if hi is None else min(hi, t2)
    if lo is None or hi is None or lo >= hi:
        return None
    return edge.point_at(lo), edge.point_at(hi)
