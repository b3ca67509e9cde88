"""JSON file formats: instances (gerry-v1), grid tiling (gt-v1), and
solver answers.

Coordinates are strings, never JSON floats: exact decimal or "num/den"
rational literals.  Writers are canonical (lowest terms, sorted keys,
two-space indent, trailing newline) so parse/write round-trips are
byte-stable.
"""

from __future__ import annotations

import json
from typing import Optional

from .brute import SolveAnswer
from .model import InputError, Instance, Point, Voter, make_instance, rat, rat_str
from .reduction import GridTilingInstance, GridTilingSolution, make_grid_tiling

INSTANCE_FORMAT = "gerry-v1"
GRIDTILING_FORMAT = "gt-v1"


def _parse_coord(obj, field: str, where: str):
    value = obj.get(field)
    if not isinstance(value, str):
        raise InputError("%s: coordinate %r must be a string" % (where, field))
    try:
        return rat(value)
    except (ValueError, ZeroDivisionError) as err:
        raise InputError("%s: bad rational %r (%s)" % (where, value, err))


def parse_instance(data: bytes | str) -> Instance:
    """Parse and structurally validate a gerry-v1 instance file."""
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as err:
        raise InputError("not valid JSON: %s" % err)
    if not isinstance(obj, dict) or obj.get("format") != INSTANCE_FORMAT:
        raise InputError("expected a JSON object with format == %r" % INSTANCE_FORMAT)
    for key in ("candidates", "voters", "boxes", "k", "ell", "target"):
        if key not in obj:
            raise InputError("missing field %r" % key)
    candidates = obj["candidates"]
    if not isinstance(candidates, list) or not all(isinstance(c, str) for c in candidates):
        raise InputError("candidates must be a list of strings")
    voters = []
    for i, v in enumerate(obj["voters"]):
        where = "voter %d" % i
        if not isinstance(v, dict):
            raise InputError("%s: must be an object" % where)
        ranking = v.get("ranking")
        if not isinstance(ranking, list) or not all(isinstance(c, str) for c in ranking):
            raise InputError("%s: ranking must be a list of candidate ids" % where)
        for c in ranking:
            if c not in candidates:
                raise InputError("%s: unknown candidate %r in ranking" % (where, c))
        count = v.get("count", 1)
        if not isinstance(count, int) or count < 1:
            raise InputError("%s: count must be a positive integer" % where)
        voters.append(
            Voter(
                Point(_parse_coord(v, "x", where), _parse_coord(v, "y", where)),
                tuple(ranking),
                count,
            )
        )
    boxes = []
    for i, b in enumerate(obj["boxes"]):
        where = "box %d" % i
        if not isinstance(b, dict):
            raise InputError("%s: must be an object" % where)
        boxes.append(Point(_parse_coord(b, "x", where), _parse_coord(b, "y", where)))
    if not isinstance(obj["k"], int) or not isinstance(obj["ell"], int):
        raise InputError("k and ell must be integers")
    try:
        return make_instance(candidates, voters, boxes, obj["k"], obj["ell"], obj["target"])
    except InputError:
        raise
    except Exception as err:
        raise InputError(str(err))


def write_instance(inst: Instance) -> bytes:
    """Canonical serialization; parse(write(x)) == x."""
    voters = []
    for v in inst.voters:
        entry = {
            "x": rat_str(v.location.x),
            "y": rat_str(v.location.y),
            "ranking": list(v.ranking),
        }
        if v.multiplicity != 1:
            entry["count"] = v.multiplicity
        voters.append(entry)
    obj = {
        "format": INSTANCE_FORMAT,
        "candidates": list(inst.candidates),
        "voters": voters,
        "boxes": [{"x": rat_str(b.x), "y": rat_str(b.y)} for b in inst.boxes],
        "k": inst.k,
        "ell": inst.ell,
        "target": inst.target,
    }
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def parse_grid_tiling(data: bytes | str) -> GridTilingInstance:
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as err:
        raise InputError("not valid JSON: %s" % err)
    if not isinstance(obj, dict) or obj.get("format") != GRIDTILING_FORMAT:
        raise InputError("expected a JSON object with format == %r" % GRIDTILING_FORMAT)
    for key in ("k", "n", "sets"):
        if key not in obj:
            raise InputError("missing field %r" % key)
    k, n, sets = obj["k"], obj["n"], obj["sets"]
    if not isinstance(k, int) or not isinstance(n, int):
        raise InputError("k and n must be integers")
    if not isinstance(sets, list):
        raise InputError("sets must be a list (row-major cell order)")
    parsed = []
    for idx, cell in enumerate(sets):
        if not isinstance(cell, list):
            raise InputError("cell %d must be a list of [p, q] pairs" % idx)
        pairs = []
        for pair in cell:
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, int) for x in pair)):
                raise InputError("cell %d: pairs must be [int, int]" % idx)
            pairs.append((pair[0], pair[1]))
        parsed.append(pairs)
    try:
        return make_grid_tiling(k, n, parsed)
    except InputError:
        raise
    except Exception as err:
        raise InputError(str(err))


def write_grid_tiling(gt: GridTilingInstance) -> bytes:
    obj = {
        "format": GRIDTILING_FORMAT,
        "k": gt.k,
        "n": gt.n,
        "sets": [[list(pq) for pq in sorted(cell)] for cell in gt.sets],
    }
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def write_answer(answer: SolveAnswer) -> bytes:
    """Solver answer as JSON.  Only deterministic counters go in the file;
    wall-clock timing lives in bench reports, not here."""
    stats = {
        "engine": answer.stats.engine,
        "states_explored": answer.stats.states_explored,
        "subsets_checked": answer.stats.subsets_checked,
    }
    if answer.stats.engine == "separator":
        stats["max_depth"] = answer.stats.max_depth
        stats["depth_bound"] = answer.stats.depth_bound
        stats["nooses_enumerated"] = answer.stats.nooses_enumerated
        stats["fallback_used"] = answer.stats.fallback_used
        stats["separator_status"] = answer.stats.separator_status
    obj = {
        "status": answer.status.value,
        "boxes": list(answer.certificate) if answer.certificate is not None else None,
        "stats": stats,
    }
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def write_gt_solution(sol: Optional[GridTilingSolution]) -> bytes:
    if sol is None:
        obj = {"status": "no", "selection": None}
    else:
        obj = {
            "status": "yes",
            "selection": [
                {"i": i, "j": j, "p": p, "q": q}
                for (i, j), (p, q) in sorted(sol.selection.items())
            ],
        }
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()
