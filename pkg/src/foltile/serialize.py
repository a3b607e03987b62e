"""Versioned JSON schemas for every artifact, with byte-stable output.

Rationals cross the boundary as "p/q" strings so exactness survives the
round trip. Dumping always sorts keys and uses compact separators, so
serialize -> parse -> serialize is byte-identical; the determinism
acceptance check relies on that.

Element encoding: vector models (z1/z2/z3/heis) use plain coordinate
arrays; lamplighter elements are [[lamp positions], cursor]. PointSets
carry a "fmt" field: "rle" (runs over carrier indices) or "coords"
(sorted coordinate arrays of carrier points).
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .config import format_rational, parse_rational
from .errors import InvalidInput
from .groups import GroupModel, Lamplighter, Shape, get_model
from .windows import ActionWindow, PointSet, make_window

SCHEMA_VERSION = 1


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"bad JSON: {exc}") from None


# -- elements and shapes -----------------------------------------------------


def element_to_json(model: GroupModel, el):
    if isinstance(model, Lamplighter):
        lamps, pos = el
        return [list(lamps), pos]
    return list(el)


def element_from_json(model: GroupModel, data):
    if isinstance(model, Lamplighter):
        if not (isinstance(data, list) and len(data) == 2
                and isinstance(data[0], list)):
            raise InvalidInput(f"bad lamplighter element {data!r}")
        return (tuple(sorted(int(v) for v in data[0])), int(data[1]))
    return tuple(int(v) for v in data)


def shape_to_json(shape: Shape):
    return [element_to_json(shape.model, el) for el in shape]


def shape_from_json(model: GroupModel, data) -> Shape:
    return Shape.from_elements(model, [element_from_json(model, d) for d in data])


# -- point sets ---------------------------------------------------------------


def pointset_to_json(ps: PointSet, fmt: str = "rle"):
    if fmt == "rle":
        mask = ps.mask
        runs = []
        idx = np.flatnonzero(mask)
        if idx.size:
            breaks = np.flatnonzero(np.diff(idx) > 1)
            starts = np.concatenate([[0], breaks + 1])
            ends = np.concatenate([breaks, [idx.size - 1]])
            runs = [[int(idx[s]), int(idx[e] - idx[s] + 1)]
                    for s, e in zip(starts, ends)]
        return {"fmt": "rle", "size": ps.window.size, "runs": runs}
    if fmt == "coords":
        w = ps.window
        pts = [element_to_json(w.model, w.lift(int(i))) for i in ps.indices()]
        return {"fmt": "coords", "size": ps.window.size, "points": pts}
    raise InvalidInput(f"unknown pointset fmt {fmt!r}")


def pointset_from_json(window: ActionWindow, data) -> PointSet:
    if data.get("size") != window.size:
        raise InvalidInput("pointset size does not match the window")
    mask = np.zeros(window.size, dtype=np.uint8)
    if data.get("fmt") == "rle":
        for start, length in data["runs"]:
            mask[start:start + length] = 1
    elif data.get("fmt") == "coords":
        for pt in data["points"]:
            mask[window.reduce(element_from_json(window.model, pt))] = 1
    else:
        raise InvalidInput(f"unknown pointset fmt {data.get('fmt')!r}")
    return PointSet(window, mask)


# -- tilings ------------------------------------------------------------------


def tiling_to_json(tiling) -> dict:
    w = tiling.window
    shapes = [{"id": i + 1, "elements": shape_to_json(s)}
              for i, s in enumerate(tiling.shapes)]
    centers = []
    for i, cs in enumerate(tiling.centers):
        for c in cs:
            centers.append({"shape": i + 1,
                            "at": element_to_json(w.model, w.lift(int(c)))})
    return {
        "version": SCHEMA_VERSION,
        "kind": "tiling",
        "model": w.model.name,
        "N": w.describe().get("N", w.describe().get("L")),
        "K": shape_to_json(tiling.K),
        "delta": format_rational(tiling.delta),
        "shapes": shapes,
        "centers": centers,
        "report": tiling.report,
    }


def tiling_from_json(data):
    from .tiling import Tiling

    if data.get("kind") != "tiling":
        raise InvalidInput("not a tiling artifact")
    model = get_model(data["model"])
    window = make_window(data["model"], int(data["N"]))
    shapes = []
    ids = []
    for entry in sorted(data["shapes"], key=lambda e: e["id"]):
        ids.append(entry["id"])
        shapes.append(shape_from_json(model, entry["elements"]))
    if ids != list(range(1, len(ids) + 1)):
        raise InvalidInput("shape ids must be 1..m")
    centers = [[] for _ in shapes]
    for entry in data["centers"]:
        sid = entry["shape"]
        if not 1 <= sid <= len(shapes):
            raise InvalidInput(f"center references unknown shape {sid}")
        centers[sid - 1].append(window.reduce(
            element_from_json(model, entry["at"])))
    centers = [sorted(cs) for cs in centers]
    return Tiling(window=window, K=shape_from_json(model, data["K"]),
                  delta=parse_rational(data["delta"]), shapes=shapes,
                  centers=centers, report=data.get("report", {}))


# -- atlases ------------------------------------------------------------------


def atlas_to_json(atlas) -> dict:
    w = atlas.window
    return {
        "version": SCHEMA_VERSION,
        "kind": "atlas",
        "model": w.model.name,
        "N": w.describe().get("N", w.describe().get("L")),
        "eps": format_rational(atlas.eps),
        "ladder": [shape_to_json(F) for F in atlas.ladder],
        "tiles": [{
            "center": element_to_json(w.model, w.lift(int(c))),
            "level": level,
            "core": shape_to_json(core),
        } for c, level, core in atlas.entries],
        "covered": pointset_to_json(atlas.covered),
        "leftover": pointset_to_json(atlas.leftover),
        "stats": {
            "stage_densities": [[lv, format_rational(d)]
                                for lv, d in atlas.stage_densities],
            "hypotheses_checked": atlas.hypotheses_checked,
            "delta": (format_rational(atlas.delta)
                      if atlas.delta is not None else None),
        },
    }


def atlas_from_json(data):
    from .quasitiling import TileAtlas

    if data.get("kind") != "atlas":
        raise InvalidInput("not an atlas artifact")
    model = get_model(data["model"])
    window = make_window(data["model"], int(data["N"]))
    ladder = [shape_from_json(model, s) for s in data["ladder"]]
    entries = [(window.reduce(element_from_json(model, t["center"])),
                int(t["level"]), shape_from_json(model, t["core"]))
               for t in data["tiles"]]
    stats = data.get("stats", {})
    return TileAtlas(
        window=window,
        eps=parse_rational(data["eps"]),
        ladder=ladder,
        entries=entries,
        covered=pointset_from_json(window, data["covered"]),
        leftover=pointset_from_json(window, data["leftover"]),
        delta=(parse_rational(stats["delta"])
               if stats.get("delta") else None),
        stage_densities=[(int(lv), parse_rational(d))
                         for lv, d in stats.get("stage_densities", [])],
        hypotheses_checked=bool(stats.get("hypotheses_checked", False)),
    )


# -- group quasitilings --------------------------------------------------------


def group_quasitiling_to_json(qt) -> dict:
    model = qt.target.model
    levels = []
    for T, cs, cores in zip(qt.ladder, qt.centers, qt.cores):
        levels.append({
            "shape": shape_to_json(T),
            "centers": [element_to_json(model, c) for c in cs],
            "cores": [shape_to_json(cores[c]) for c in cs],
        })
    return {
        "version": SCHEMA_VERSION,
        "kind": "group-quasitiling",
        "model": model.name,
        "beta": format_rational(qt.beta),
        "target": shape_to_json(qt.target),
        "levels": levels,
    }


def group_quasitiling_from_json(data):
    from .quasitiling import GroupQuasitiling

    if data.get("kind") != "group-quasitiling":
        raise InvalidInput("not a group quasitiling artifact")
    model = get_model(data["model"])
    ladder, centers, cores = [], [], []
    for level in data["levels"]:
        T = shape_from_json(model, level["shape"])
        cs = [element_from_json(model, c) for c in level["centers"]]
        ladder.append(T)
        centers.append(cs)
        cores.append({c: shape_from_json(model, core)
                      for c, core in zip(cs, level["cores"])})
    return GroupQuasitiling(
        target=shape_from_json(model, data["target"]),
        ladder=ladder, beta=parse_rational(data["beta"]),
        centers=centers, cores=cores)


# -- matchings ----------------------------------------------------------------


def matching_to_json(rel, state, transcript, certificate) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "kind": "matching",
        "n_left": rel.n_left,
        "n_right": rel.n_right,
        "pairs": [[x, y] for x, y in state.pairs()],
        "phases": [{"phase": n, "unmatched": u, "bound_ok": ok}
                   for n, u, ok in transcript],
        "certificate": {"a": certificate.a, "b": certificate.b,
                        "c": format_rational(certificate.c)},
    }
