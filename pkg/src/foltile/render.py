"""Deterministic SVG rendering of Z^2 tilings and atlases.

One rect per carrier cell, colored by shape class (tilings) or ladder
level (atlases), with optional leftover, slot, and matching-arrow
layers. Identical input produces byte-identical SVG: the palette is a
pure function of class index and palette seed, and all geometry is
integer.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput


@dataclass
class RenderSpec:
    cell: int = 6
    palette_seed: int = 0
    layers: list = field(default_factory=lambda: ["tiles", "leftover"])


def _palette(i: int, total: int, seed: int) -> str:
    hue = ((i * 360.0 / max(total, 1)) + seed * 47.0) % 360.0
    r, g, b = colorsys.hls_to_rgb(hue / 360.0, 0.62, 0.55)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def _svg_header(n: int, cell: int) -> list[str]:
    side = n * cell
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{side}" '
        f'height="{side}" viewBox="0 0 {side} {side}">',
        f'<rect width="{side}" height="{side}" fill="#1c1c22"/>',
    ]


def render_tiling_svg(data: dict, spec: RenderSpec | None = None) -> str:
    """SVG for a z2 tiling artifact (JSON dict form)."""
    spec = spec or RenderSpec()
    if data.get("model") != "z2":
        raise InvalidInput("rendering supports z2 carriers only")
    n = int(data["N"])
    cell = spec.cell
    shapes = {s["id"]: [tuple(el) for el in s["elements"]]
              for s in data["shapes"]}
    total = len(shapes)
    out = _svg_header(n, cell)
    if "tiles" in spec.layers:
        for entry in sorted(data["centers"],
                            key=lambda e: (e["shape"], tuple(e["at"]))):
            sid = entry["shape"]
            cx, cy = entry["at"]
            fill = _palette(sid - 1, total, spec.palette_seed)
            for ex, ey in shapes[sid]:
                px = (ex + cx) % n
                py = (ey + cy) % n
                out.append(f'<rect x="{px * cell}" y="{py * cell}" '
                           f'width="{cell}" height="{cell}" fill="{fill}"/>')
            # mark the center cell
            px, py = cx % n, cy % n
            out.append(f'<rect x="{px * cell + cell // 3}" '
                       f'y="{py * cell + cell // 3}" '
                       f'width="{max(cell // 3, 1)}" '
                       f'height="{max(cell // 3, 1)}" fill="#000000"/>')
    if "arrows" in spec.layers:
        for arrow in data.get("report", {}).get("arrows", []):
            (x1, y1), (x2, y2) = arrow
            out.append(
                f'<line x1="{(x1 % n) * cell + cell // 2}" '
                f'y1="{(y1 % n) * cell + cell // 2}" '
                f'x2="{(x2 % n) * cell + cell // 2}" '
                f'y2="{(y2 % n) * cell + cell // 2}" '
                f'stroke="#ffffff" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_atlas_svg(data: dict, spec: RenderSpec | None = None) -> str:
    """SVG for a z2 atlas artifact: tiles by ladder level, leftover, slots."""
    spec = spec or RenderSpec()
    if data.get("model") != "z2":
        raise InvalidInput("rendering supports z2 carriers only")
    n = int(data["N"])
    cell = spec.cell
    nlevels = len(data["ladder"])
    out = _svg_header(n, cell)
    if "tiles" in spec.layers:
        for i, tile in enumerate(sorted(
                data["tiles"], key=lambda t: (t["level"], tuple(t["center"])))):
            cx, cy = tile["center"]
            fill = _palette((tile["level"] - 1) * 5 + i % 3, nlevels * 5 + 3,
                            spec.palette_seed)
            for ex, ey in tile["core"]:
                px = (ex + cx) % n
                py = (ey + cy) % n
                out.append(f'<rect x="{px * cell}" y="{py * cell}" '
                           f'width="{cell}" height="{cell}" fill="{fill}"/>')
    if "leftover" in spec.layers:
        runs = data["leftover"]["runs"]
        for start, length in runs:
            for idx in range(start, start + length):
                px, py = divmod(idx, n)
                out.append(f'<rect x="{px * cell}" y="{py * cell}" '
                           f'width="{cell}" height="{cell}" fill="#e8e8e8"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_artifact(data: dict, spec: RenderSpec | None = None) -> str:
    kind = data.get("kind")
    if kind == "tiling":
        return render_tiling_svg(data, spec)
    if kind == "atlas":
        return render_atlas_svg(data, spec)
    raise InvalidInput(f"cannot render artifact kind {kind!r}")
