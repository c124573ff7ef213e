"""Static SVG map of an aggregation."""

from __future__ import annotations

import colorsys
import hashlib
from typing import Sequence
from xml.sax.saxutils import quoteattr

from geoanon.geometry import Rect, VoronoiDiagram
from geoanon.model import InitialRegion, Point

WIDTH = 800


def color_for(aggregated_id: int) -> str:
    """Stable color per aggregated id (hash-derived hue, fixed saturation and value)."""
    h = int.from_bytes(hashlib.sha256(str(aggregated_id).encode()).digest()[:4], "big") / 2**32
    r, g, b = colorsys.hsv_to_rgb(h, 0.65, 0.85)
    return f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}"


def _num(v: float) -> str:
    return f"{v:.3f}"


def render_svg(
    regions: Sequence[InitialRegion],
    mapping: dict[str, int],
    sites: Sequence[Point],
    diagram: VoronoiDiagram | None = None,
) -> str:
    if diagram is not None:
        box = diagram.bounding_box
    else:
        box = Rect.bounding([r.location for r in regions] + list(sites)).expanded()
    scale = WIDTH / (box.width or 1.0)
    height = max(1.0, box.height * scale)

    def tx(p) -> tuple[str, str]:
        x, y = p
        # SVG y grows downwards
        return _num((x - box.xmin) * scale), _num((box.ymax - y) * scale)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{_num(height)}" '
        f'viewBox="0 0 {WIDTH} {_num(height)}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{_num(height)}" fill="#ffffff"/>',
    ]
    if diagram is not None:
        out.append('<g id="cells" fill="none" stroke="#999999" stroke-width="0.75">')
        for cell in diagram.cells:
            pts = " ".join(",".join(tx(v)) for v in cell)
            out.append(f'<polygon points="{pts}"/>')
        out.append("</g>")
    out.append('<g id="regions" stroke="none">')
    for r in regions:
        x, y = tx((r.location.x, r.location.y))
        aid = mapping[r.region_id]
        out.append(
            f'<circle cx="{x}" cy="{y}" r="3" fill="{color_for(aid)}" data-region={quoteattr(r.region_id)} '
            f'data-aggregated="{aid}"/>'
        )
    out.append("</g>")
    out.append('<g id="sites" fill="#000000" stroke="#ffffff" stroke-width="1">')
    for i, s in enumerate(sites):
        x, y = tx((s.x, s.y))
        out.append(f'<path d="M{x},{y} m-5,0 l5,-5 l5,5 l-5,5 z" data-site="{i}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
