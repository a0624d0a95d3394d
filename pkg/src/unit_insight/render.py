"""SVG rendering of the unit-space area plot: one Voronoi cell per unit,
filled by the majority label's articulatory family and annotated with the
label itself. Output bytes are deterministic for equal inputs."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .types import ValidationError
from .voronoi import VoronoiDiagram

FAMILY_COLORS = {
    "vowel": "#e5553b",
    "semivowel": "#f2a541",
    "nasal": "#7bb661",
    "fricative": "#4e79a7",
    "affricate": "#b07aa1",
    "stop": "#59a7a7",
    "silence": "#9c9c9c",
    "other": "#d8d0c5",
}

_CANVAS = 900.0
_PAD = 10.0


def load_family_table(path: str | Path | None = None) -> dict[str, str]:
    """Phoneme -> family map; defaults to the packaged TIMIT 39-phone folding."""
    if path is None:
        text = resources.files("unit_insight").joinpath("data/timit_phoneme_families.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    table = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"family table line {lineno}: expected 'phoneme<TAB>family'")
        table[parts[0]] = parts[1]
    return table


def _cell_centroid(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    if area == 0.0:
        return poly.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def render_svg(
    d: VoronoiDiagram,
    labels: dict[int, str],
    families: dict[str, str],
    path: str | Path,
) -> None:
    """Write the area plot. Every unit must have a label; labels missing
    from the family table fall back to the "other" family."""
    missing = [u for u in range(len(d.cells)) if u not in labels]
    if missing:
        raise ValidationError(f"units without a label: {missing}")

    xmin, xmax, ymin, ymax = d.bbox
    scale = (_CANVAS - 2 * _PAD) / max(xmax - xmin, ymax - ymin)

    def to_canvas(p: np.ndarray) -> tuple[float, float]:
        # flip y so larger embedding y renders upward
        return (_PAD + (p[0] - xmin) * scale, _PAD + (ymax - p[1]) * scale)

    width = 2 * _PAD + (xmax - xmin) * scale
    height = 2 * _PAD + (ymax - ymin) * scale
    font = max(6.0, min(18.0, 240.0 / max(len(d.cells), 1) ** 0.5))

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1f}" height="{height:.1f}" '
        f'viewBox="0 0 {width:.1f} {height:.1f}">',
        f'<rect x="0" y="0" width="{width:.1f}" height="{height:.1f}" fill="#ffffff"/>',
    ]
    for u in range(len(d.cells)):
        label = labels[u]
        family = families.get(label, "other")
        color = FAMILY_COLORS.get(family, FAMILY_COLORS["other"])
        ring = " ".join(f"{px:.3f},{py:.3f}" for px, py in (to_canvas(v) for v in d.cells[u]))
        parts.append(
            f'<polygon points="{ring}" fill="{color}" stroke="#333333" stroke-width="0.6"/>'
        )
    for u in range(len(d.cells)):
        cx, cy = to_canvas(_cell_centroid(d.cells[u]))
        parts.append(
            f'<text x="{cx:.3f}" y="{cy:.3f}" font-size="{font:.1f}" font-family="monospace" '
            f'text-anchor="middle" dominant-baseline="middle">{_escape(labels[u])}</text>'
        )
    parts.append("</svg>")
    Path(path).write_bytes("\n".join(parts).encode("utf-8"))


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
