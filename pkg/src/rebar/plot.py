"""Deterministic SVG rendering of relative-position sets.

Polytopes are turned into polygons by clipping the view rectangle against
each half-space in turn, so unbounded sets are drawn up to the frame.
"""

from __future__ import annotations

import numpy as np

from .lingeo import Polytope

WIDTH = 480
MARGIN = 24
STEP_COLORS = ("#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#17becf", "#bcbd22")


def clip_halfplane(poly, a, b):
    """Sutherland-Hodgman step: keep the part of ``poly`` with ``a . p <= b``."""
    out = []
    n = len(poly)
    for k in range(n):
        cur, nxt = poly[k], poly[(k + 1) % n]
        fc, fn = a @ cur - b, a @ nxt - b
        if fc <= 0:
            out.append(cur)
        if fc * fn < 0:
            t = fc / (fc - fn)
            out.append(cur + t * (nxt - cur))
    return out


def polygon(P: Polytope, view) -> np.ndarray:
    """Vertices (counter-clockwise) of ``P`` intersected with the view box."""
    (x0, y0), (x1, y1) = view
    poly = [np.array(v, dtype=float) for v in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
    if P.empty:
        return np.zeros((0, 2))
    A, b = P.le_form()
    for a, rhs in zip(A, b):
        poly = clip_halfplane(poly, a, rhs)
        if not poly:
            return np.zeros((0, 2))
    # corners lying on a facet line come out twice
    keep = [v for k, v in enumerate(poly) if np.max(np.abs(v - poly[k - 1])) > 1e-9]
    return np.array(keep).reshape(-1, 2)


def _fmt(v):
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


class _Frame:
    def __init__(self, view):
        (self.x0, self.y0), (self.x1, self.y1) = view
        span = max(self.x1 - self.x0, self.y1 - self.y0)
        self.scale = (WIDTH - 2 * MARGIN) / span
        self.height = int(round((self.y1 - self.y0) * self.scale)) + 2 * MARGIN
        self.width = int(round((self.x1 - self.x0) * self.scale)) + 2 * MARGIN

    def xy(self, p):
        # SVG y axis points down
        return (MARGIN + (p[0] - self.x0) * self.scale, self.height - MARGIN - (p[1] - self.y0) * self.scale)

    def points(self, verts):
        return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (self.xy(v) for v in verts))


def view_for(sets, points=(), relpos_box=None, pad=0.1):
    """Square-ish frame covering the given sets' vertices and points."""
    if relpos_box is not None:
        lo, hi = np.asarray(relpos_box[0], float), np.asarray(relpos_box[1], float)
    else:
        lo, hi = np.full(2, -1.0), np.full(2, 1.0)
    big = ((lo[0], lo[1]), (hi[0], hi[1]))
    corners = [polygon(P, big) for P in sets]
    pts = [np.asarray(points, dtype=float).reshape(-1, 2)] + [c for c in corners if len(c)]
    allp = np.concatenate(pts) if any(len(p) for p in pts) else np.array([lo, hi])
    vlo, vhi = allp.min(axis=0), allp.max(axis=0)
    extent = np.maximum(vhi - vlo, 1e-6)
    vlo, vhi = vlo - pad * extent, vhi + pad * extent
    return (float(vlo[0]), float(vlo[1])), (float(vhi[0]), float(vhi[1]))


def render_svg(collision: Polytope, steps, points=(), view=None, title="") -> str:
    """SVG text: filled collision set, outlined over-approximations, sample dots.

    ``steps`` are the over-approximation steps 1..k. The output depends only
    on the inputs (fixed formatting, fixed ordering).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if view is None:
        view = view_for([collision, *steps], points)
    fr = _Frame(view)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{fr.width}" height="{fr.height}" '
        f'viewBox="0 0 {fr.width} {fr.height}">',
        f'<rect x="0" y="0" width="{fr.width}" height="{fr.height}" fill="white"/>',
    ]
    if title:
        out.append(f'<title>{title}</title>')
    origin = fr.xy((0.0, 0.0))
    out.append(f'<g stroke="#cccccc" stroke-width="1">'
               f'<line x1="{_fmt(MARGIN)}" y1="{_fmt(origin[1])}" x2="{_fmt(fr.width - MARGIN)}" '
               f'y2="{_fmt(origin[1])}"/>'
               f'<line x1="{_fmt(origin[0])}" y1="{_fmt(MARGIN)}" x2="{_fmt(origin[0])}" '
               f'y2="{_fmt(fr.height - MARGIN)}"/></g>')
    verts = polygon(collision, view)
    if len(verts):
        out.append(f'<polygon class="collision" points="{fr.points(verts)}" '
                   f'fill="#d62728" fill-opacity="0.25" stroke="#d62728" stroke-width="1.5"/>')
    for k, P in enumerate(steps, start=1):
        verts = polygon(P, view)
        if not len(verts):
            continue
        color = STEP_COLORS[(k - 1) % len(STEP_COLORS)]
        out.append(f'<polygon class="rbpoa" data-step="{k}" points="{fr.points(verts)}" '
                   f'fill="none" stroke="{color}" stroke-width="2"/>')
    if len(points):
        # sorted so the output does not depend on sampling order
        pts = points[np.lexsort((points[:, 1], points[:, 0]))]
        out.append('<g class="rbpua" fill="#333333">')
        seen = set()
        for p in pts:
            x, y = fr.xy(p)
            key = (_fmt(x), _fmt(y))
            if key in seen:
                continue
            seen.add(key)
            out.append(f'<circle cx="{key[0]}" cy="{key[1]}" r="1.5"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
