"""Static SVG rendering of a workspace and executed trajectories."""
from __future__ import annotations

import csv
import io
from typing import Dict, Iterable, List, Tuple
from xml.sax.saxutils import escape

from .geometry import Workspace

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22")


def read_trajectories(text: str) -> Dict[int, List[Tuple[float, float, float, str]]]:
    """Parse trajectories CSV text into ``robot -> [(t, x, y, mode), ...]``."""
    out: Dict[int, List[Tuple[float, float, float, str]]] = {}
    for row in csv.DictReader(io.StringIO(text)):
        out.setdefault(int(row["robot"]), []).append(
            (float(row["t"]), float(row["x"]), float(row["y"]), row["mode"]))
    return out


def render_svg(ws: Workspace, tracks: Dict[int, List[Tuple[float, float, float, str]]],
               radii: Dict[int, float] = None, width: int = 640, title: str = "") -> str:
    """Workspace, obstacles, labelled regions, one polyline per robot, start
    markers, and a cross wherever a robot switched to emergency braking."""
    x0, y0, x1, y1 = ws.bounds
    margin = 20
    scale = (width - 2 * margin) / max(x1 - x0, y1 - y0)
    height = int(round((y1 - y0) * scale + 2 * margin))

    def px(x, y):
        return margin + (x - x0) * scale, height - margin - (y - y0) * scale

    def pts(coords: Iterable) -> str:
        return " ".join("%.2f,%.2f" % px(x, y) for x, y in coords)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        parts.append(f'<title>{escape(title)}</title>')
    parts.append(f'<polygon points="{pts([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])}" '
                 'fill="none" stroke="black" stroke-width="1.5"/>')
    for name in sorted(ws.regions):
        for poly in ws.regions[name]:
            parts.append(f'<polygon points="{pts(poly.vertices)}" fill="#fff3b0" stroke="#c9a400"/>')
            cx = sum(v[0] for v in poly.vertices) / len(poly.vertices)
            cy = sum(v[1] for v in poly.vertices) / len(poly.vertices)
            tx, ty = px(cx, cy)
            parts.append(f'<text x="{tx:.2f}" y="{ty:.2f}" font-size="11" text-anchor="middle" '
                         f'dominant-baseline="middle">{escape(name)}</text>')
    for poly in ws.obstacles:
        parts.append(f'<polygon points="{pts(poly.vertices)}" fill="#555555" stroke="black"/>')
    radii = radii or {}
    for k, rid in enumerate(sorted(tracks)):
        color = PALETTE[k % len(PALETTE)]
        track = tracks[rid]
        if not track:
            continue
        parts.append(f'<polyline points="{pts((x, y) for _, x, y, _ in track)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.2"/>')
        sx, sy = px(track[0][1], track[0][2])
        r = max(2.0, radii.get(rid, 0.0) * scale)
        parts.append(f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="{r:.2f}" fill="{color}" fill-opacity="0.5" '
                     f'stroke="{color}"/>')
        parts.append(f'<text x="{sx + r + 2:.2f}" y="{sy:.2f}" font-size="10" fill="{color}">{rid}</text>')
        prev = None
        for _, x, y, mode in track:
            if mode == "Emerg" and prev != "Emerg":
                ex, ey = px(x, y)
                parts.append(f'<path d="M{ex - 4:.2f},{ey - 4:.2f} L{ex + 4:.2f},{ey + 4:.2f} '
                             f'M{ex - 4:.2f},{ey + 4:.2f} L{ex + 4:.2f},{ey - 4:.2f}" '
                             f'stroke="{color}" stroke-width="2"/>')
            prev = mode
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
