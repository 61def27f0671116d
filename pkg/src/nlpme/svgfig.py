"""Self-contained SVG line plots; no plotting stack required.

Polyline figures with optional log axes, enough for density evolution
snapshots, log-log decay fits, and residual maps.  Output is plain
deterministic text: the same figure spec always yields the same bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["Series", "LineFigure", "render_svg", "write_svg"]

_PALETTE = ["#1f5fa8", "#c23b22", "#2e8540", "#8031a7", "#b8860b", "#12787f",
            "#77216f", "#444444"]


@dataclass
class Series:
    x: list
    y: list
    label: str = ""


@dataclass
class LineFigure:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    logx: bool = False
    logy: bool = False
    width: int = 720
    height: int = 480


def _transform(vals, log):
    out = []
    for v in vals:
        v = float(v)
        if log:
            if v <= 0.0 or not math.isfinite(v):
                out.append(None)
            else:
                out.append(math.log10(v))
        else:
            out.append(v if math.isfinite(v) else None)
    return out


def _ticks(lo: float, hi: float, log: bool, n: int = 5):
    span = hi - lo
    if span <= 0:
        span = 1.0
        hi = lo + 1.0
    ticks = []
    for i in range(n):
        pos = lo + span * i / (n - 1)
        label = 10.0**pos if log else pos
        ticks.append((pos, "%.3g" % label))
    return ticks


def render_svg(fig: LineFigure) -> str:
    W, H = fig.width, fig.height
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = W - ml - mr, H - mt - mb

    pts = []
    for s in fig.series:
        xs = _transform(s.x, fig.logx)
        ys = _transform(s.y, fig.logy)
        pts.append([(a, b) for a, b in zip(xs, ys) if a is not None and b is not None])
    allx = [p[0] for poly in pts for p in poly]
    ally = [p[1] for poly in pts for p in poly]
    if not allx:
        allx, ally = [0.0, 1.0], [0.0, 1.0]
    xlo, xhi = min(allx), max(allx)
    ylo, yhi = min(ally), max(ally)
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    pad = 0.04 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def px(x):
        return ml + pw * (x - xlo) / (xhi - xlo)

    def py(y):
        return mt + ph * (1.0 - (y - ylo) / (yhi - ylo))

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">'
    )
    out.append(f'<rect width="{W}" height="{H}" fill="white"/>')
    out.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{fig.title}</text>'
    )
    for pos, label in _ticks(xlo, xhi, fig.logx):
        x = px(pos)
        out.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" '
                   f'y2="{mt + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{x:.2f}" y="{mt + ph + 20}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{label}</text>')
    for pos, label in _ticks(ylo, yhi, fig.logy):
        y = py(pos)
        out.append(f'<line x1="{ml - 5}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" '
                   f'stroke="#333"/>')
        out.append(f'<text x="{ml - 8}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{label}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{H - 12}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{fig.xlabel}</text>')
    out.append(f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{fig.ylabel}</text>')

    for i, (s, poly) in enumerate(zip(fig.series, pts)):
        if not poly:
            continue
        color = _PALETTE[i % len(_PALETTE)]
        path = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in poly)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        if s.label:
            ly = mt + 16 + 16 * i
            out.append(f'<line x1="{ml + pw - 120}" y1="{ly - 4}" '
                       f'x2="{ml + pw - 100}" y2="{ly - 4}" stroke="{color}" '
                       f'stroke-width="2"/>')
            out.append(f'<text x="{ml + pw - 95}" y="{ly}" '
                       f'font-family="sans-serif" font-size="11">{s.label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(fig: LineFigure, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(render_svg(fig))
