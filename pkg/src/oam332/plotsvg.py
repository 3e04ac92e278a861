"""Minimal self-contained SVG line plots: axes, ticks, polylines, labels.

Kept deliberately tiny so emitted figures need no plotting dependency and
are byte-stable for golden tests.
"""

from __future__ import annotations

from typing import Sequence

_WIDTH, _HEIGHT = 720, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 80, 30, 40, 60
_COLORS = ("#1f6fb2", "#c23b22", "#3a8f4d", "#8a5fb0")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def render_svg(
    xs: Sequence[float],
    series: Sequence[tuple[str, Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str = "",
) -> str:
    if not series or not len(xs):
        raise ValueError("nothing to plot")
    xmin, xmax = min(xs), max(xs)
    ys_all = [y for _, ys in series for y in ys]
    ymin, ymax = min(ys_all), max(ys_all)
    if ymax == ymin:
        ymax = ymin + 1.0
    if xmax == xmin:
        xmax = xmin + 1.0
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(x: float) -> float:
        return _MARGIN_L + (x - xmin) / (xmax - xmin) * plot_w

    def sy(y: float) -> float:
        return _MARGIN_T + plot_h - (y - ymin) / (ymax - ymin) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<g font-family="sans-serif" font-size="13" fill="#222">',
    ]
    if title:
        out.append(
            f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="15">{title}</text>'
        )
    # axes
    x0, y0 = _MARGIN_L, _MARGIN_T + plot_h
    out.append(
        f'<path d="M {x0} {_MARGIN_T} L {x0} {y0} L {_MARGIN_L + plot_w} {y0}" '
        f'stroke="#222" fill="none"/>'
    )
    for tx in _ticks(xmin, xmax):
        px = sx(tx)
        out.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" stroke="#222"/>')
        out.append(
            f'<text x="{px:.1f}" y="{y0 + 20}" text-anchor="middle">{tx:.4g}</text>'
        )
    for ty in _ticks(ymin, ymax):
        py = sy(ty)
        out.append(f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="#222"/>')
        out.append(
            f'<text x="{x0 - 9}" y="{py + 4:.1f}" text-anchor="end">{ty:.4g}</text>'
        )
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 14}" text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="20" y="{_MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_MARGIN_T + plot_h / 2:.1f})">{ylabel}</text>'
    )
    for i, (name, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _MARGIN_T + 16 + 18 * i
        lx = _MARGIN_L + plot_w - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}">{name}</text>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"


def write_svg(path, xs, series, xlabel: str, ylabel: str, title: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(xs, series, xlabel, ylabel, title))
