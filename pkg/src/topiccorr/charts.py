"""Self-contained SVG line charts for correlation series.

Text-only output so chart artifacts diff cleanly and reproduce byte-for-byte;
no raster dependencies.
"""

from __future__ import annotations

from typing import Sequence

from .correlate import CorrelationPoint, CorrelationSeries

WIDTH = 860
HEIGHT = 480
MARGIN_LEFT = 64
MARGIN_RIGHT = 220
MARGIN_TOP = 24
MARGIN_BOTTOM = 56

PALETTE = ("#1b6ca8", "#c84b31", "#2d6a4f", "#9a4c95",
           "#b07d12", "#3d5a80", "#7d1128", "#4d7c0f")


def _coord(value: float) -> str:
    return f"{value:.2f}"


def _score_domain(series_list: Sequence[CorrelationSeries]) -> tuple[float, float]:
    scores = [p.score for s in series_list for p in s.points if p.present]
    if not scores:
        return -1.0, 1.0
    lo, hi = min(scores), max(scores)
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    pad = (hi - lo) * 0.08
    return lo - pad, hi + pad


def _runs(points: Sequence[CorrelationPoint]) -> list[list[tuple[int, float]]]:
    """Maximal runs of consecutive present points; absent months split runs."""
    runs: list[list[tuple[int, float]]] = []
    current: list[tuple[int, float]] = []
    for i, p in enumerate(points):
        if p.present:
            current.append((i, p.score))
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return runs


def render_chart(series_list: Sequence[CorrelationSeries], out_path, title: str = "",
                 provenance: str = "") -> None:
    """Write one SVG: a polyline per contiguous run of present scores, month
    and score axes, and a legend entry per series labeled pair and method.
    A provenance string, when given, is embedded as an XML comment."""
    if not series_list:
        raise ValueError("at least one series required")
    months = series_list[0].months
    for s in series_list[1:]:
        if s.months != months:
            raise ValueError("all series must share the same month range")

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    lo, hi = _score_domain(series_list)

    def x_at(i: int) -> float:
        if len(months) == 1:
            return MARGIN_LEFT + plot_w / 2.0
        return MARGIN_LEFT + plot_w * i / (len(months) - 1)

    def y_at(score: float) -> float:
        return MARGIN_TOP + plot_h * (hi - score) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if provenance:
        parts.insert(1, f"<!-- {provenance} -->")
    if title:
        parts.append(
            f'<text x="{MARGIN_LEFT}" y="16" font-size="13" fill="#222">{title}</text>'
        )

    axis_y = MARGIN_TOP + plot_h
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{axis_y}" x2="{MARGIN_LEFT + plot_w}" '
        f'y2="{axis_y}" stroke="#444" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{axis_y}" stroke="#444" stroke-width="1"/>'
    )
    for i, month in enumerate(months):
        x = x_at(i)
        parts.append(
            f'<line x1="{_coord(x)}" y1="{axis_y}" x2="{_coord(x)}" '
            f'y2="{axis_y + 4}" stroke="#444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_coord(x)}" y="{axis_y + 18}" font-size="9" fill="#333" '
            f'text-anchor="middle">{month}</text>'
        )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        score = lo + (hi - lo) * frac
        y = y_at(score)
        parts.append(
            f'<line x1="{MARGIN_LEFT - 4}" y1="{_coord(y)}" x2="{MARGIN_LEFT}" '
            f'y2="{_coord(y)}" stroke="#444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{_coord(y + 3)}" font-size="9" fill="#333" '
            f'text-anchor="end">{score:.2f}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.2f}" y="{HEIGHT - 12}" font-size="11" '
        f'fill="#222" text-anchor="middle">month</text>'
    )
    parts.append(
        f'<text x="16" y="{MARGIN_TOP + plot_h / 2:.2f}" font-size="11" fill="#222" '
        f'text-anchor="middle" transform="rotate(-90 16 {MARGIN_TOP + plot_h / 2:.2f})">score</text>'
    )

    legend_x = MARGIN_LEFT + plot_w + 16
    for si, series in enumerate(series_list):
        color = PALETTE[si % len(PALETTE)]
        for run in _runs(series.points):
            pts = " ".join(f"{_coord(x_at(i))},{_coord(y_at(score))}" for i, score in run)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
            for i, score in run:
                parts.append(
                    f'<circle cx="{_coord(x_at(i))}" cy="{_coord(y_at(score))}" '
                    f'r="2.2" fill="{color}"/>'
                )
        method = series.points[0].method
        label = f"{series.pair[0]}|{series.pair[1]} ({method})"
        ly = MARGIN_TOP + 10 + si * 16
        parts.append(
            f'<line x1="{legend_x}" y1="{ly}" x2="{legend_x + 18}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2" class="legend"/>'
        )
        parts.append(
            f'<text x="{legend_x + 24}" y="{ly + 3}" font-size="10" fill="#222" '
            f'class="legend">{label}</text>'
        )
    parts.append("</svg>")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
