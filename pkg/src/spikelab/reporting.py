"""CSV artifacts and hand-emitted SVG plots.

CSV files are the authoritative outputs; SVGs are rendered from them
with fixed float formatting so a rerun over identical inputs produces
byte-identical bytes. No plotting stack is involved: line charts are
polylines, heatmaps are colored rects.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

__all__ = ["write_csv", "read_csv", "line_plot_svg", "heatmap_svg"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

# Five-stop blue->yellow ramp used by the heatmaps.
_RAMP = ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37))


def write_csv(path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_cell(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _f(x: float) -> str:
    return f"{x:.2f}"


def line_plot_svg(
    series: dict[str, list[tuple[float, float]]],
    title: str,
    x_label: str,
    y_label: str,
    width: int = 640,
    height: int = 400,
) -> str:
    """Multi-series line chart with axes, ticks, and a legend."""
    margin_l, margin_r, margin_t, margin_b = 60, 140, 40, 50
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b
    pts = [p for s in series.values() for p in s]
    if not pts:
        xs_lo, xs_hi, ys_lo, ys_hi = 0.0, 1.0, 0.0, 1.0
    else:
        xs_lo = min(p[0] for p in pts)
        xs_hi = max(p[0] for p in pts)
        ys_lo = min(p[1] for p in pts)
        ys_hi = max(p[1] for p in pts)
        if xs_hi == xs_lo:
            xs_hi = xs_lo + 1.0
        if ys_hi == ys_lo:
            ys_hi = ys_lo + 1.0

    def px(x):
        return margin_l + (x - xs_lo) / (xs_hi - xs_lo) * plot_w

    def py(y):
        return margin_t + plot_h - (y - ys_lo) / (ys_hi - ys_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333"/>',
    ]
    for tx in _ticks(xs_lo, xs_hi):
        x = px(tx)
        out.append(
            f'<line x1="{_f(x)}" y1="{margin_t + plot_h}" x2="{_f(x)}" '
            f'y2="{margin_t + plot_h + 5}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{_f(x)}" y="{margin_t + plot_h + 20}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{tx:.3g}</text>'
        )
    for ty in _ticks(ys_lo, ys_hi):
        y = py(ty)
        out.append(
            f'<line x1="{margin_l - 5}" y1="{_f(y)}" x2="{margin_l}" y2="{_f(y)}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{margin_l - 8}" y="{_f(y + 4)}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{ty:.3g}</text>'
        )
    out.append(
        f'<text x="{margin_l + plot_w // 2}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">{x_label}</text>'
    )
    out.append(
        f'<text x="18" y="{margin_t + plot_h // 2}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 18 {margin_t + plot_h // 2})">'
        f"{y_label}</text>"
    )
    for i, (name, points) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in sorted(points))
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in points:
            out.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="3" fill="{color}"/>')
        ly = margin_t + 16 + 18 * i
        lx = width - margin_r + 10
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{lx + 28}" y="{ly}" font-size="11" font-family="sans-serif">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _ramp_color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    pos = t * (len(_RAMP) - 1)
    i = min(int(math.floor(pos)), len(_RAMP) - 2)
    frac = pos - i
    rgb = [round(_RAMP[i][c] + frac * (_RAMP[i + 1][c] - _RAMP[i][c])) for c in range(3)]
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def heatmap_svg(
    xs: list[float],
    ys: list[float],
    values: dict[tuple[float, float], float],
    title: str,
    x_label: str,
    y_label: str,
    cell: int = 48,
) -> str:
    """Grid heatmap; cell color ramps over the value range."""
    margin_l, margin_t = 90, 50
    width = margin_l + cell * len(xs) + 120
    height = margin_t + cell * len(ys) + 60
    vals = list(values.values())
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
    ]
    for j, yv in enumerate(ys):
        for i, xv in enumerate(xs):
            v = values.get((xv, yv))
            color = "#eeeeee" if v is None else _ramp_color((v - lo) / (hi - lo))
            x = margin_l + i * cell
            y = margin_t + (len(ys) - 1 - j) * cell
            out.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{color}" '
                f'stroke="#555" stroke-width="0.5"/>'
            )
            if v is not None:
                out.append(
                    f'<text x="{x + cell // 2}" y="{y + cell // 2 + 4}" text-anchor="middle" '
                    f'font-size="10" font-family="sans-serif">{v:.3g}</text>'
                )
    for i, xv in enumerate(xs):
        out.append(
            f'<text x="{margin_l + i * cell + cell // 2}" y="{margin_t + len(ys) * cell + 16}" '
            f'text-anchor="middle" font-size="11" font-family="sans-serif">{xv:.3g}</text>'
        )
    for j, yv in enumerate(ys):
        out.append(
            f'<text x="{margin_l - 8}" y="{margin_t + (len(ys) - 1 - j) * cell + cell // 2 + 4}" '
            f'text-anchor="end" font-size="11" font-family="sans-serif">{yv:.3g}</text>'
        )
    out.append(
        f'<text x="{margin_l + len(xs) * cell // 2}" y="{height - 10}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">{x_label}</text>'
    )
    out.append(
        f'<text x="20" y="{margin_t + len(ys) * cell // 2}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 20 {margin_t + len(ys) * cell // 2})">'
        f"{y_label}</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
