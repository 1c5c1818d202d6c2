"""Dependency-free SVG charts for run reports.

Three chart kinds cover everything the pipeline reports: annotated
heatmaps (transferability / coefficient matrices), bar charts (per-channel
scores), and square scatter plots with a dashed identity diagonal
(within vs. across comparisons). Charts are returned as SVG strings;
``save_svg`` writes them out.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidReport

CELL = 46           # heatmap cell size, px
_FONT = "font-family=\"Helvetica, Arial, sans-serif\""


def _lerp_color(frac: float, lo=(247, 251, 255), hi=(8, 69, 148)) -> str:
    frac = min(1.0, max(0.0, frac))
    r, g, b = (round(l + frac * (h - l)) for l, h in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def _svg(width: int, height: int, body: list[str], title: str) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:g}" y="20" text-anchor="middle" '
                     f'{_FONT} font-size="15" font-weight="bold">'
                     f'{escape(title)}</text>')
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def heatmap_svg(matrix: np.ndarray, row_labels: list[str],
                col_labels: list[str], title: str = "",
                vmin: float | None = None, vmax: float | None = None) -> str:
    """Annotated heatmap; NaN cells render gray with a dash."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape != (len(row_labels), len(col_labels)):
        raise InvalidReport(
            f"heatmap shape {matrix.shape} does not match labels "
            f"({len(row_labels)} rows, {len(col_labels)} cols)")
    finite = matrix[np.isfinite(matrix)]
    if finite.size == 0:
        raise InvalidReport("heatmap has no finite values")
    lo = float(finite.min()) if vmin is None else vmin
    hi = float(finite.max()) if vmax is None else vmax
    span = hi - lo or 1.0

    left = 14 + 8 * max(len(l) for l in row_labels)
    top = 36 + 7 * max(len(l) for l in col_labels)
    width = left + CELL * len(col_labels) + 12
    height = top + CELL * len(row_labels) + 12
    body = []
    for j, label in enumerate(col_labels):
        x = left + CELL * j + CELL / 2
        body.append(f'<text x="{x:g}" y="{top - 6}" text-anchor="start" {_FONT} '
                    f'font-size="11" transform="rotate(-60 {x:g} {top - 6})">'
                    f'{escape(label)}</text>')
    for i, label in enumerate(row_labels):
        y = top + CELL * i + CELL / 2 + 4
        body.append(f'<text x="{left - 6}" y="{y:g}" text-anchor="end" {_FONT} '
                    f'font-size="11">{escape(label)}</text>')
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            x, y = left + CELL * j, top + CELL * i
            v = matrix[i, j]
            if np.isfinite(v):
                fill = _lerp_color((v - lo) / span)
                text, tcol = f"{v:.2f}", ("white" if (v - lo) / span > 0.6
                                          else "black")
            else:
                fill, text, tcol = "#bbbbbb", "–", "black"
            body.append(f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                        f'fill="{fill}" stroke="white"/>')
            body.append(f'<text x="{x + CELL / 2:g}" y="{y + CELL / 2 + 4:g}" '
                        f'text-anchor="middle" {_FONT} font-size="10" '
                        f'fill="{tcol}">{text}</text>')
    return _svg(width, height, body, title)


def bar_chart_svg(labels: list[str], values: np.ndarray, title: str = "",
                  y_label: str = "") -> str:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) != len(labels):
        raise InvalidReport(f"{len(labels)} labels but values shape {values.shape}")
    if len(values) == 0 or not np.all(np.isfinite(values)):
        raise InvalidReport("bar chart needs finite, non-empty values")
    lo, hi = min(0.0, float(values.min())), max(0.0, float(values.max()))
    span = hi - lo or 1.0
    bar_w, gap, left, top, plot_h = 34, 10, 58, 36, 220
    width = left + len(values) * (bar_w + gap) + 16
    height = top + plot_h + 56

    def y_of(v: float) -> float:
        return top + plot_h * (hi - v) / span

    body = [f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" '
            f'stroke="black"/>',
            f'<line x1="{left}" y1="{y_of(0):g}" '
            f'x2="{width - 10}" y2="{y_of(0):g}" stroke="black"/>']
    for tick in (lo, hi) if lo < 0 else (0.0, hi):
        body.append(f'<text x="{left - 6}" y="{y_of(tick) + 4:g}" '
                    f'text-anchor="end" {_FONT} font-size="10">{tick:.2f}</text>')
    if y_label:
        body.append(f'<text x="14" y="{top + plot_h / 2:g}" text-anchor="middle" '
                    f'{_FONT} font-size="11" transform="rotate(-90 14 '
                    f'{top + plot_h / 2:g})">{escape(y_label)}</text>')
    for i, (label, v) in enumerate(zip(labels, values)):
        x = left + gap / 2 + i * (bar_w + gap)
        y0, y1 = sorted((y_of(0.0), y_of(v)))
        body.append(f'<rect x="{x:g}" y="{y0:g}" width="{bar_w}" '
                    f'height="{max(y1 - y0, 0.5):g}" fill="#4878b0"/>')
        body.append(f'<text x="{x + bar_w / 2:g}" y="{y0 - 4:g}" '
                    f'text-anchor="middle" {_FONT} font-size="9">{v:.2f}</text>')
        lx, ly = x + bar_w / 2, top + plot_h + 14
        body.append(f'<text x="{lx:g}" y="{ly:g}" text-anchor="end" {_FONT} '
                    f'font-size="10" transform="rotate(-45 {lx:g} {ly:g})">'
                    f'{escape(label)}</text>')
    return _svg(width, height, body, title)


def scatter_svg(x: np.ndarray, y: np.ndarray, title: str = "",
                x_label: str = "", y_label: str = "") -> str:
    """Square scatter with equal axis ranges and a dashed identity line."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidReport(f"scatter needs matching 1-D arrays, "
                            f"got {x.shape} and {y.shape}")
    if x.size == 0 or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidReport("scatter needs finite, non-empty coordinates")
    lo = float(min(x.min(), y.min()))
    hi = float(max(x.max(), y.max()))
    pad = 0.05 * ((hi - lo) or 1.0)
    lo, hi = lo - pad, hi + pad
    side, left, top = 260, 64, 36
    width = height = left + side + 40

    def px(v: float) -> float:
        return left + side * (v - lo) / (hi - lo)

    def py(v: float) -> float:
        return top + side * (hi - v) / (hi - lo)

    body = [f'<rect x="{left}" y="{top}" width="{side}" height="{side}" '
            f'fill="none" stroke="black"/>',
            f'<line x1="{px(lo):g}" y1="{py(lo):g}" x2="{px(hi):g}" '
            f'y2="{py(hi):g}" stroke="#888888" stroke-dasharray="5 4"/>']
    for tick in (lo + pad, hi - pad):
        body.append(f'<text x="{px(tick):g}" y="{top + side + 16}" '
                    f'text-anchor="middle" {_FONT} font-size="10">'
                    f'{tick:.2f}</text>')
        body.append(f'<text x="{left - 8}" y="{py(tick) + 4:g}" '
                    f'text-anchor="end" {_FONT} font-size="10">{tick:.2f}</text>')
    for xi, yi in zip(x, y):
        body.append(f'<circle cx="{px(xi):g}" cy="{py(yi):g}" r="4" '
                    f'fill="#b04848" fill-opacity="0.75"/>')
    if x_label:
        body.append(f'<text x="{left + side / 2:g}" y="{top + side + 34}" '
                    f'text-anchor="middle" {_FONT} font-size="11">'
                    f'{escape(x_label)}</text>')
    if y_label:
        body.append(f'<text x="18" y="{top + side / 2:g}" text-anchor="middle" '
                    f'{_FONT} font-size="11" transform="rotate(-90 18 '
                    f'{top + side / 2:g})">{escape(y_label)}</text>')
    return _svg(width, height, body, title)


def save_svg(svg: str, path: str | Path) -> Path:
    if not svg.lstrip().startswith("<svg"):
        raise InvalidReport("not an SVG document")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    return path
