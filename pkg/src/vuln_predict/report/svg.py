"""Dependency-free SVG charts with a fixed canvas.

Each chart carries its plotted values as a CSV table inside an XML comment,
so a figure can be audited without re-running the experiment.
"""

from typing import List, Mapping, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

WIDTH = 800
HEIGHT = 560
MARGIN_LEFT = 80
MARGIN_RIGHT = 220
MARGIN_TOP = 60
MARGIN_BOTTOM = 80

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]

Series = Tuple[str, Sequence[Tuple[float, float]]]


def _escape(text: str) -> str:
    # text nodes and attribute values alike
    return escape(text, {'"': "&quot;", "'": "&#39;"})


def _comment(text: str) -> str:
    # "--" is not allowed inside XML comments
    return "<!--\n" + text.replace("--", "- -") + "\n-->"


def _tick(value: float) -> str:
    if abs(value) >= 100:
        return f"{value:.0f}"
    if abs(value) >= 10:
        return f"{value:.1f}"
    return f"{value:.2f}"


def _header(title: str, meta: Optional[Mapping[str, object]]) -> List[str]:
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    ]
    if meta:
        lines.append(_comment("\n".join(f"{k}={meta[k]}" for k in sorted(meta))))
    lines.append('<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>')
    lines.append(
        f'<text x="{WIDTH / 2:.1f}" y="34" text-anchor="middle" font-size="20" '
        f'font-family="Arial">{_escape(title)}</text>'
    )
    return lines


def _axes(lines: List[str], x_label: str, y_label: str) -> None:
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    lines.append(f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#000000" stroke-width="2"/>')
    lines.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="#000000" stroke-width="2"/>')
    lines.append(
        f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 24}" text-anchor="middle" font-size="15" '
        f'font-family="Arial">{_escape(x_label)}</text>'
    )
    middle = (top + bottom) / 2
    lines.append(
        f'<text x="24" y="{middle:.1f}" text-anchor="middle" font-size="15" font-family="Arial" '
        f'transform="rotate(-90 24 {middle:.1f})">{_escape(y_label)}</text>'
    )


def render_line_chart(
    title: str,
    x_label: str,
    y_label: str,
    series: Sequence[Series],
    x_range: Tuple[float, float] = (0.0, 1.0),
    y_range: Tuple[float, float] = (0.0, 1.0),
    step: bool = False,
    meta: Optional[Mapping[str, object]] = None,
) -> str:
    """Render one polyline per series; ``step`` draws right-continuous steps (PR curves)."""
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    x_min, x_max = x_range
    y_min, y_max = y_range
    if x_max <= x_min or y_max <= y_min:
        raise ValueError("chart ranges must be non-empty")

    def px(x: float) -> float:
        return left + (x - x_min) / (x_max - x_min) * (right - left)

    def py(y: float) -> float:
        return bottom - (y - y_min) / (y_max - y_min) * (bottom - top)

    lines = _header(title, meta)
    table = ["series,x,y"]
    for name, points in series:
        table.extend(f"{name},{x:.6f},{y:.6f}" for x, y in points)
    lines.append(_comment("\n".join(table)))

    for i in range(6):
        y = y_min + (y_max - y_min) * i / 5
        x = x_min + (x_max - x_min) * i / 5
        lines.append(f'<line x1="{left}" y1="{py(y):.2f}" x2="{right}" y2="{py(y):.2f}" stroke="#d9d9d9" stroke-width="1"/>')
        lines.append(
            f'<text x="{left - 8}" y="{py(y) + 5:.2f}" text-anchor="end" font-size="12" '
            f'font-family="Arial">{_tick(y)}</text>'
        )
        lines.append(
            f'<text x="{px(x):.2f}" y="{bottom + 22}" text-anchor="middle" font-size="12" '
            f'font-family="Arial">{_tick(x)}</text>'
        )
    _axes(lines, x_label, y_label)

    for index, (name, points) in enumerate(series):
        color = COLORS[index % len(COLORS)]
        coords: List[Tuple[float, float]] = []
        for x, y in points:
            if step and coords:
                coords.append((x, coords[-1][1]))
            coords.append((x, y))
        if coords:
            poly = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in coords)
            lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="2.5" points="{poly}"/>')
        ly = top + 20 + index * 24
        lines.append(
            f'<line x1="{right + 20}" y1="{ly}" x2="{right + 44}" y2="{ly}" stroke="{color}" stroke-width="3"/>'
        )
        lines.append(
            f'<text x="{right + 50}" y="{ly + 5}" font-size="13" font-family="Arial">{_escape(name)}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_bar_chart(
    title: str,
    x_label: str,
    y_label: str,
    bars: Sequence[Tuple[str, float]],
    meta: Optional[Mapping[str, object]] = None,
    label_every: int = 1,
) -> str:
    """Vertical bars from zero; only every ``label_every``-th category is labeled."""
    if not bars:
        raise ValueError("bar chart needs at least one bar")
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    y_max = max(max(value for _, value in bars), 1.0) * 1.1
    slot = (right - left) / len(bars)

    lines = _header(title, meta)
    lines.append(_comment("\n".join(["label,value"] + [f"{label},{value:g}" for label, value in bars])))
    for i in range(6):
        value = y_max * i / 5
        y = bottom - value / y_max * (bottom - top)
        lines.append(f'<line x1="{left}" y1="{y:.2f}" x2="{right}" y2="{y:.2f}" stroke="#d9d9d9" stroke-width="1"/>')
        lines.append(
            f'<text x="{left - 8}" y="{y + 5:.2f}" text-anchor="end" font-size="12" '
            f'font-family="Arial">{_tick(value)}</text>'
        )
    for index, (label, value) in enumerate(bars):
        height = value / y_max * (bottom - top)
        x = left + index * slot
        lines.append(
            f'<rect x="{x + slot * 0.1:.2f}" y="{bottom - height:.2f}" width="{slot * 0.8:.2f}" '
            f'height="{height:.2f}" fill="{COLORS[0]}"/>'
        )
        if index % max(label_every, 1) == 0:
            cx = x + slot / 2
            lines.append(
                f'<text x="{cx:.2f}" y="{bottom + 16}" text-anchor="end" font-size="10" font-family="Arial" '
                f'transform="rotate(-45 {cx:.2f} {bottom + 16})">{_escape(label)}</text>'
            )
    _axes(lines, x_label, y_label)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
