"""Convergence-history plots rendered as standalone SVG.

The geometry constants below are part of the output contract: downstream
tooling can invert the axis transform from them to recover curve values.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .bench import read_aggregate_csv
from .errors import ConfigurationError

WIDTH = 840
HEIGHT = 520
MARGIN_LEFT = 70
MARGIN_RIGHT = 170
MARGIN_TOP = 30
MARGIN_BOTTOM = 50

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)


def _method_label(path: Path) -> str:
    stem = path.stem
    if stem.endswith("_aggregate"):
        stem = stem[: -len("_aggregate")]
    return stem.split("_")[0]


def axis_transform(
    x_range: tuple[float, float], y_range: tuple[float, float]
) -> tuple[float, float, float, float]:
    """Scale/offset pairs mapping data coordinates to pixels."""
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    x_span = max(x_range[1] - x_range[0], 1e-12)
    y_span = max(y_range[1] - y_range[0], 1e-12)
    return plot_w / x_span, plot_h / y_span, x_range[0], y_range[0]


def emit_convergence_plot(
    aggregate_paths: list[Path], output: Path, log_y: bool = False, value_column: str = "mean_best"
) -> Path:
    """Render one best-so-far curve per aggregate CSV into an SVG file."""
    if not aggregate_paths:
        raise ConfigurationError("need at least one aggregate CSV")
    curves = []
    for path in aggregate_paths:
        agg = read_aggregate_csv(Path(path))
        x = agg["eval_index"]
        y = agg[value_column]
        if log_y:
            if np.any(y <= 0.0):
                raise ConfigurationError("log scale requires strictly positive values")
            y = np.log10(y)
        curves.append((_method_label(Path(path)), x, y))

    x_min = min(float(np.min(x)) for _, x, _ in curves)
    x_max = max(float(np.max(x)) for _, x, _ in curves)
    y_min = min(float(np.min(y)) for _, _, y in curves)
    y_max = max(float(np.max(y)) for _, _, y in curves)
    sx, sy, x0, y0 = axis_transform((x_min, x_max), (y_min, y_max))

    def to_px(x, y):
        px = MARGIN_LEFT + (x - x0) * sx
        py = HEIGHT - MARGIN_BOTTOM - (y - y0) * sy
        return px, py

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{HEIGHT - MARGIN_BOTTOM}" x2="{WIDTH - MARGIN_RIGHT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>',
    ]
    for tick in np.linspace(x_min, x_max, 5):
        px, _ = to_px(tick, y_min)
        parts.append(
            f'<text x="{px:.1f}" y="{HEIGHT - MARGIN_BOTTOM + 18}" font-size="11" '
            f'text-anchor="middle">{tick:.0f}</text>'
        )
    for tick in np.linspace(y_min, y_max, 5):
        _, py = to_px(x_min, tick)
        label = f"{10 ** tick:.3g}" if log_y else f"{tick:.4g}"
        parts.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{py + 4:.1f}" font-size="11" '
            f'text-anchor="end">{label}</text>'
        )
    parts.append(
        f'<text x="{(MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2:.1f}" y="{HEIGHT - 12}" '
        f'font-size="12" text-anchor="middle">evaluations</text>'
    )

    for i, (label, x, y) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{to_px(xi, yi)[0]:.6f},{to_px(xi, yi)[1]:.6f}" for xi, yi in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN_TOP + 16 + 18 * i
        lx = WIDTH - MARGIN_RIGHT + 12
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(f'<text x="{lx + 28}" y="{ly}" font-size="11">{escape(label)}</text>')
    parts.append("</svg>")

    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text("\n".join(parts), encoding="utf-8")
    return output
