"""Minimal deterministic SVG output: colored scatter panels and grid heatmaps.

Hand-rolled so identical inputs produce identical bytes; the only
version-dependent content is the generator comment in the header.
"""

import numpy as np

from . import __version__

CELL = 240.0
PAD = 36.0


def _color(v):
    """Blue-white-red map over [-1, 1]."""
    v = max(-1.0, min(1.0, float(v)))
    if v >= 0.0:
        r, g, b = 255, int(round(255 * (1 - v))), int(round(255 * (1 - v)))
    else:
        r, g, b = int(round(255 * (1 + v))), int(round(255 * (1 + v))), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def _header(width, height):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">\n'
        f"<!-- generator: ssl-kernel {__version__} -->\n"
        '<rect width="100%" height="100%" fill="white"/>\n'
    )


def scatter_panels(points, panels, path):
    """Grid of scatter plots of the same 2D points under different colorings.

    panels is a list of rows; each row is a list of (title, values, anchor)
    where values color the points (normalized by max |value| per panel) and
    anchor is an optional point index to mark.
    """
    points = np.asarray(points, dtype=np.float64)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)

    def place(p, row, col):
        x = PAD + col * (CELL + PAD) + (p[0] - lo[0]) / span[0] * CELL
        y = PAD + row * (CELL + PAD) + (1.0 - (p[1] - lo[1]) / span[1]) * CELL
        return x, y

    n_rows = len(panels)
    n_cols = max(len(row) for row in panels)
    width = n_cols * (CELL + PAD) + PAD
    height = n_rows * (CELL + PAD) + PAD
    parts = [_header(width, height)]
    for r, row in enumerate(panels):
        for c, (title, values, anchor) in enumerate(row):
            values = np.asarray(values, dtype=np.float64)
            scale = max(np.max(np.abs(values)), 1e-12)
            x0 = PAD + c * (CELL + PAD)
            y0 = PAD + r * (CELL + PAD)
            parts.append(
                f'<text x="{x0:.1f}" y="{y0 - 8:.1f}" font-family="monospace" '
                f'font-size="12">{title}</text>\n'
            )
            parts.append(
                f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{CELL:.0f}" '
                f'height="{CELL:.0f}" fill="none" stroke="#cccccc"/>\n'
            )
            for i, p in enumerate(points):
                x, y = place(p, r, c)
                parts.append(
                    f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.6" '
                    f'fill="{_color(values[i] / scale)}"/>\n'
                )
            if anchor is not None:
                x, y = place(points[anchor], r, c)
                parts.append(
                    f'<path d="M {x - 5:.2f} {y - 5:.2f} L {x + 5:.2f} {y + 5:.2f} '
                    f'M {x - 5:.2f} {y + 5:.2f} L {x + 5:.2f} {y - 5:.2f}" '
                    'stroke="black" stroke-width="1.6" fill="none"/>\n'
                )
    parts.append("</svg>\n")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("".join(parts))


def grid_heatmap(values, row_labels, col_labels, title, path):
    """Matrix heatmap with row/column labels, normalized by max |value|."""
    values = np.asarray(values, dtype=np.float64)
    n_rows, n_cols = values.shape
    cell = 44.0
    left = 110.0
    top = 60.0
    width = left + n_cols * cell + PAD
    height = top + n_rows * cell + PAD
    scale = max(np.max(np.abs(values)), 1e-12)
    parts = [_header(width, height)]
    parts.append(
        f'<text x="{left:.1f}" y="24" font-family="monospace" font-size="13">'
        f"{title}</text>\n"
    )
    for j, lab in enumerate(col_labels):
        parts.append(
            f'<text x="{left + j * cell + cell / 2:.1f}" y="{top - 8:.1f}" '
            'font-family="monospace" font-size="10" text-anchor="middle">'
            f"{lab}</text>\n"
        )
    for i, lab in enumerate(row_labels):
        parts.append(
            f'<text x="{left - 6:.1f}" y="{top + i * cell + cell / 2 + 4:.1f}" '
            'font-family="monospace" font-size="10" text-anchor="end">'
            f"{lab}</text>\n"
        )
        for j in range(n_cols):
            parts.append(
                f'<rect x="{left + j * cell:.1f}" y="{top + i * cell:.1f}" '
                f'width="{cell:.0f}" height="{cell:.0f}" '
                f'fill="{_color(values[i, j] / scale)}" stroke="#888888"/>\n'
            )
            parts.append(
                f'<text x="{left + j * cell + cell / 2:.1f}" '
                f'y="{top + i * cell + cell / 2 + 4:.1f}" font-family="monospace" '
                f'font-size="9" text-anchor="middle">{values[i, j]:.3g}</text>\n'
            )
    parts.append("</svg>\n")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("".join(parts))
