"""Deterministic writers for JSON reports, CSV tables and SVG scatter plots."""

from __future__ import annotations

import json
import math

import numpy as np

SVG_SIZE = 1000


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(report):
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def write_json(path, report):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(report))


def complex_columns(n):
    return [f"{part}_z{i + 1}" for i in range(n) for part in ("re", "im")]


def write_csv(path, header, rows):
    """Header row then one line per row, reals at 17 significant digits."""
    rows = np.asarray(rows, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, rows, fmt="%.17g", delimiter=",")


def interleave(points):
    """(N, n) complex to (N, 2n) real columns re z1, im z1, re z2, ..."""
    P = np.asarray(points, dtype=complex)
    return np.stack([P.real, P.imag], axis=-1).reshape(P.shape[0], -1)


def write_points_csv(path, points):
    P = np.asarray(points, dtype=complex)
    write_csv(path, complex_columns(P.shape[1]), interleave(P))


def svg_scatter(z, radius, size=SVG_SIZE):
    """Self-contained SVG of complex points z in the square [-radius, radius]^2."""
    z = np.asarray(z, dtype=complex).ravel()
    scale = size / (2.0 * radius)
    px = (z.real + radius) * scale
    py = (radius - z.imag) * scale
    keep = (px >= 0) & (px <= size) & (py >= 0) & (py <= size)
    dots = "".join(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1"/>' for x, y in zip(px[keep], py[keep]))
    c = size / 2
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
        f'<rect width="{size}" height="{size}" fill="white"/>'
        f'<line x1="0" y1="{c}" x2="{size}" y2="{c}" stroke="#ccc"/>'
        f'<line x1="{c}" y1="0" x2="{c}" y2="{size}" stroke="#ccc"/>'
        f'<g fill="black" fill-opacity="0.6">{dots}</g></svg>\n'
    )


def write_svg(path, z, radius):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg_scatter(z, radius))
