"""Trace serialization: snapshot CSVs, summary table, SVG and PGM overlays."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .flow import FlowTrace
from .image import PixelField, burn_points, to_pgm_bytes

SUMMARY_FIELDS = (
    "iteration",
    "time",
    "matched_fraction",
    "area",
    "radius",
    "max_v",
    "cond_stage1",
    "cond_stage2",
)


def fmt(x) -> str:
    """Round-trip decimal text for numbers."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_snapshots(trace: FlowTrace, directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for snap in trace.snapshots:
        path = directory / f"iter_{snap.iteration:06d}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("iteration", "x", "y"))
            for x, y in snap.points.tolist():
                w.writerow((snap.iteration, fmt(x), fmt(y)))
        paths.append(path)
    return paths


def write_summary(trace: FlowTrace, path, stability: bool = False) -> None:
    fields = SUMMARY_FIELDS + (("stability_bound",) if stability else ())
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for snap in trace.snapshots:
            w.writerow([fmt(getattr(snap, name)) for name in fields])


def _gradient(i: int, count: int) -> str:
    s = 0.0 if count <= 1 else i / (count - 1)
    r, g = round(255 * (1.0 - s)), round(255 * s)
    return f"#{r:02x}{g:02x}00"


def svg_document(curves, margin: float = 0.05) -> str:
    """Closed paths coloured red to green in the given order; world y points up."""
    curves = [np.asarray(c, dtype=float) for c in curves]
    allpts = np.vstack(curves)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = margin * span
    x0, y1 = lo[0] - pad, hi[1] + pad
    size = span + 2 * pad
    stroke = size / 400.0
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {fmt(size)} {fmt(size)}" width="600" height="600">'
    ]
    for i, pts in enumerate(curves):
        d = " ".join(f"{fmt(x - x0)},{fmt(y1 - y)}" for x, y in pts.tolist())
        parts.append(
            f'<path d="M {d} Z" fill="none" stroke="{_gradient(i, len(curves))}" '
            f'stroke-width="{fmt(stroke)}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(trace: FlowTrace, path, every: int = 1) -> None:
    snaps = trace.snapshots[::every]
    if snaps[-1] is not trace.final:
        snaps.append(trace.final)
    Path(path).write_text(svg_document([s.points for s in snaps]))


def write_overlay(trace: FlowTrace, field: PixelField, path) -> None:
    burned = burn_points(field, trace.final.points)
    Path(path).write_bytes(to_pgm_bytes(burned))


def write_matrix_csv(path, matrix) -> None:
    arr = np.atleast_2d(np.asarray(matrix, dtype=float))
    if arr.shape[0] == 1 and np.ndim(matrix) == 1:
        arr = arr.T
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in arr.tolist():
            w.writerow([fmt(v) for v in row])


def write_trace(trace: FlowTrace, out_dir, field=None, stability: bool = False) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_snapshots(trace, out / "snapshots")
    write_summary(trace, out / "summary.csv", stability=stability)
    write_svg(trace, out / "final.svg")
    if field is not None:
        write_overlay(trace, field, out / "overlay.pgm")

