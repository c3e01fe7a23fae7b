"""Closed polyline representation and the geometric estimators used by the flow.

Points are stored counterclockwise, so the normal ``J @ T`` (tangent rotated
by +90 degrees) points into the enclosed region and a convex curve has
positive curvature.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateStencil, InvalidCurve

MIN_POINTS = 5
STENCIL = (-2, -1, 1, 2)


def _shoelace(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """Ordered closed polyline of ``N`` world-space points.

    The constructor validates the point set and silently reverses clockwise
    input. Use :meth:`unchecked` for curves produced inside a time loop, where
    reorienting would corrupt the node correspondence.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidCurve(f"expected an (N, 2) array, got shape {pts.shape}")
        if len(pts) < MIN_POINTS:
            raise InvalidCurve(f"need at least {MIN_POINTS} points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise InvalidCurve("non-finite coordinates")
        if np.any(segment_lengths(pts) == 0.0):
            raise InvalidCurve("consecutive points coincide")
        area = _shoelace(pts)
        if area == 0.0:
            raise InvalidCurve("curve encloses zero area")
        if area < 0.0:
            pts = pts[::-1].copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def unchecked(cls, points: np.ndarray) -> "DiscreteCurve":
        obj = object.__new__(cls)
        pts = np.array(points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(obj, "points", pts)
        return obj

    def __len__(self):
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class LocalFrames:
    tangent: np.ndarray  # (N, 2), unit
    normal: np.ndarray  # (N, 2), unit, inward for CCW curves
    curvature: np.ndarray  # (N,)
    curvature_vector: np.ndarray  # (N, 2)
    distances: dict  # offset i -> (N,) distances from node j to node j+i
    chords: dict  # offset -> (N, 2) array of signed unit chord directions


@dataclass(frozen=True, eq=False)
class TangentialCoefficients:
    a: np.ndarray
    length: float
    dt: float

    def residuals(self, curve: DiscreteCurve) -> np.ndarray:
        """Residuals of ``a[j+1] - a[j] = (length/N - d[j]) / dt``."""
        d = segment_lengths(curve.points)
        lhs = np.roll(self.a, -1) - self.a
        rhs = (self.length / len(d) - d) / self.dt
        return lhs - rhs


def segment_lengths(points: np.ndarray) -> np.ndarray:
    """``d[j] = |phi[j+1] - phi[j]|`` with cyclic wrap."""
    pts = np.asarray(points, dtype=float)
    return np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)


def perimeter(curve: DiscreteCurve) -> float:
    return float(np.sum(segment_lengths(curve.points)))


def enclosed_area(curve: DiscreteCurve) -> float:
    """Signed shoelace area; positive for the counterclockwise curves we store."""
    return _shoelace(curve.points)


def centroid(curve: DiscreteCurve) -> np.ndarray:
    return curve.points.mean(axis=0)


def rotate90(v: np.ndarray) -> np.ndarray:
    """Apply J = [[0, -1], [1, 0]] row-wise."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def local_frames(curve: DiscreteCurve, mu: float = 0.15) -> LocalFrames:
    """Five-point tangents, normals and blended curvature at every node.

    The curvature vector mixes the nearest-neighbour and second-neighbour
    estimates with weight ``mu``; the scalar curvature is its projection on
    the (inward) normal.
    """
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    pts = curve.points
    if len(pts) < MIN_POINTS:
        raise DegenerateStencil(f"stencil needs {MIN_POINTS} points, got {len(pts)}")

    dist, tau = {}, {}
    for i in STENCIL:
        diff = np.roll(pts, -i, axis=0) - pts
        d = np.hypot(diff[:, 0], diff[:, 1])
        if np.any(d == 0.0):
            j = int(np.flatnonzero(d == 0.0)[0])
            raise DegenerateStencil(f"node {j} coincides with node {(j + i) % len(pts)}")
        dist[i] = d
        tau[i] = np.sign(i) * diff / d[:, None]

    raw = (-tau[2] + 4.0 * tau[1] + 4.0 * tau[-1] - tau[-2]) / 6.0
    norm = np.hypot(raw[:, 0], raw[:, 1])
    if np.any(norm == 0.0):
        raise DegenerateStencil("tangent stencil cancels (cusp)")
    tangent = raw / norm[:, None]
    normal = rotate90(tangent)

    k_near = 2.0 * (tau[1] - tau[-1]) / (dist[1] + dist[-1])[:, None]
    k_far = 2.0 * (tau[2] - tau[-2]) / (dist[2] + dist[-2])[:, None]
    kvec = mu * k_near + (1.0 - mu) * k_far
    kappa = np.einsum("ij,ij->i", kvec, normal)

    return LocalFrames(tangent, normal, kappa, kvec, dist, tau)


def tangential_coefficients(curve: DiscreteCurve, dt: float) -> TangentialCoefficients:
    """Tangential speeds that pull every segment to length ``l/N`` in one step.

    Solves the cyclic system a[j+1] - a[j] = (l/N - d[j]) / dt with sum(a) = 0
    by a cumulative sum followed by mean removal.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    d = segment_lengths(curve.points)
    n = len(d)
    length = float(d.sum())
    rhs = (length / n - d) / dt
    a = np.concatenate([[0.0], np.cumsum(rhs[:-1])])
    a -= a.mean()
    return TangentialCoefficients(a, length, dt)


def point_in_polygon(curve: DiscreteCurve, p, edge_tol: float = 1e-12) -> bool:
    """Even-odd ray test; points within ``edge_tol`` of an edge are outside."""
    pts = curve.points
    px, py = float(p[0]), float(p[1])
    a = pts
    b = np.roll(pts, -1, axis=0)

    ab = b - a
    ap = np.array([px, py]) - a
    seg2 = np.einsum("ij,ij->i", ab, ab)
    s = np.clip(np.einsum("ij,ij->i", ap, ab) / seg2, 0.0, 1.0)
    closest = a + s[:, None] * ab
    if np.min(np.hypot(*(closest - [px, py]).T)) <= edge_tol:
        return False

    ya, yb = a[:, 1], b[:, 1]
    crosses = (ya > py) != (yb > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_at = a[:, 0] + (py - ya) * ab[:, 0] / ab[:, 1]
    hits = np.count_nonzero(crosses & (x_at > px))
    return bool(hits % 2)


def resample_uniform(curve: DiscreteCurve, n: int) -> DiscreteCurve:
    """Resample the polyline at ``n`` points equally spaced in arc length."""
    pts = curve.points
    closed = np.vstack([pts, pts[:1]])
    s = np.concatenate([[0.0], np.cumsum(segment_lengths(pts))])
    targets = np.linspace(0.0, s[-1], n, endpoint=False)
    x = np.interp(targets, s, closed[:, 0])
    y = np.interp(targets, s, closed[:, 1])
    return DiscreteCurve(np.column_stack([x, y]))


def circle(center=(0.0, 0.0), radius: float = 1.0, n: int = 64) -> DiscreteCurve:
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)])
    return DiscreteCurve(pts)


def read_curve_csv(path) -> DiscreteCurve:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            x, y = (float(v) for v in line.split(","))
        except ValueError as exc:
            raise InvalidCurve(f"{path}:{lineno}: expected 'x,y', got {line!r}") from exc
        rows.append((x, y))
    return DiscreteCurve(np.array(rows, dtype=float).reshape(-1, 2))


def write_curve_csv(path, curve: DiscreteCurve) -> None:
    lines = [f"{x!r},{y!r}" for x, y in curve.points.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")
