"""Collocation boundary-element solver for the two-stage potential problem.

Densities are piecewise linear on the chords of the polyline and every panel
integral uses the 3-point Gauss-Legendre rule.  The Gauss abscissae never
touch a panel endpoint, so the log and 1/r kernels are never evaluated at
distance zero.

Sign convention (kept in :func:`assemble_layers` and the two stage solvers
only): with ``S`` the single-layer matrix, ``D`` the double-layer matrix
built with the inward node normals, and ``m`` the per-node mask,

    stage 1:   (D + I/2) u = -S (m * kappa)
    stage 2:   -S q        = sum_i c_i Phi(x - p_i) + (D + I/2) u

and the node velocity keeps the boundary part of ``q`` plus ``m`` times its
charge part.  With no charges the two stages give ``q = m * kappa`` exactly.  The charge
term carries the sign it has for outward normals, flipped here because ``q``
is measured along the inward normal: a negative charge pulls the curve
toward itself, and with ``m = 1`` the speed becomes ``kappa - c * w`` where
``w`` is the (positive) harmonic measure density of the charge point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ChargeExited, ChargeTooClose, SingularEvaluation, SingularSystem
from .geometry import DiscreteCurve, LocalFrames, perimeter, point_in_polygon

_GL_X, _GL_W = np.polynomial.legendre.leggauss(3)
GAUSS_T = 0.5 * (_GL_X + 1.0)  # abscissae on (0, 1)
GAUSS_W = 0.5 * _GL_W  # weights summing to 1

MAX_CONDITION_N = 512
PIVOT_TOL = 1e-14
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class PanelDiscretization:
    collocation: np.ndarray  # (N, 2)
    quad_points: np.ndarray  # (N, 3, 2); panel k joins node k and k+1
    quad_normals: np.ndarray  # (N, 3, 2), unit
    weights: np.ndarray  # (N, 3); rows sum to the chord length
    basis: np.ndarray  # (3,) weight of node k+1 at each abscissa


@dataclass(frozen=True, eq=False)
class ConditionReport:
    norm_inf: float
    norm_inv_inf: float
    condition: float


@dataclass(eq=False)
class BoundarySolution:
    u: np.ndarray
    v: np.ndarray
    stage1_matrix: np.ndarray = field(repr=False, default=None)
    stage1_rhs: np.ndarray = field(repr=False, default=None)
    stage2_matrix: np.ndarray = field(repr=False, default=None)
    stage2_rhs: np.ndarray = field(repr=False, default=None)
    charge_columns: np.ndarray = field(repr=False, default=None)


def fundamental_solution(r):
    """Laplace free-space kernel ``log(1/r) / (2 pi)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise SingularEvaluation("fundamental solution evaluated at r <= 0")
    out = -np.log(r) / TWO_PI
    return float(out) if out.ndim == 0 else out


def kernel_dphi_dn(x, y, n_y):
    """Derivative of ``Phi(x - y)`` along ``n_y`` taken at ``y``.

    Works on broadcastable arrays whose last axis has length 2.
    """
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r2 = np.sum(diff * diff, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularEvaluation("double-layer kernel evaluated at x == y")
    out = np.sum(diff * np.asarray(n_y, dtype=float), axis=-1) / (TWO_PI * r2)
    return float(out) if np.ndim(out) == 0 else out


def panel_discretization(curve: DiscreteCurve, frames: LocalFrames) -> PanelDiscretization:
    pts = curve.points
    nxt = np.roll(pts, -1, axis=0)
    n0 = frames.normal
    n1 = np.roll(n0, -1, axis=0)
    t = GAUSS_T[None, :, None]

    qp = pts[:, None, :] + t * (nxt - pts)[:, None, :]
    qn = (1.0 - t) * n0[:, None, :] + t * n1[:, None, :]
    qn /= np.linalg.norm(qn, axis=-1, keepdims=True)
    chord = np.hypot(*(nxt - pts).T)
    weights = chord[:, None] * GAUSS_W[None, :]
    return PanelDiscretization(pts, qp, qn, weights, GAUSS_T.copy())


def assemble_layers(curve: DiscreteCurve, frames: LocalFrames, panels: PanelDiscretization = None):
    """Return the single-layer and double-layer collocation matrices ``(S, D)``.

    ``S[j, k]`` integrates ``Phi(x_j - y)`` against the hat function of node k;
    ``D[j, k]`` does the same for ``dPhi/dn_y`` with the inward normal.  The
    diagonal of ``D`` is then reset so that every row sums to 1/2, which is
    the value the double layer of a constant density takes on a smooth
    boundary; this replaces the inaccurate quadrature near the corner at x_j.
    """
    if panels is None:
        panels = panel_discretization(curve, frames)
    x = panels.collocation
    n = len(x)
    S = np.zeros((n, n))
    D = np.zeros((n, n))
    own = np.arange(n)
    nxt = np.roll(own, -1)

    for g, tg in enumerate(panels.basis):
        y = panels.quad_points[:, g, :]
        ny = panels.quad_normals[:, g, :]
        diff = x[:, None, :] - y[None, :, :]
        r2 = np.einsum("jkc,jkc->jk", diff, diff)
        if np.any(r2 == 0.0):
            raise SingularEvaluation("quadrature node coincides with a collocation node")
        phi = -np.log(r2) / (2.0 * TWO_PI)
        dphi = np.einsum("jkc,kc->jk", diff, ny) / (TWO_PI * r2)
        w = panels.weights[:, g][None, :]
        S[:, own] += phi * w * (1.0 - tg)
        S[:, nxt] += phi * w * tg
        D[:, own] += dphi * w * (1.0 - tg)
        D[:, nxt] += dphi * w * tg

    D[own, own] += 0.5 - D.sum(axis=1)
    return S, D


def solve_dense(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-pivoted LU solve that refuses near-zero pivots."""
    A = np.asarray(A, dtype=float)
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0 or not np.all(np.isfinite(A)):
        raise SingularSystem("matrix is zero or non-finite")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < PIVOT_TOL * scale:
        raise SingularSystem(f"pivot {np.min(pivots):.3e} below {PIVOT_TOL:g} of matrix scale {scale:.3e}")
    x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("solution is not finite")
    return x


def stage1_matrix(D: np.ndarray) -> np.ndarray:
    return D + 0.5 * np.eye(len(D))


def solve_stage1_boundary_potential(curve, frames, kappa_masked, layers=None):
    """Boundary potential ``u`` from the Neumann data ``kappa_masked``."""
    kappa_masked = np.asarray(kappa_masked, dtype=float)
    if not np.all(np.isfinite(kappa_masked)):
        raise ValueError("curvature values must be finite")
    S, D = layers if layers is not None else assemble_layers(curve, frames)
    return solve_dense(stage1_matrix(D), -S @ kappa_masked)


def charge_columns(curve: DiscreteCurve, charges, mask=None) -> np.ndarray:
    """Per-node, per-charge columns ``c_i * Phi(x_j - p_i)`` (times ``mask_j`` if given), shape (N, k)."""
    pts = curve.points
    charges = list(charges)
    cols = np.zeros((len(pts), len(charges)))
    for i, (c, p) in enumerate(charges):
        r = np.hypot(*(pts - np.asarray(p, dtype=float)).T)
        cols[:, i] = c * fundamental_solution(r)
    if mask is not None:
        cols *= np.asarray(mask, dtype=float)[:, None]
    return cols


def check_charges(curve: DiscreteCurve, charges, guard: float) -> None:
    """Raise unless every charge is strictly inside and farther than ``guard * l/N`` from all nodes."""
    limit = guard * perimeter(curve) / len(curve)
    for c, p in charges:
        p = np.asarray(p, dtype=float)
        if not point_in_polygon(curve, p):
            raise ChargeExited(f"charge {c:g} at {tuple(p.tolist())} is not inside the curve")
        dmin = float(np.min(np.hypot(*(curve.points - p).T)))
        if dmin <= limit:
            raise ChargeTooClose(
                f"charge at {tuple(p.tolist())} is {dmin:.4g} from the curve, guard is {limit:.4g}"
            )


def _stage2(S, A1, u, cols, mask):
    """Solve the stage-2 system once for the boundary data and once for the charges.

    The charge-driven part of the velocity is scaled by the node mask, so a
    node on a black pixel receives no charge forcing at all.  Scaling the
    charge rows instead would not do that: the inverse of the first-kind
    matrix spreads a masked row onto its neighbours.
    """
    rhs = np.column_stack([A1 @ np.asarray(u, dtype=float), cols.sum(axis=1)])
    sol = solve_dense(-S, rhs)
    v = sol[:, 0] + mask * sol[:, 1]
    return v, rhs[:, 0] + rhs[:, 1]


def solve_stage2_normal_velocity(curve, frames, u, charges, mask, guard=10.0, layers=None):
    """Normal velocities ``v = dU/dn`` at the nodes, given stage-1 ``u``."""
    charges = list(charges)
    check_charges(curve, charges, guard)
    S, D = layers if layers is not None else assemble_layers(curve, frames)
    cols = charge_columns(curve, charges)
    v, _ = _stage2(S, stage1_matrix(D), u, cols, np.asarray(mask, dtype=float))
    return v


def solve_boundary(curve, frames, kappa, charges=(), mask=None, guard=10.0) -> BoundarySolution:
    """Run both stages on one assembly and keep the systems for inspection."""
    n = len(curve)
    mask = np.ones(n) if mask is None else np.asarray(mask, dtype=float)
    charges = list(charges)
    check_charges(curve, charges, guard)
    S, D = assemble_layers(curve, frames)
    A1 = stage1_matrix(D)
    b1 = -S @ (mask * np.asarray(kappa, dtype=float))
    u = solve_dense(A1, b1)
    cols = charge_columns(curve, charges)
    v, b2 = _stage2(S, A1, u, cols, mask)
    return BoundarySolution(u, v, A1, b1, -S, b2, cols)


def stage2_condition_matrix(stage2_matrix: np.ndarray, columns: np.ndarray) -> np.ndarray:
    """Border the stage-2 matrix with the charge columns.

    The charge strengths become extra unknowns pinned by identity rows, so
    the potential of each charge at the nodes sits inside the matrix whose
    conditioning is reported.
    """
    n = len(stage2_matrix)
    k = columns.shape[1]
    A = np.zeros((n + k, n + k))
    A[:n, :n] = stage2_matrix
    A[:n, n:] = columns
    A[n:, n:] = np.eye(k)
    return A


def condition_inf(matrix) -> ConditionReport:
    """Infinity-norm condition number by explicit inversion."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_CONDITION_N:
        raise ValueError(f"explicit inversion limited to N <= {MAX_CONDITION_N}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        inv = scipy.linalg.inv(A, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(inv)):
        raise SingularSystem("inverse is not finite")
    norm = float(np.max(np.sum(np.abs(A), axis=1)))
    norm_inv = float(np.max(np.sum(np.abs(inv), axis=1)))
    return ConditionReport(norm, norm_inv, norm * norm_inv)


def representation_residual(curve, frames, u_exact, dudn_exact) -> np.ndarray:
    """Per-node defect of the discrete Green identity for a harmonic function.

    ``dudn_exact`` is the derivative along the inward node normals; the
    identity checked is ``D u - S dudn - u/2 = 0``.
    """
    S, D = assemble_layers(curve, frames)
    u = np.asarray(u_exact, dtype=float)
    q = np.asarray(dudn_exact, dtype=float)
    return D @ u - S @ q - 0.5 * u
