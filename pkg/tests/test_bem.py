import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveflow import bem
from curveflow.errors import ChargeExited, ChargeTooClose, SingularEvaluation, SingularSystem
from curveflow.geometry import DiscreteCurve, circle, local_frames, perimeter


def frames_of(curve):
    return curve, local_frames(curve)


# --- kernels ------------------------------------------------------------------


def test_fundamental_solution_values():
    assert bem.fundamental_solution(1.0) == 0.0
    assert bem.fundamental_solution(math.exp(-1)) == pytest.approx(1 / (2 * math.pi))
    assert bem.fundamental_solution(2.0) < 0 < bem.fundamental_solution(0.5)
    for r in (0.0, -1.0):
        with pytest.raises(SingularEvaluation):
            bem.fundamental_solution(r)
    with pytest.raises(SingularEvaluation):
        bem.fundamental_solution(np.array([1.0, 0.0]))


def test_kernel_values():
    assert bem.kernel_dphi_dn((0, 0), (1, 0), (1, 0)) == pytest.approx(-1 / (2 * math.pi))
    assert bem.kernel_dphi_dn((0, 0), (1, 0), (0, 1)) == 0.0
    near = bem.kernel_dphi_dn((0, 0), (0.3, 0.4), (0.6, 0.8))
    far = bem.kernel_dphi_dn((0, 0), (0.6, 0.8), (0.6, 0.8))
    assert far == pytest.approx(near / 2)
    with pytest.raises(SingularEvaluation):
        bem.kernel_dphi_dn((1, 1), (1, 1), (1, 0))


def test_kernel_matches_finite_difference():
    x, y, n = np.array([0.2, -0.1]), np.array([1.1, 0.7]), np.array([0.6, 0.8])
    h = 1e-6
    fd = (
        bem.fundamental_solution(np.linalg.norm(x - (y + h * n)))
        - bem.fundamental_solution(np.linalg.norm(x - (y - h * n)))
    ) / (2 * h)
    assert bem.kernel_dphi_dn(x, y, n) == pytest.approx(fd, rel=1e-7)


# --- panels and assembly ----------------------------------------------------


def test_panel_quadrature_interior_and_weights():
    c, f = frames_of(circle((0, 0), 1.3, 24))
    p = bem.panel_discretization(c, f)
    assert np.all((bem.GAUSS_T > 0) & (bem.GAUSS_T < 1))
    chords = np.hypot(*(np.roll(c.points, -1, 0) - c.points).T)
    assert np.allclose(p.weights.sum(axis=1), chords, rtol=1e-12)
    # no quadrature point coincides with any node
    d = np.hypot(*(p.quad_points.reshape(-1, 1, 2) - c.points[None]).transpose(2, 0, 1))
    assert d.min() > 0
    assert np.allclose(np.hypot(*p.quad_normals.reshape(-1, 2).T), 1.0)


def test_constant_density_gives_zero_residual():
    c, f = frames_of(circle(n=64))
    for const in (1.0, -3.5):
        res = bem.representation_residual(c, f, np.full(64, const), np.zeros(64))
        assert np.max(np.abs(res)) <= 1e-2 * abs(const)


def test_linear_harmonic_residual_and_convergence():
    res = {}
    for n in (64, 128):
        c, f = frames_of(circle(n=n))
        u = c.points[:, 0]
        res[n] = np.max(np.abs(bem.representation_residual(c, f, u, f.normal[:, 0])))
    assert res[64] <= 1e-2
    assert res[128] < res[64]


def test_quadratic_harmonic_on_ellipse():
    t = np.linspace(0, 2 * np.pi, 96, endpoint=False)
    c = DiscreteCurve(np.column_stack([1.5 * np.cos(t), np.sin(t)]))
    f = local_frames(c)
    x, y = c.points.T
    u = x * x - y * y
    grad = np.column_stack([2 * x, -2 * y])
    dudn = np.einsum("ij,ij->i", grad, f.normal)
    assert np.max(np.abs(bem.representation_residual(c, f, u, dudn))) < 2e-2


# --- stage 1 ------------------------------------------------------------------


def test_stage1_zero_data():
    c, f = frames_of(DiscreteCurve(circle(n=40).points * [1.4, 0.9]))
    assert np.array_equal(bem.solve_stage1_boundary_potential(c, f, np.zeros(40)), np.zeros(40))


def test_stage1_constant_on_circle():
    c, f = frames_of(circle((0, 0), 2.0, 64))
    u = bem.solve_stage1_boundary_potential(c, f, np.full(64, 0.5))
    assert np.ptp(u) <= 1e-6 * abs(u.mean())


def test_stage1_self_convergence():
    means = []
    for n in (32, 64, 128, 256):
        c, f = frames_of(circle((0, 0), 2.0, n))
        means.append(bem.solve_stage1_boundary_potential(c, f, np.full(n, 0.5)).mean())
    steps = np.abs(np.diff(means))
    assert np.all(np.diff(steps) < 0)


def test_stage1_rejects_nonfinite():
    c, f = frames_of(circle(n=16))
    with pytest.raises(ValueError):
        bem.solve_stage1_boundary_potential(c, f, np.full(16, np.nan))


# --- stage 2 ------------------------------------------------------------------


@pytest.mark.parametrize("n", [64, 128])
def test_stage2_recovers_curvature(n):
    c, f = frames_of(circle((0, 0), 2.0, n))
    u = bem.solve_stage1_boundary_potential(c, f, f.curvature)
    v = bem.solve_stage2_normal_velocity(c, f, u, [], np.ones(n))
    assert np.max(np.abs(v - f.curvature)) / np.max(np.abs(f.curvature)) <= 0.02
    assert np.max(np.abs(v - 0.5)) / 0.5 <= 0.02


def test_stage2_recovers_curvature_on_ellipse():
    t = np.linspace(0, 2 * np.pi, 80, endpoint=False)
    c, f = frames_of(DiscreteCurve(np.column_stack([2.5 * np.cos(t), 1.5 * np.sin(t)])))
    sol = bem.solve_boundary(c, f, f.curvature)
    assert np.max(np.abs(sol.v - f.curvature)) / np.max(np.abs(f.curvature)) <= 0.02


def test_stage2_zero_data():
    c, f = frames_of(circle(n=32))
    v = bem.solve_stage2_normal_velocity(c, f, np.zeros(32), [], np.ones(32))
    assert np.max(np.abs(v)) < 1e-14


def test_center_charge_radius_eight():
    c, f = frames_of(circle((0, 0), 8.0, 64))
    sol = bem.solve_boundary(c, f, f.curvature, [(-1.0, (0.0, 0.0))])
    assert np.ptp(sol.v) <= 1e-6 * abs(sol.v.mean())
    assert np.all(np.abs(sol.v - f.curvature) > 0)
    # a negative charge adds inward speed: harmonic measure 1/(2 pi R) per unit strength
    assert sol.v.mean() - f.curvature.mean() == pytest.approx(1 / (2 * math.pi * 8), rel=0.02)


def test_masked_node_has_zero_velocity():
    c, f = frames_of(circle((0, 0), 2.0, 64))
    mask = np.ones(64)
    mask[10:20] = 0.0
    sol = bem.solve_boundary(c, f, f.curvature, [(-1.0, (0.1, 0.0))], mask, guard=1.0)
    assert np.max(np.abs(sol.v[10:20])) < 1e-12
    assert np.all(np.abs(sol.v[30:]) > 0.1)


def test_charge_guards():
    c, f = frames_of(circle((0, 0), 2.0, 64))
    with pytest.raises(ChargeExited):
        bem.solve_boundary(c, f, f.curvature, [(-1.0, (3.0, 0.0))], guard=1.0)
    limit = perimeter(c) / 64
    with pytest.raises(ChargeTooClose):
        bem.solve_boundary(c, f, f.curvature, [(-1.0, (2.0 - 0.5 * limit, 0.0))], guard=1.0)
    with pytest.raises(ChargeTooClose):
        # default guard is ten spacings, about 1.96 here
        bem.solve_boundary(c, f, f.curvature, [(-1.0, (1.0, 0.0))])
    bem.solve_boundary(c, f, f.curvature, [(-1.0, (0.0, 0.0))])
    assert issubclass(ChargeTooClose, ChargeExited)


@settings(max_examples=25, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-0.4, 0.4), st.floats(-0.3, 0.3))
def test_rotation_equivariance(angle, px, py):
    t = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    base = np.column_stack([2.6 * np.cos(t), 1.6 * np.sin(t)])
    R = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    p = np.array([px, py])
    out = []
    for pts, q in ((base, p), (base @ R.T, R @ p)):
        c, f = frames_of(DiscreteCurve(pts))
        out.append(bem.solve_boundary(c, f, f.curvature, [(-1.0, q)], guard=1.0))
    assert np.max(np.abs(out[0].u - out[1].u)) < 1e-8
    assert np.max(np.abs(out[0].v - out[1].v)) < 1e-8


def test_boundary_solution_keeps_systems():
    c, f = frames_of(circle((0, 0), 2.0, 32))
    sol = bem.solve_boundary(c, f, f.curvature, [(-1.0, (0.0, 0.0))], guard=1.0)
    assert sol.stage1_matrix.shape == sol.stage2_matrix.shape == (32, 32)
    assert np.allclose(sol.stage1_matrix @ sol.u, sol.stage1_rhs)
    assert sol.charge_columns.shape == (32, 1)
    assert np.all(np.isfinite(sol.v))


def test_singular_system_reported():
    with pytest.raises(SingularSystem):
        bem.solve_dense(np.zeros((3, 3)), np.ones(3))


# --- conditioning -------------------------------------------------------------


def test_condition_examples():
    assert bem.condition_inf(np.eye(7)).condition == pytest.approx(1.0)
    assert bem.condition_inf(np.diag([2.0, 1.0])).condition == pytest.approx(2.0)
    A = np.array([[1.0, 0.99], [0.99, 1.0]])
    det = 1 - 0.99**2
    inv = np.array([[1.0, -0.99], [-0.99, 1.0]]) / det
    expected = 1.99 * np.abs(inv).sum(axis=1).max()
    rep = bem.condition_inf(A)
    assert rep.condition == pytest.approx(expected, rel=1e-12)
    assert rep.condition == pytest.approx(199.0, rel=1e-9)
    assert rep.norm_inf == pytest.approx(1.99)


def test_condition_errors():
    with pytest.raises(SingularSystem):
        bem.condition_inf(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(ValueError):
        bem.condition_inf(np.ones((2, 3)))
    with pytest.raises(ValueError):
        bem.condition_inf(np.eye(bem.MAX_CONDITION_N + 1))


def test_condition_grows_as_charge_nears_curve():
    R = 2.0
    c, f = frames_of(circle((0, 0), R, 64))
    S, _ = bem.assemble_layers(c, f)
    conds = []
    for frac in (0.0, 0.3, 0.6, 0.85):
        cols = bem.charge_columns(c, [(-1.0, (frac * R * math.cos(0.3), frac * R * math.sin(0.3)))])
        conds.append(bem.condition_inf(bem.stage2_condition_matrix(-S, cols)).condition)
    assert all(a <= b for a, b in zip(conds, conds[1:]))
    assert conds[-1] > conds[0]


def test_stage1_matrix_well_conditioned():
    c, f = frames_of(circle((0, 0), 2.0, 64))
    _, D = bem.assemble_layers(c, f)
    assert bem.condition_inf(bem.stage1_matrix(D)).condition < 10
