"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveflow import bem
from curveflow.cli import condition_table, main
from curveflow.flow import FlowConfig, area_accuracy, mean_radius, run
from curveflow.geometry import DiscreteCurve, circle, local_frames
from curveflow.image import to_pgm_bytes
from curveflow.scenarios import DISK_SCALE, START_RADIUS_PX, disk_scene
from curveflow.stability import StabilityInputs, eigen_bound


@pytest.fixture
def report(capsys):
    """Print one result line outside pytest's capture, then assert."""

    def emit(number, name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}: {detail}")
        assert ok, detail

    return emit


def test_c1_representation_residual(report):
    t0 = time.perf_counter()
    res = {}
    for n in (64, 128):
        c = circle(n=n)
        f = local_frames(c)
        r = bem.representation_residual(c, f, c.points[:, 0], f.normal[:, 0])
        res[n] = float(np.max(np.abs(r)))
    dt = time.perf_counter() - t0
    ok = res[64] <= 1e-2 and res[128] < res[64] and dt < 5
    report(1, "boundary identity for u=x", ok, f"N=64 {res[64]:.3e}, N=128 {res[128]:.3e}, {dt:.2f} s")


def test_c2_mcf_recovery(report):
    t0 = time.perf_counter()
    c = circle((0, 0), 2.0, 64)
    f = local_frames(c)
    sol = bem.solve_boundary(c, f, f.curvature, (), np.ones(64))
    err = float(np.max(np.abs(sol.v - 0.5)) / 0.5)
    dt = time.perf_counter() - t0
    report(2, "curvature recovered with no charges", err <= 0.02 and dt < 5, f"rel err {err:.3e}, {dt:.2f} s")


def test_c3_c4_circle_shrinking_and_redistribution(report):
    n = 64
    worst = {"radius": 0.0, "diff": 0.0, "sum": 0.0}
    checked = [0]

    def check(info):
        # criterion 4: both redistribution equations, every step
        tang = info.tangential
        ref = tang.length / n / tang.dt
        worst["diff"] = max(worst["diff"], float(np.max(np.abs(tang.residuals(info.curve)))) / ref)
        worst["sum"] = max(worst["sum"], abs(float(tang.a.sum())) / ref)
        # criterion 3: radius law after the step, while r >= 0.5
        r = mean_radius(info.new_curve)
        if r >= 0.5:
            t = (info.iteration + 1) * tang.dt
            worst["radius"] = max(worst["radius"], abs(r / math.sqrt(1 - 2 * t) - 1))
            checked[0] += 1

    t0 = time.perf_counter()
    steps = int(0.375 * n * n) + 4  # just past r = 0.5
    tr = run(circle(n=n), config=FlowConfig(n=n, max_iterations=steps), callback=check)
    dt = time.perf_counter() - t0
    ok3 = tr.reason == "max_iterations" and tr.final.radius < 0.5 and worst["radius"] <= 0.01 and dt < 30
    report(3, "circle shrinking law", ok3,
           f"max rel radius err {worst['radius']:.3e} over {checked[0]} steps, {dt:.2f} s")
    ok4 = worst["diff"] <= 1e-10 and worst["sum"] <= 1e-10
    report(4, "redistribution exactness", ok4,
           f"max rel residual {worst['diff']:.2e}, max rel sum {worst['sum']:.2e} over {tr.iterations} steps")


def test_c5_contour_matching(report):
    field, initial, charges = disk_scene(64)
    t0 = time.perf_counter()
    tr = run(initial, charges, field, FlowConfig(n=64, max_iterations=50_000))
    dt = time.perf_counter() - t0
    acc = area_accuracy(DiscreteCurve.unchecked(tr.final.points), field)
    frac = tr.final.matched_fraction
    ok = tr.reason == "matched" and frac >= 0.90 and acc >= 90.0 and tr.iterations <= 50_000 and dt < 300
    report(5, "disk fixture matching", ok,
           f"{tr.reason}, matched {frac:.3f}, area accuracy {acc:.2f}%, {tr.iterations} iterations, {dt:.2f} s")


def test_c6_conditioning_trend(report):
    R, n = 2.0, 64
    c = circle((0, 0), R, n)
    inradius = R * math.cos(math.pi / n)
    ray = np.array([math.cos(1.1), math.sin(1.1)])
    positions = [(-1.0, tuple(frac * inradius * ray)) for frac in (0.0, 0.3, 0.6, 0.85)]
    ratios = [row[6] for row in condition_table(c, positions)]
    ok = all(a <= b for a, b in zip(ratios, ratios[1:])) and ratios[-1] > 1
    report(6, "condition ratio grows toward the curve", ok, "ratios " + ", ".join(f"{r:.4f}" for r in ratios))


_c7_failures = []


@settings(max_examples=1000, deadline=None)
@given(
    st.floats(1e-6, 1e3),
    st.floats(1e-3, 1e3),
    st.integers(5, 4096),
    st.floats(1e-8, 1.0),
)
def _c7_property(v, L, n1, dt):
    b = [eigen_bound(StabilityInputs(v, L, n1, n2, dt)) for n2 in (32, 64, 128)]
    if not b[0] < b[1] < b[2]:
        _c7_failures.append((v, L, n1, dt, b))
    assert b[0] < b[1] < b[2]


def test_c7_stability_comparison(report):
    _c7_failures.clear()
    try:
        _c7_property()
        ok = True
    except AssertionError:
        ok = False
    report(7, "bound increases with N2 over 1000 random inputs", ok and not _c7_failures,
           f"{len(_c7_failures)} violations")


def _masked_motion(initial, charges, field):
    """Per iteration with both masked and free nodes: (iteration, worst masked move / limit, least free move)."""
    records = []

    def check(info):
        blocked = info.mask == 0.0
        free = ~blocked
        if not blocked.any() or not free.any():
            return
        disp = info.new_curve.points - info.curve.points
        normal_disp = np.abs(np.einsum("ij,ij->i", disp, info.frames.normal))
        limit = 1e-8 * info.tangential.length / len(info.curve)
        records.append((info.iteration, float(normal_disp[blocked].max()) / limit, float(normal_disp[free].min())))

    tr = run(initial, charges, field, FlowConfig(n=len(initial)), callback=check)
    return tr, records


def test_c8_anisotropy(report):
    field, initial, charges = disk_scene(64)
    # the centred start reaches the disk almost everywhere at once, so only a
    # couple of iterations have masked nodes; an off-centre start on the same
    # raster staggers the arrivals and supplies the ten sampled iterations
    _, centred = _masked_motion(initial, charges, field)
    tr, shifted = _masked_motion(circle((0.08, 0.05), START_RADIUS_PX * DISK_SCALE, 64), charges, field)
    idx = np.unique(np.linspace(0, len(shifted) - 1, 10).round().astype(int)) if shifted else []
    picks = [shifted[i] for i in idx]
    checked = centred + picks
    ok = (
        len(centred) > 0
        and len(picks) == 10
        and tr.reason == "matched"
        and all(ratio <= 1.0 and move > 0 for _, ratio, move in checked)
    )
    worst = max((r for _, r, _ in checked), default=math.nan)
    report(8, "masked nodes move only tangentially", ok,
           f"centred run {len(centred)} masked iterations (all checked), off-centre run {len(shifted)} "
           f"(10 sampled); worst masked normal move {worst:.2e} of the limit")


def test_c9_determinism(report, tmp_path):
    field, _, _ = disk_scene(64)
    img = tmp_path / "disk.pgm"
    img.write_bytes(to_pgm_bytes(field.values))
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        code = main(["evolve", "--image", str(img), "--scale", str(DISK_SCALE), "--circle", f"0,0,{START_RADIUS_PX * DISK_SCALE}",
                     "--n", "64", "--charge", "-1@0,0", "--out", str(out)])
        outs.append((code, (out / "summary.csv").read_bytes()))
    ok = outs[0][0] == outs[1][0] == 0 and outs[0][1] == outs[1][1]
    report(9, "byte-identical summary.csv", ok, f"exit codes {outs[0][0]}, {outs[1][0]}; {len(outs[0][1])} bytes each")
