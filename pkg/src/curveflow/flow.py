"""Explicit curve update and the contour-parametrization loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import bem
from .errors import (
    BlowUp,
    ChargeExited,
    CurveFlowError,
    DegenerateStencil,
    SingularEvaluation,
    SingularSystem,
)
from .geometry import (
    DiscreteCurve,
    LocalFrames,
    TangentialCoefficients,
    centroid,
    enclosed_area,
    local_frames,
    perimeter,
    tangential_coefficients,
)
from .image import PixelField, mask_values, pix_values
from .stability import StabilityInputs, eigen_bound

log = logging.getLogger(__name__)

REASONS = ("matched", "max_iterations", "charge_exited", "blow_up", "singular_system")
CLAMPS = (None, "min0", "max0")


@dataclass(frozen=True)
class ChargeSet:
    """Point charges ``(strength, position)``; may be empty."""

    strengths: tuple = ()
    positions: tuple = ()

    def __post_init__(self):
        s = tuple(float(c) for c in self.strengths)
        p = tuple((float(x), float(y)) for x, y in self.positions)
        if len(s) != len(p):
            raise ValueError("strengths and positions differ in length")
        if not all(math.isfinite(v) for v in s + tuple(c for xy in p for c in xy)):
            raise ValueError("charges must be finite")
        object.__setattr__(self, "strengths", s)
        object.__setattr__(self, "positions", p)

    @classmethod
    def of(cls, *pairs):
        """``ChargeSet.of((c, (x, y)), ...)``"""
        return cls(tuple(c for c, _ in pairs), tuple(p for _, p in pairs))

    def __iter__(self):
        return iter(zip(self.strengths, self.positions))

    def __len__(self):
        return len(self.strengths)


@dataclass
class FlowConfig:
    n: int = 64
    dt: Optional[float] = None  # defaults to 1/n^2
    mu: float = 0.15
    match_threshold: float = 0.90
    max_iterations: int = 50_000
    pixel_black_cutoff: float = 0.0
    trace_every: int = 100
    clamp: Optional[str] = None
    charge_guard: float = 1.0
    stability: bool = False
    conditioning: bool = True

    def __post_init__(self):
        if self.dt is None:
            self.dt = 1.0 / (self.n * self.n)
        if self.n < 5:
            raise ValueError(f"n must be >= 5, got {self.n}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if not 0.0 < self.match_threshold <= 1.0:
            raise ValueError(f"match_threshold must lie in (0, 1], got {self.match_threshold}")
        if self.max_iterations < 0 or self.trace_every < 1:
            raise ValueError("max_iterations must be >= 0 and trace_every >= 1")
        if self.clamp not in CLAMPS:
            raise ValueError(f"clamp must be one of {CLAMPS}, got {self.clamp!r}")


@dataclass
class Snapshot:
    iteration: int
    time: float
    points: np.ndarray
    matched_fraction: float
    area: float
    radius: float
    max_v: float = math.nan
    cond_stage1: float = math.nan
    cond_stage2: float = math.nan
    stability_bound: float = math.nan


@dataclass
class FlowTrace:
    config: FlowConfig
    snapshots: list = field(default_factory=list)
    reason: Optional[str] = None
    error: Optional[CurveFlowError] = None
    iterations: int = 0

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def add(self, snap: Snapshot) -> None:
        if self.snapshots and snap.iteration <= self.snapshots[-1].iteration:
            return
        self.snapshots.append(snap)


@dataclass(frozen=True, eq=False)
class StepInfo:
    """What the loop computed during one iteration, passed to ``callback``."""

    iteration: int
    curve: DiscreteCurve
    frames: LocalFrames
    tangential: TangentialCoefficients
    v: np.ndarray
    mask: np.ndarray
    new_curve: DiscreteCurve


def step(curve: DiscreteCurve, frames: LocalFrames, a, v, dt: float) -> DiscreteCurve:
    """Move each node by dt (a T + v n); raises BlowUp on a jump above half the length."""
    a = a.a if isinstance(a, TangentialCoefficients) else np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (len(a) == len(v) == len(curve)):
        raise ValueError("a, v and the curve must share the same N")
    disp = dt * (a[:, None] * frames.tangent + v[:, None] * frames.normal)
    jump = np.hypot(disp[:, 0], disp[:, 1])
    limit = 0.5 * perimeter(curve)
    if not np.all(np.isfinite(disp)) or np.any(jump > limit):
        j = int(np.nanargmax(np.where(np.isfinite(jump), jump, np.inf)))
        raise BlowUp(f"node {j} moved {jump[j]:.4g}, more than half the curve length {limit:.4g}")
    return DiscreteCurve.unchecked(curve.points + disp)


def matched_fraction(curve: DiscreteCurve, field: Optional[PixelField], cutoff: float = 0.0) -> float:
    if field is None:
        return 0.0
    return float(np.mean(pix_values(field, curve.points) <= cutoff))


def area_accuracy(curve: DiscreteCurve, field: PixelField, cutoff: float = 0.0) -> float:
    """Percentage agreement between the object's pixel area and the enclosed area."""
    black = float(np.count_nonzero(field.values <= cutoff)) * field.scale**2
    inside = abs(enclosed_area(curve))
    hi = max(black, inside)
    return 100.0 * min(black, inside) / hi if hi > 0 else 100.0


def centroid_charge(curve: DiscreteCurve) -> np.ndarray:
    return centroid(curve)


def mean_radius(curve: DiscreteCurve) -> float:
    return float(np.mean(np.hypot(*(curve.points - centroid(curve)).T)))


def _reason_for(exc: CurveFlowError) -> str:
    if isinstance(exc, ChargeExited):
        return "charge_exited"
    if isinstance(exc, SingularSystem):
        return "singular_system"
    if isinstance(exc, (BlowUp, DegenerateStencil, SingularEvaluation)):
        return "blow_up"
    raise exc


def _clamped(kappa, clamp):
    if clamp == "min0":
        return np.minimum(kappa, 0.0)
    if clamp == "max0":
        return np.maximum(kappa, 0.0)
    return kappa


def run(
    initial: DiscreteCurve,
    charges: ChargeSet = ChargeSet(),
    field: Optional[PixelField] = None,
    config: Optional[FlowConfig] = None,
    callback: Optional[Callable[[StepInfo], None]] = None,
) -> FlowTrace:
    """Evolve ``initial`` until enough nodes sit on object pixels.

    With no charges and no image the normal speed is the curvature itself
    (isotropic flow, optionally clamped).  Otherwise the two boundary
    systems are solved every step; nodes on fully black pixels get neither
    curvature nor charge forcing.  Errors end the run; the trace carries the
    reason and the exception, whose ``iteration`` attribute names the
    failing step.
    """
    cfg = config or FlowConfig(n=len(initial))
    charges = charges if isinstance(charges, ChargeSet) else ChargeSet.of(*charges)
    pure = len(charges) == 0 and field is None
    if cfg.clamp is not None and not pure:
        raise ValueError("velocity clamp is only available without charges and image")

    trace = FlowTrace(cfg)
    curve = initial
    dt = cfg.dt
    cutoff = cfg.pixel_black_cutoff

    def snapshot(k, crv, v=None, cond=(math.nan, math.nan), bound=math.nan):
        return Snapshot(
            iteration=k,
            time=k * dt,
            points=np.array(crv.points),
            matched_fraction=matched_fraction(crv, field, cutoff),
            area=enclosed_area(crv),
            radius=mean_radius(crv),
            max_v=float(np.max(np.abs(v))) if v is not None else math.nan,
            cond_stage1=cond[0],
            cond_stage2=cond[1],
            stability_bound=bound,
        )

    k = 0
    try:
        while k < cfg.max_iterations:
            if len(charges):
                bem.check_charges(curve, charges, cfg.charge_guard)
            frames = local_frames(curve, cfg.mu)
            tang = tangential_coefficients(curve, dt)
            mask = mask_values(field, curve.points)
            record = k % cfg.trace_every == 0
            cond = (math.nan, math.nan)

            if pure:
                v = _clamped(frames.curvature, cfg.clamp)
            else:
                sol = bem.solve_boundary(curve, frames, frames.curvature, charges, mask, cfg.charge_guard)
                v = sol.v
                if record and cfg.conditioning and len(curve) <= bem.MAX_CONDITION_N:
                    c1 = bem.condition_inf(sol.stage1_matrix).condition
                    c2 = bem.condition_inf(bem.stage2_condition_matrix(sol.stage2_matrix, sol.charge_columns)).condition
                    cond = (c1, c2)

            if record:
                bound = math.nan
                if cfg.stability:
                    n = len(curve)
                    bound = eigen_bound(StabilityInputs(float(np.max(np.abs(v))), perimeter(curve), n, n, dt))
                trace.add(snapshot(k, curve, v, cond, bound))

            new = step(curve, frames, tang, v, dt)
            if callback is not None:
                callback(StepInfo(k, curve, frames, tang, v, mask, new))
            curve = new
            k += 1

            if field is not None and matched_fraction(curve, field, cutoff) >= cfg.match_threshold:
                trace.reason = "matched"
                break
        else:
            trace.reason = "max_iterations"
    except CurveFlowError as exc:
        exc.iteration = k
        trace.reason = _reason_for(exc)
        trace.error = exc
        log.warning("run stopped at iteration %d: %s", k, exc)

    trace.iterations = k
    trace.add(snapshot(k, curve))
    return trace
