"""Next-step error-amplification bound and the time-step rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geometry import MIN_POINTS


@dataclass(frozen=True)
class StabilityInputs:
    """Inputs to the amplification bound.

    ``v_star`` is the representative normal speed (the run uses max |v_j|),
    ``length`` the curve length, ``n1``/``n2`` the point counts of the two
    representations being compared.
    """

    v_star: float
    length: float
    n1: int
    n2: int
    dt: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"curve length must be positive, got {self.length}")
        if self.n1 < MIN_POINTS or self.n2 < MIN_POINTS:
            raise ValueError(f"point counts must be >= {MIN_POINTS}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class StabilityReport:
    bound: float
    stable_next_step: bool
    candidates: tuple = ()
    candidate_bounds: tuple = ()
    increasing: bool = True


def dt_policy(n: int) -> float:
    if n < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points, got {n}")
    return 1.0 / (n * n)


def eigen_bound(inp: StabilityInputs) -> float:
    """Bound on the squared modulus of the amplification eigenvalues.

    2 dt^2 (|v*| / (3L) * (2 max(N1, 4 N2) + 3 N2))^2, quadrature error dropped.
    """
    inner = abs(inp.v_star) / (3.0 * inp.length) * (2 * max(inp.n1, 4 * inp.n2) + 3 * inp.n2)
    return 2.0 * inp.dt**2 * inner**2


def stability_report(inp: StabilityInputs, candidates=()) -> StabilityReport:
    """Evaluate the bound, and compare it across candidate ``n2`` values.

    The flag only certifies the next time step.
    """
    bound = eigen_bound(inp)
    cands = tuple(int(c) for c in candidates)
    bounds = tuple(eigen_bound(replace(inp, n2=c)) for c in cands)
    increasing = all(b1 < b2 for b1, b2 in zip(bounds, bounds[1:]))
    return StabilityReport(bound, math.sqrt(bound) < 1.0, cands, bounds, increasing)
