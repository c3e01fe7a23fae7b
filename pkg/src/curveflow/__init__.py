"""Contour parametrization by curvature flow driven by point charges."""

from .bem import (
    BoundarySolution,
    ConditionReport,
    assemble_layers,
    condition_inf,
    fundamental_solution,
    kernel_dphi_dn,
    representation_residual,
    solve_boundary,
    solve_stage1_boundary_potential,
    solve_stage2_normal_velocity,
)
from .errors import (
    BlowUp,
    ChargeExited,
    ChargeTooClose,
    CurveFlowError,
    DegenerateStencil,
    InvalidCurve,
    MalformedImage,
    SingularEvaluation,
    SingularSystem,
)
from .flow import ChargeSet, FlowConfig, FlowTrace, Snapshot, area_accuracy, matched_fraction, run, step
from .geometry import (
    DiscreteCurve,
    LocalFrames,
    TangentialCoefficients,
    circle,
    enclosed_area,
    local_frames,
    perimeter,
    tangential_coefficients,
)
from .image import PixelField, load_pgm, mask_factor, pix, read_pgm
from .stability import StabilityInputs, StabilityReport, dt_policy, eigen_bound, stability_report

__version__ = "0.1.0"
