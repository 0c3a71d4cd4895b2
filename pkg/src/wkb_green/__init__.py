"""Asymptotics of fundamental solutions for 1-D, possibly degenerate,
parabolic equations with a small diffusion parameter.

The pipeline: characteristics in a doubled phase space carry the phase and
a sensitivity block; a two-point solve matches the target point and the
diagonal pairing of the auxiliary variables; the kernel is assembled from
the matched exponent, the extended Jacobian and the transport factor, and
the sharp-delta limit is taken by extrapolation in the Gaussian sharpness
parameter.  A Crank-Nicolson reference solver validates the result.
"""

from .hamiltonian import (
    ConfigError,
    DomainSign,
    HamiltonianModel,
    HamiltonianSpec,
    Kind,
    derivatives,
    model_from_spec,
    parse_spec,
)
from .characteristics import (
    AccuracyError,
    BlowupError,
    CharacteristicDomainError,
    ExtendedState,
    ExtendedTrajectory,
    TrajectoryParams,
    closed_degenerate,
    closed_general,
    flow,
    jacobian_degenerate,
    jacobian_degenerate_yconst,
    jacobian_general,
)
from .phase import (
    BoundarySolution,
    BoundarySolveError,
    FoldError,
    ManifoldSample,
    PhaseEvaluation,
    manifold_section,
    phase_exponent,
    phase_field,
    solve_boundary,
    transport_amplitude,
)
from .green import (
    BetaSchedule,
    DeltaAtOrigin,
    GreenValue,
    QuadratureError,
    assemble,
    beta_limit,
    convolve,
    default_schedule,
    gbeta_at_origin,
    heat_exact,
    heat_exact_log,
)
from .smallt import (
    DeltaRegimeError,
    SmallTimeSeries,
    bvp_series,
    p0_leading,
    s_small_t,
)
from .oracle import (
    DomainLeakError,
    ErrorReport,
    FieldSolution,
    Grid1D,
    compare_green,
    crank_nicolson,
    moment_check,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "BetaSchedule",
    "BlowupError",
    "BoundarySolution",
    "BoundarySolveError",
    "CharacteristicDomainError",
    "ConfigError",
    "DeltaAtOrigin",
    "DeltaRegimeError",
    "DomainLeakError",
    "DomainSign",
    "ErrorReport",
    "ExtendedState",
    "ExtendedTrajectory",
    "FieldSolution",
    "FoldError",
    "GreenValue",
    "Grid1D",
    "HamiltonianModel",
    "HamiltonianSpec",
    "Kind",
    "ManifoldSample",
    "PhaseEvaluation",
    "QuadratureError",
    "SmallTimeSeries",
    "TrajectoryParams",
    "assemble",
    "beta_limit",
    "bvp_series",
    "closed_degenerate",
    "closed_general",
    "compare_green",
    "convolve",
    "crank_nicolson",
    "default_schedule",
    "derivatives",
    "flow",
    "gbeta_at_origin",
    "heat_exact",
    "heat_exact_log",
    "jacobian_degenerate",
    "jacobian_degenerate_yconst",
    "jacobian_general",
    "manifold_section",
    "model_from_spec",
    "moment_check",
    "p0_leading",
    "parse_spec",
    "phase_exponent",
    "phase_field",
    "s_small_t",
    "solve_boundary",
    "transport_amplitude",
    "__version__",
]
