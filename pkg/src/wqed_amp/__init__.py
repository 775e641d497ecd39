"""Probe reflection and dressed-sideband gain of driven transmons in front of a mirror."""

from __future__ import annotations

from .errors import (
    DegenerateSteadyState,
    NonConvergence,
    SingularAtZeroDetuning,
    SingularPi,
    SpecError,
    WindowMismatch,
    ZeroRelaxation,
)
from .model import (
    ArraySpec,
    DriveSpec,
    ProbeSpec,
    RateTable,
    TransmonSpec,
    build_levels,
    collective_rates,
    decay_rates,
    dephasing_profile,
    validate_cutoff,
)
from .operators import build_liouvillian0, build_probe_superops, ladder_ops
from .response import (
    SpectrumResult,
    full_reflection,
    linear_response_rho1,
    reflection,
    solve_point,
    steady_state,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ArraySpec",
    "DegenerateSteadyState",
    "DriveSpec",
    "NonConvergence",
    "ProbeSpec",
    "RateTable",
    "SingularAtZeroDetuning",
    "SingularPi",
    "SpecError",
    "SpectrumResult",
    "TransmonSpec",
    "WindowMismatch",
    "ZeroRelaxation",
    "build_levels",
    "build_liouvillian0",
    "build_probe_superops",
    "collective_rates",
    "decay_rates",
    "dephasing_profile",
    "full_reflection",
    "ladder_ops",
    "linear_response_rho1",
    "reflection",
    "solve_point",
    "steady_state",
    "sweep",
    "validate_cutoff",
]
