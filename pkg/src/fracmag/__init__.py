"""Fractional magnetic Laplacian on cubic grids.

Energies, the operator, constrained ground states and concentration diagnostics for
``(-Delta)^s_A`` in three dimensions.
"""
__version__ = "0.1.0"

from .params import DomainError, FractionalParams, critical_exponent, cs_constant
from .potential import MagneticPotential, eval_potential, shift_potential
from .grid import (
    Bump, Field, Gaussian, Grid, PlaneWavePhase, TalentiBubble, TwoBumps, make_field, translate,
)
from .kernel import KernelSample, kernel_sample, upsilon, upsilon_positive_measure
from .gagliardo import (
    DensityField, EnergyBreakdown, QuadPolicy, concentration_function, density,
    localized_norm, seminorm_sq,
)
from .operator import (
    OperatorPolicy, apply_operator, bilinear_form, calibrate_talenti, fourier_apply_s,
)
from .groundstate import (
    Constraint, MinimizationResult, MinimizeOptions, critical_level, minimize,
    remove_multiplier, sigma_scaling_curve,
)
from .cclab import (
    SplitReport, cutoff, dichotomy_split, gauge_transform, vanishing_diagnostic,
    verify_cutoff_estimate,
)

__all__ = [
    "DomainError", "FractionalParams", "critical_exponent", "cs_constant",
    "MagneticPotential", "eval_potential", "shift_potential",
    "Bump", "Field", "Gaussian", "Grid", "PlaneWavePhase", "TalentiBubble", "TwoBumps",
    "make_field", "translate",
    "KernelSample", "kernel_sample", "upsilon", "upsilon_positive_measure",
    "DensityField", "EnergyBreakdown", "QuadPolicy", "concentration_function", "density",
    "localized_norm", "seminorm_sq",
    "OperatorPolicy", "apply_operator", "bilinear_form", "calibrate_talenti", "fourier_apply_s",
    "Constraint", "MinimizationResult", "MinimizeOptions", "critical_level", "minimize",
    "remove_multiplier", "sigma_scaling_curve",
    "SplitReport", "cutoff", "dichotomy_split", "gauge_transform", "vanishing_diagnostic",
    "verify_cutoff_estimate",
]
