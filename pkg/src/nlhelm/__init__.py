"""Spectral construction of solutions to nonlinear Helmholtz, fourth-order
and curl-curl equations on R^n via Herglotz waves, limiting-absorption
resolvents and contraction mapping."""

from ._backend import active_backend
from .fields import Grid, ScalarField, SpectralField, VectorField3
from .sphere import SphereDensity, SphereQuadrature, build_quadrature
from .herglotz import HerglotzWave, synthesize_scalar, synthesize_vector
from .resolvent import (FourthOrderSpec, HelmholtzSplit, ResolventConfig,
                        curlcurl_resolvent, fourth_order_resolvent,
                        helmholtz_decompose, helmholtz_resolvent_complex,
                        helmholtz_resolvent_real)
from .nonlinearity import NonlinearitySpec, Truncation, Weight, alpha_constant
from .exponents import (ExponentReport, InfeasibleExponents, bootstrap_schedule,
                        build_report, lap_window, p_threshold, t_star, xi_set,
                        xi_rad_set)
from .solver import (FixedPointProblem, SolveResult, apply_T, make_problem,
                     picard_solve)
from .farfield import (FarFieldPattern, decay_fit, predicted_far_field,
                       symmetry_defect, verify_solution_far_field)

__version__ = "0.1.0"

__all__ = [
    "Grid", "ScalarField", "VectorField3", "SpectralField",
    "SphereDensity", "SphereQuadrature", "build_quadrature",
    "HerglotzWave", "synthesize_scalar", "synthesize_vector",
    "ResolventConfig", "FourthOrderSpec", "HelmholtzSplit",
    "helmholtz_resolvent_complex", "helmholtz_resolvent_real",
    "fourth_order_resolvent", "helmholtz_decompose", "curlcurl_resolvent",
    "NonlinearitySpec", "Truncation", "Weight", "alpha_constant",
    "ExponentReport", "InfeasibleExponents", "bootstrap_schedule",
    "build_report", "lap_window", "p_threshold", "t_star", "xi_set",
    "xi_rad_set", "FixedPointProblem", "SolveResult", "apply_T",
    "make_problem", "picard_solve", "FarFieldPattern", "decay_fit",
    "predicted_far_field", "symmetry_defect", "verify_solution_far_field",
    "active_backend",
]
