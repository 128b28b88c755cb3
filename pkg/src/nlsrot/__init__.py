"""Rotating points of the mass-critical NLS scattering operator.

The scattering operator is evaluated in finite time through the lens
transform; rotating points come from a constrained nonlinear eigenvalue
problem for the harmonic oscillator.
"""

from .eigensolver import (
    EigenstateSolution,
    MinimizationProblem,
    Q_closed_form,
    energy_I,
    equation_residual,
    gn_check,
    imaginary_time_oracle,
    minimize,
    petviashvili_oracle,
    project_to_M,
    solve_Q,
)
from .errors import *  # noqa: F401,F403
from .experiments import ExperimentConfig, RotationReport, resolution_study, run_experiment
from .fieldio import read_field, write_field
from .free import AsymptoticState, dispersive_factorization, extract_asymptotic_state, propagate_U0
from .harmonic import HermiteBasis, apply_H, build_hermite_basis, propagate_UH
from .lens import LensTime, apply_JK, lens_forward, lens_inverse
from .propagator import NLSConfig, PropagationResult, conserved_energy, propagate, step_strang
from .scattering import (
    RotatingDatum,
    ScatteringResult,
    build_rotating_datum,
    identity_suite,
    inverse_wave_minus,
    inverse_wave_plus,
    perturbative_P,
    rotation_defect,
    scattering_direct,
    scattering_lens,
    stability_probe,
    wave_minus,
    wave_plus,
)
from .spectral import Field, Grid, SigmaNorms, fourier, inner, inverse_fourier, l2_norm, norms

__version__ = "0.1.0"
