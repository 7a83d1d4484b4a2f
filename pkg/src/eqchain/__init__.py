"""Eigenvalues and eigenfunctions of polynomial potentials from
self-consistent quantization conditions on spectral-determinant chains.

The package solves -psi'' + V(q) psi = E psi for monic polynomial
V(q) = q^N + v_1 q^(N-1) + ... + v_(N-1) q by iterating exact quantization
conditions that couple the spectra of the complex-rotated potentials, with
an independent ODE shooting oracle for cross-validation.
"""

from .eqc import ChainSystem, LevelStuckError, eqc_residual, even_levels_via_dw, newton_update_level
from .iterate import (
    SCHEME_KINDS,
    ConvergenceReport,
    SchemeConfig,
    initialize_chains,
    linearized_dynamics,
    solve_spectrum,
    sweep,
)
from .oracle import (
    OracleConfig,
    matrix_spectrum,
    natural_psi_at_zero,
    oracle_spectrum,
    recessive_solution,
    shoot_eigenvalue,
)
from .potential import (
    AdmissibilityError,
    PolynomialPotential,
    SymmetryData,
    check_admissibility,
    rotate_potential,
    shift_potential,
    spectral_symmetry_angle,
    symmetry_order,
)
from .semiclassics import BSExpansion, bs_coefficients, closed_form_expansion, seed_expansion
from .specdet import PoleProximityError, SpectrumChain, log_det, wronskian_residual
from .wavefn import WavefunctionPoint, wavefunction_by_eqc

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "BSExpansion",
    "ChainSystem",
    "ConvergenceReport",
    "LevelStuckError",
    "OracleConfig",
    "PolynomialPotential",
    "PoleProximityError",
    "SCHEME_KINDS",
    "SchemeConfig",
    "SpectrumChain",
    "SymmetryData",
    "WavefunctionPoint",
    "bs_coefficients",
    "check_admissibility",
    "closed_form_expansion",
    "eqc_residual",
    "even_levels_via_dw",
    "initialize_chains",
    "linearized_dynamics",
    "log_det",
    "matrix_spectrum",
    "natural_psi_at_zero",
    "newton_update_level",
    "oracle_spectrum",
    "recessive_solution",
    "rotate_potential",
    "seed_expansion",
    "shift_potential",
    "shoot_eigenvalue",
    "solve_spectrum",
    "spectral_symmetry_angle",
    "sweep",
    "symmetry_order",
    "wavefunction_by_eqc",
    "wronskian_residual",
]
