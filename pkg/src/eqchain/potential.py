"""Polynomial potentials, their discrete rotation orbit, and admissibility.

A potential is V(q) = q^N + v_1 q^(N-1) + ... + v_(N-1) q; the leading
coefficient is 1 and the constant term is absorbed into the spectral
parameter.  The degree N = 2 is excluded (singular case).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial


class UnsupportedDegreeError(ValueError):
    """Raised when an operation has no closed form at this degree."""


class AdmissibilityError(ValueError):
    """Raised when a potential fails the Z(0) = 0 admissibility gate."""


@dataclass(frozen=True)
class PolynomialPotential:
    """Monic polynomial potential with zero constant term.

    Coefficients are stored as complex throughout: the rotation orbit is
    intrinsically complex even when the user supplies reals.
    """

    degree: int
    coefficients: tuple[complex, ...]

    def __post_init__(self):
        n = self.degree
        if n < 1:
            raise ValueError(f"degree must be >= 1, got {n}")
        if n == 2:
            raise ValueError("degree N = 2 is singular and excluded")
        if len(self.coefficients) != n - 1:
            raise ValueError(
                f"expected {n - 1} subleading coefficients, got {len(self.coefficients)}"
            )
        object.__setattr__(
            self, "coefficients", tuple(complex(c) for c in self.coefficients)
        )

    @classmethod
    def from_coefficients(cls, degree, coefficients=()):
        coeffs = tuple(complex(c) for c in coefficients)
        if len(coeffs) < degree - 1:
            coeffs = coeffs + (0j,) * (degree - 1 - len(coeffs))
        return cls(degree, coeffs)

    @property
    def is_real(self) -> bool:
        return all(abs(c.imag) < 1e-14 for c in self.coefficients)

    @property
    def is_even(self) -> bool:
        """True when only even powers of q appear."""
        if self.degree % 2:
            return False
        return all(
            abs(c) == 0 for j, c in enumerate(self.coefficients, start=1) if j % 2
        )

    @property
    def is_homogeneous(self) -> bool:
        return all(abs(c) == 0 for c in self.coefficients)

    @property
    def is_purely_odd(self) -> bool:
        """True when only odd powers of q appear."""
        if self.degree % 2 == 0:
            return False
        return all(
            abs(c) == 0 for j, c in enumerate(self.coefficients, start=1) if j % 2
        )

    def full_coefficients(self) -> np.ndarray:
        """Monic coefficient vector [1, v_1, ..., v_(N-1), 0], highest first."""
        return np.concatenate(([1.0 + 0j], np.asarray(self.coefficients), [0j]))

    def __call__(self, q):
        return evaluate(self, q)


@dataclass(frozen=True)
class SymmetryData:
    """Spectral symmetry angle, symmetry-group order and growth order."""

    phi: float
    L: int
    mu: float

    @classmethod
    def of(cls, potential: PolynomialPotential) -> "SymmetryData":
        n = potential.degree
        return cls(
            phi=4.0 * math.pi / (n + 2),
            L=symmetry_order(potential),
            mu=0.5 + 1.0 / n,
        )


def spectral_symmetry_angle(degree: int) -> float:
    return 4.0 * math.pi / (degree + 2)


def growth_order(degree: int) -> float:
    return 0.5 + 1.0 / degree


def symmetry_order(potential: PolynomialPotential) -> int:
    """Order of the effective rotation group: N+2 generically, N/2+1 if even."""
    n = potential.degree
    if potential.is_even:
        return n // 2 + 1
    return n + 2


def rotate_coefficients(coefficients, ell: int, degree: int | None = None):
    """One step of the discrete rotation orbit: v_j -> exp(i j ell phi/2) v_j."""
    coeffs = tuple(complex(c) for c in coefficients)
    if degree is None:
        degree = len(coeffs) + 1
    half_phi = spectral_symmetry_angle(degree) / 2.0
    return tuple(
        c * cmath.exp(1j * j * ell * half_phi) for j, c in enumerate(coeffs, start=1)
    )


def rotate_potential(potential: PolynomialPotential, ell: int) -> PolynomialPotential:
    return PolynomialPotential(
        potential.degree,
        rotate_coefficients(potential.coefficients, ell, potential.degree),
    )


def z_zero_quartic(coefficients) -> complex:
    """Z(0) for a quartic: -v3/4 + v1 v2/8 - v1^3/32."""
    coeffs = tuple(complex(c) for c in coefficients)
    if len(coeffs) != 3:
        raise UnsupportedDegreeError(
            "closed-form Z(0) is only available for degree 4; "
            "other degrees need a numerical fit of the level-counting tail"
        )
    v1, v2, v3 = coeffs
    return -v3 / 4.0 + v1 * v2 / 8.0 - v1**3 / 32.0


def check_admissibility(
    potential: PolynomialPotential, tol: float = 1e-12, allow_unverified: bool = False
) -> None:
    """Gate on Z(0) = 0 before building determinants.

    Homogeneous, purely odd, and purely even potentials with N divisible by 4
    are admissible unconditionally.  Quartics are checked through the closed
    form; anything else requires ``allow_unverified=True``.
    """
    if potential.is_homogeneous or potential.is_purely_odd:
        return
    if potential.is_even and potential.degree % 4 == 0:
        return
    if potential.degree == 4:
        z0 = z_zero_quartic(potential.coefficients)
        if abs(z0) > tol:
            raise AdmissibilityError(
                f"Z(0) = {z0:.3e} != 0: determinant normalization undefined"
            )
        return
    if not allow_unverified:
        raise AdmissibilityError(
            "Z(0) cannot be verified in closed form for degree "
            f"{potential.degree}; pass allow_unverified=True to proceed"
        )


def shift_potential(potential: PolynomialPotential, a) -> PolynomialPotential:
    """Endpoint shift V_a(q) = V(q + a) - V(a); keeps V_a(0) = 0."""
    # Polynomial wants lowest-degree-first coefficients.
    low_first = potential.full_coefficients()[::-1]
    shifted = Polynomial(low_first)(Polynomial([a, 1.0]))
    c = np.zeros(potential.degree + 1, dtype=complex)
    c[: len(shifted.coef)] = shifted.coef
    c /= c[potential.degree]
    new = c[::-1][1:-1]  # drop leading 1 and the constant term
    return PolynomialPotential(potential.degree, tuple(new))


def evaluate(potential: PolynomialPotential, q):
    """Horner evaluation of q^N + sum_j v_j q^(N-j) (constant term is zero)."""
    q = np.asarray(q, dtype=complex)
    out = np.ones_like(q)
    for c in potential.coefficients:
        out = out * q + c
    return out * q


def potential_to_dict(potential: PolynomialPotential) -> dict:
    return {
        "N": potential.degree,
        "v": [[c.real, c.imag] for c in potential.coefficients],
    }


def potential_from_dict(data: dict) -> PolynomialPotential:
    n = int(data["N"])
    coeffs = [complex(re, im) for re, im in data.get("v", [])]
    return PolynomialPotential.from_coefficients(n, coeffs)
