"""Level-counting asymptotics and regularized action integrals.

The level law sum_j b_(mu-j/N) E^(mu-j/N) ~ 2 pi (k + 1/2) fixes the
semiclassical tail of every spectrum.  The first two coefficients have
closed forms; higher ones are fitted to reference eigenvalues.  The
regularized action continues int_0^inf (V+lambda)^(1/2) dq to its finite
part, the quantity behind the natural normalization of recessive solutions.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import _series
from .potential import PolynomialPotential, growth_order, spectral_symmetry_angle


class TailLevelError(RuntimeError):
    """Newton failed to invert the level law."""


class FitUnderdeterminedError(ValueError):
    """Not enough reference levels to fit the requested expansion."""


def leading_bs_coefficient(degree: int) -> float:
    """Closed form of the contour integral of p dq over p^2 + q^N = 1."""
    if degree < 1 or degree == 2:
        raise ValueError(f"unsupported degree {degree}")
    n = degree
    return 2.0 * math.sqrt(math.pi) / n * math.gamma(1.0 / n) / math.gamma(1.5 + 1.0 / n)


@dataclass(frozen=True)
class BSExpansion:
    """Truncated level-law expansion sum_j b_j E^(mu - j/N).

    ``stderr`` carries fit standard errors for fitted terms (0 for the
    closed-form ones).
    """

    degree: int
    exponents: tuple[float, ...]
    coefficients: tuple[complex, ...]
    stderr: tuple[float, ...] = ()

    def __post_init__(self):
        ex = self.exponents
        if len(ex) != len(self.coefficients):
            raise ValueError("exponent/coefficient length mismatch")
        if any(ex[i] <= ex[i + 1] for i in range(len(ex) - 1)):
            raise ValueError("exponents must be strictly decreasing")
        mu = growth_order(self.degree)
        if abs(ex[0] - mu) > 1e-12:
            raise ValueError("leading exponent must equal the growth order")
        if not self.stderr:
            object.__setattr__(self, "stderr", (0.0,) * len(ex))

    @property
    def mu(self) -> float:
        return growth_order(self.degree)

    def counting(self, energy):
        """sum_j b_j E^(mu-j/N); principal powers (levels stay near-real)."""
        e = np.asarray(energy, dtype=complex)
        out = np.zeros_like(e)
        for a, b in zip(self.exponents, self.coefficients):
            out += b * e**a
        return out

    def counting_derivative(self, energy):
        e = np.asarray(energy, dtype=complex)
        out = np.zeros_like(e)
        for a, b in zip(self.exponents, self.coefficients):
            if a != 0.0:
                out += b * a * e ** (a - 1.0)
        return out

    def levels(self, quantum_numbers, max_newton: int = 50) -> np.ndarray:
        """Invert the level law at (possibly fractional) quantum numbers."""
        n = np.asarray(quantum_numbers, dtype=float)
        target = 2.0 * math.pi * (n + 0.5)
        b0 = self.coefficients[0].real
        e = (target / b0) ** (1.0 / self.mu) + 0j
        for _ in range(max_newton):
            resid = self.counting(e) - target
            step = resid / self.counting_derivative(e)
            # keep Newton from overshooting across E = 0 at low quantum number
            step = np.where(np.abs(step) > 0.8 * np.abs(e), step * 0.5, step)
            e = e - step
            if np.max(np.abs(resid)) < 1e-13 * np.max(np.abs(target)):
                return e
        if np.max(np.abs(self.counting(e) - target)) > 1e-9 * np.max(np.abs(target)):
            raise TailLevelError("level-law inversion did not converge")
        return e

    def rotated(self, ell: int) -> "BSExpansion":
        """Expansion for the rotated coefficient set v^[ell].

        Every monomial entering b_(mu-j/N) carries total rotation weight j
        modulo N+2, so the whole coefficient picks up exp(i j ell phi/2).
        """
        half_phi = spectral_symmetry_angle(self.degree) / 2.0
        mu = self.mu
        coeffs = []
        for a, b in zip(self.exponents, self.coefficients):
            j = round(self.degree * (mu - a))
            coeffs.append(b * cmath.exp(1j * j * ell * half_phi))
        return BSExpansion(self.degree, self.exponents, tuple(coeffs), self.stderr)

    def conjugated(self) -> "BSExpansion":
        return BSExpansion(
            self.degree,
            self.exponents,
            tuple(c.conjugate() for c in self.coefficients),
            self.stderr,
        )

    def to_dict(self) -> dict:
        return {
            "N": self.degree,
            "terms": [
                [a, b.real, b.imag] for a, b in zip(self.exponents, self.coefficients)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BSExpansion":
        terms = data["terms"]
        return cls(
            int(data["N"]),
            tuple(t[0] for t in terms),
            tuple(complex(t[1], t[2]) for t in terms),
        )


def closed_form_expansion(potential: PolynomialPotential, n_terms: int = 2) -> BSExpansion:
    """The j <= 1 part of the level law, valid without any fit."""
    n = potential.degree
    mu = growth_order(n)
    terms = min(n_terms, 2)
    exponents = tuple(mu - j / n for j in range(terms))
    coeffs = [complex(leading_bs_coefficient(n))]
    if terms > 1:
        v1 = potential.coefficients[0] if n >= 2 else 0j
        coeffs.append(-4.0 * v1 / n)
    return BSExpansion(n, exponents, tuple(coeffs))


@functools.lru_cache(maxsize=64)
def asymptotic_coefficients(potential: PolynomialPotential) -> dict:
    """Level-law coefficients, exact through the first quantum correction.

    The order-2m WKB correction to the action only feeds exponents
    mu - m(N+2)/N and below, so every coefficient with exponent above
    mu - 2(N+2)/N is determined by the classical action and its first
    quantum correction.  Both expand termwise: writing the integrands as
    binomial series around q^N + lambda, each monomial integrates by the
    regularized Beta formula
    int_0^inf q^s (q^N + lambda)^p dq
        = lambda^a Gamma((s+1)/N) Gamma(-a) / (N Gamma(-p)),  a = p + (s+1)/N,
    and b_a = 4 sin(pi a) c_a converts the action expansion to the level
    law.  Slots at non-negative integer a are poles of the formula; their
    aggregate carries only log(lambda)/constant parts, and the log part
    vanishes for admissible potentials (Z(0) = 0), so those slots read 0.
    Returns {alpha: coefficient} for every ladder exponent above the
    order-4 threshold.
    """
    n = potential.degree
    mu = growth_order(n)
    threshold = mu - 2.0 * (n + 2.0) / n
    # W(q) = V(q) - q^N as an ascending coefficient array
    w_asc = np.zeros(max(n, 1), dtype=complex)
    for j, v in enumerate(potential.coefficients, start=1):
        w_asc[n - j] = v
    contributions = {j: 0j for j in range(2 * n + 4)}  # key j: alpha = mu - j/N

    def accumulate(pref_asc, p0):
        m = 0
        binom = 1.0
        wm = np.array([1.0 + 0j])
        while True:
            poly = np.convolve(pref_asc, wm)
            if p0 - m + len(poly) / n <= threshold:
                break
            for s, g in enumerate(poly):
                a = p0 - m + (s + 1.0) / n
                if g == 0 or a <= threshold + 1e-12:
                    continue
                if a > -1e-9 and abs(a - round(a)) < 1e-9:
                    continue  # pole slot: feeds only log/constant parts
                term = (
                    g
                    * binom
                    * special.gamma((s + 1.0) / n)
                    * special.gamma(-a)
                    / (n * special.gamma(m - p0))
                )
                contributions[round((mu - a) * n)] += term
            m += 1
            binom *= (p0 - m + 1.0) / m
            wm = np.convolve(wm, w_asc)

    accumulate(np.array([1.0 + 0j]), 0.5)
    # first quantum correction: -V'(0)/(8 lambda^(3/2))
    #                           + (1/32) int V'^2 (V+lambda)^(-5/2) dq
    dv_asc = np.zeros(max(n, 1), dtype=complex)
    dv_asc[n - 1] = n
    for j, v in enumerate(potential.coefficients, start=1):
        if n - j - 1 >= 0:
            dv_asc[n - j - 1] = (n - j) * v
    accumulate(np.convolve(dv_asc, dv_asc) / 32.0, -2.5)
    v_prime_zero = dv_asc[0]
    key_boundary = round((mu + 1.5) * n)
    if key_boundary in contributions:
        contributions[key_boundary] += -v_prime_zero / 8.0

    out = {}
    for key, c in contributions.items():
        a = mu - key / n
        if a <= threshold + 1e-12:
            continue
        if a > -1e-9 and abs(a - round(a)) < 1e-9:
            out[round(a) + 0.0] = 0j
        else:
            out[a] = complex(4.0 * math.sin(math.pi * a) * c)
    return out


def bs_coefficients(
    potential: PolynomialPotential,
    n_terms: int,
    oracle_levels=None,
    k_fit_min: int = 20,
    quantum_numbers=None,
) -> BSExpansion:
    """Level-law expansion: exact coefficients down to exponent 0, fitted
    negative-exponent corrections beyond.

    Exponents above mu - 2(N+2)/N use closed forms (leading two) and the
    action asymptotics through the first quantum correction — the
    regularized-determinant constant depends on these individually, so they
    must not come from a level fit.
    The remaining terms mix all-orders corrections and are fitted to
    ``oracle_levels``, the interleaved (both parities) spectrum indexed by
    the global quantum number, solving the weighted least-squares problem
    for 2 pi (k+1/2) minus the exact part with weights E^(-mu) so relative
    errors are equalized.  ``quantum_numbers`` overrides the default
    0, 1, 2, ... indexing when the levels cover only one parity; the
    ``k_fit_min`` cut is applied in the same (global) units.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    n = potential.degree
    mu = growth_order(n)
    if n_terms <= 2:
        return closed_form_expansion(potential, n_terms)
    exponents = [mu - j / n for j in range(n_terms)]
    threshold = mu - 2.0 * (n + 2.0) / n
    base = closed_form_expansion(potential, 2)
    exact = asymptotic_coefficients(potential)
    fixed_coeffs = list(base.coefficients)
    for a in exponents[2:]:
        if a > threshold + 1e-12:
            key = min(exact, key=lambda x: abs(x - a))
            fixed_coeffs.append(exact[key])
    n_fixed = len(fixed_coeffs)
    fit_exps = np.array(exponents[n_fixed:])
    if len(fit_exps) == 0:
        return BSExpansion(n, tuple(exponents), tuple(fixed_coeffs))
    if oracle_levels is None:
        raise FitUnderdeterminedError(
            "fitting negative-exponent terms requires reference eigenvalues"
        )
    levels = np.asarray(oracle_levels, dtype=complex)
    if len(levels) < 3 * n_terms:
        raise FitUnderdeterminedError(
            f"need at least {3 * n_terms} reference levels, got {len(levels)}"
        )
    if quantum_numbers is None:
        k = np.arange(len(levels), dtype=float)
        mask = k >= min(k_fit_min, len(levels) - 3 * n_terms)
    else:
        k = np.asarray(quantum_numbers, dtype=float)
        if len(k) != len(levels):
            raise ValueError("quantum_numbers must match the levels in length")
        mask = k >= k_fit_min
        if int(mask.sum()) < len(fit_exps) + 2:
            raise FitUnderdeterminedError(
                f"only {int(mask.sum())} levels beyond the fit cut for "
                f"{len(fit_exps)} fitted terms"
            )
    e = levels[mask]
    k = k[mask]
    fixed = BSExpansion(n, tuple(exponents[:n_fixed]), tuple(fixed_coeffs))
    y = 2.0 * math.pi * (k + 0.5) - fixed.counting(e)
    design = np.column_stack([e**a for a in fit_exps])
    w = np.abs(e) ** (-mu)
    coef, *_ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
    resid = y - design @ coef
    dof = max(1, len(e) - len(coef))
    chi2 = float(np.sum(np.abs(w * resid) ** 2) / dof)
    cov = chi2 * np.linalg.inv((design * w[:, None]).conj().T @ (design * w[:, None]))
    stderr = np.sqrt(np.abs(np.diag(cov)))
    return BSExpansion(
        n,
        tuple(exponents),
        tuple(fixed_coeffs) + tuple(coef),
        (0.0,) * n_fixed + tuple(float(s) for s in stderr),
    )


@functools.lru_cache(maxsize=64)
def seed_expansion(potential: PolynomialPotential) -> BSExpansion:
    """Best level law available without reference eigenvalues.

    All exponents above the order-4 threshold via the action asymptotics
    (classical plus first quantum correction); falls back to the two
    closed-form terms when the asymptotics are unavailable (e.g. a
    potential outside the admissible class).
    """
    try:
        return bs_coefficients(potential, 2 * potential.degree + 4)
    except (ValueError, ArithmeticError):
        return closed_form_expansion(potential, 2)


def semiclassical_level(expansion: BSExpansion, k: int) -> complex:
    """Energy solving the level law at quantum number k."""
    if k < 0:
        raise ValueError("quantum number must be >= 0")
    return complex(expansion.levels([k])[0])


def _tail_cut(potential: PolynomialPotential, lam: complex) -> float:
    n = potential.degree
    cut = 1.0 + abs(lam) ** (1.0 / n)
    for j, v in enumerate(potential.coefficients, start=1):
        if abs(v) > 0:
            cut = max(cut, 1.0 + abs(v) ** (1.0 / j))
    return 2.0 * cut


def regularized_action(
    potential: PolynomialPotential,
    lam: complex,
    n_series: int = 48,
    quad_tol: float = 1e-12,
) -> complex:
    """Finite part of int_0^inf (V(q) + lambda)^(1/2) dq.

    The integral is split at a cut beyond all turning points: [0, cut] by
    adaptive quadrature, the rest by termwise regularized integration of the
    large-q expansion.  Requires Z(0) = 0, otherwise the 1/q monomial in the
    expansion makes the finite part undefined.
    """
    lam = complex(lam)
    cut = _tail_cut(potential, lam)
    for attempt in range(3):
        f = _series.momentum_series(
            potential.coefficients, potential.degree, lam, n_series
        )
        p = np.arange(n_series)
        scale = np.abs(f) * cut ** (potential.degree / 2.0 - p + 1.0)
        scale[np.isclose(potential.degree / 2.0 - p + 1.0, 0.0)] = 0.0
        if scale[-4:].max() < 1e-13 * max(1.0, scale.max()):
            break
        cut *= 2.0
    else:
        raise ValueError("tail expansion not convergent; increase the cut manually")

    tail = _series.regularized_tail_integral(f, potential.degree, cut)

    def integrand_re(q):
        return np.sqrt(potential(q) + lam).real

    def integrand_im(q):
        return np.sqrt(potential(q) + lam).imag

    re, _ = integrate.quad(integrand_re, 0.0, cut, epsabs=quad_tol, epsrel=quad_tol, limit=200)
    im, _ = integrate.quad(integrand_im, 0.0, cut, epsabs=quad_tol, epsrel=quad_tol, limit=200)
    return complex(re, im) + tail


def quantum_action_correction(
    potential: PolynomialPotential, lam: complex, quad_tol: float = 1e-12
) -> complex:
    """First correction to the action from the all-orders WKB symbol.

    Expanding u = Pi + delta to second order and integrating by parts gives
    int_0^inf delta dq = -V'(0)/(8 lambda^(3/2))
                         + (1/32) int_0^inf V'(q)^2 (V(q)+lambda)^(-5/2) dq,
    a convergent integral (the integrand decays like q^(-N/2-2)).  Adding
    this to the classical action shifts the level-law expansion by the
    order-2 terms, whose exponents start at mu - (N+2)/N.
    """
    lam = complex(lam)
    n = potential.degree
    # V = q^N + sum_j v_j q^(N-j): descending derivative coefficients
    dcoeffs = [float(n)] + [
        (n - j) * v for j, v in enumerate(potential.coefficients, start=1)
    ]

    def dv(q):
        out = np.zeros_like(np.asarray(q, dtype=complex))
        for c in dcoeffs:
            out = out * q + c
        return out

    def integrand(q):
        return dv(q) ** 2 * (potential(q) + lam) ** (-2.5)

    cut = _tail_cut(potential, lam)
    re, _ = integrate.quad(
        lambda q: integrand(q).real, 0.0, cut, epsabs=quad_tol, epsrel=quad_tol, limit=200
    )
    im, _ = integrate.quad(
        lambda q: integrand(q).imag, 0.0, cut, epsabs=quad_tol, epsrel=quad_tol, limit=200
    )
    re_t, _ = integrate.quad(
        lambda q: integrand(q).real, cut, np.inf, epsabs=quad_tol, epsrel=quad_tol, limit=200
    )
    im_t, _ = integrate.quad(
        lambda q: integrand(q).imag, cut, np.inf, epsabs=quad_tol, epsrel=quad_tol, limit=200
    )
    boundary = -complex(dv(0.0)) / (8.0 * lam**1.5)
    return boundary + complex(re + re_t, im + im_t) / 32.0
