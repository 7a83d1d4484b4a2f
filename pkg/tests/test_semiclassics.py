"""Level-law expansions: closed forms, exact ladder coefficients, fits."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqchain.potential import PolynomialPotential
from eqchain.semiclassics import (
    BSExpansion,
    FitUnderdeterminedError,
    asymptotic_coefficients,
    bs_coefficients,
    closed_form_expansion,
    leading_bs_coefficient,
    quantum_action_correction,
    regularized_action,
    seed_expansion,
    semiclassical_level,
)

QUARTIC_B_LEADING = 3.4960767390561593  # 2 sqrt(pi)/4 Gamma(1/4)/Gamma(7/4)


def quartic(v2=0.0, v1=0.0, v3=0.0):
    return PolynomialPotential(4, (v1, v2, v3))


def test_leading_coefficient_closed_forms():
    assert leading_bs_coefficient(4) == pytest.approx(QUARTIC_B_LEADING, rel=1e-14)
    # N = 1: 2 sqrt(pi) Gamma(1) / Gamma(5/2) = 8/3
    assert leading_bs_coefficient(1) == pytest.approx(8.0 / 3.0, rel=1e-13)


def test_second_coefficient_is_linear_in_v1():
    exp = closed_form_expansion(PolynomialPotential(4, (2.0, 0.0, 0.0)), 2)
    assert exp.coefficients[1] == pytest.approx(-2.0, abs=1e-14)


def test_homogeneous_quartic_ladder_is_sparse():
    coeffs = asymptotic_coefficients(quartic())
    nonzero = {a: c for a, c in coeffs.items() if abs(c) > 0}
    assert set(nonzero) == {0.75, -0.75}
    assert nonzero[0.75] == pytest.approx(QUARTIC_B_LEADING, rel=1e-12)
    assert nonzero[-0.75].real == pytest.approx(-0.29953505868389796, rel=1e-10)
    assert abs(nonzero[-0.75].imag) < 1e-14


def test_ladder_reproduces_oracle_counting(q4pq2_interleaved):
    """B(E_n)/(2 pi) - 1/2 must hit the integers on true eigenvalues."""
    tail = seed_expansion(quartic(1.0))
    n = np.arange(len(q4pq2_interleaved), dtype=float)
    b = tail.counting(q4pq2_interleaved)
    resid = np.abs(b / (2.0 * math.pi) - (n + 0.5))
    # truncation error decays with n; the high end is sharp
    assert resid[-8:].max() < 2e-7
    assert resid[8:].max() < 2e-4


def test_ladder_reproduces_oracle_counting_nonsymmetric(cubic_dirichlet):
    tail = seed_expansion(PolynomialPotential(4, (-1.0, 0.0, 0.125)))
    n = 2.0 * np.arange(len(cubic_dirichlet)) + 1.0
    b = tail.counting(cubic_dirichlet)
    resid = np.abs(b / (2.0 * math.pi) - (n + 0.5))
    assert resid[-6:].max() < 5e-6


def test_regularized_action_closed_form_homogeneous():
    """For V = q^4 the finite-part action is b E^mu / (4 sin pi mu)."""
    mu = 0.75
    for lam in (0.7, 2.0 + 1.5j):
        action = regularized_action(quartic(), lam)
        expected = QUARTIC_B_LEADING * complex(lam) ** mu / (4.0 * math.sin(math.pi * mu))
        assert action == pytest.approx(expected, rel=1e-10)


def test_quantum_correction_matches_ladder_sum():
    """Classical action + first correction reproduce the ladder up to its
    truncation order: the defect must decay like the first dropped power."""
    potential = quartic(1.0)
    coeffs = asymptotic_coefficients(potential)

    def defect(lam):
        total = regularized_action(potential, lam) + quantum_action_correction(
            potential, lam
        )
        ladder = sum(
            c / (4.0 * math.sin(math.pi * a)) * complex(lam) ** a
            for a, c in coeffs.items()
            if abs(c) > 0
        )
        return total - ladder

    d1, d2 = defect(8.0), defect(32.0)
    assert abs(defect(64.0)) / abs(regularized_action(potential, 64.0)) < 1e-7
    # first dropped exponent is mu - 3 = -2.25
    rate = math.log(abs(d2) / abs(d1)) / math.log(32.0 / 8.0)
    assert rate == pytest.approx(-2.25, abs=0.35)


def test_expansion_rotation_weights():
    tail = seed_expansion(quartic(1.0))
    rotated = tail.rotated(1)
    phi = 2.0 * math.pi / 3.0
    for a, b, r in zip(tail.exponents, tail.coefficients, rotated.coefficients):
        j = round(4 * (0.75 - a))
        assert r == pytest.approx(b * np.exp(1j * j * phi / 2.0), abs=1e-12)
    # three even-quartic steps close the orbit
    closed = tail.rotated(3)
    for b, c in zip(tail.coefficients, closed.coefficients):
        assert c == pytest.approx(b, abs=1e-12)


def test_expansion_serialization_round_trip():
    tail = seed_expansion(quartic(-1.0))
    again = BSExpansion.from_dict(tail.to_dict())
    assert again.exponents == tail.exponents
    np.testing.assert_allclose(again.coefficients, tail.coefficients, rtol=0, atol=0)


@given(st.integers(min_value=0, max_value=40))
@settings(max_examples=25, deadline=None)
def test_level_law_inversion_round_trip(n):
    tail = seed_expansion(quartic(1.0))
    e = tail.levels([n])[0]
    assert tail.counting(e).real / (2.0 * math.pi) - 0.5 == pytest.approx(n, abs=1e-10)


def test_semiclassical_level_rejects_negative_index():
    with pytest.raises(ValueError):
        semiclassical_level(seed_expansion(quartic()), -1)


def test_fit_requires_reference_levels():
    with pytest.raises(FitUnderdeterminedError):
        bs_coefficients(quartic(), 14)


def test_fit_extends_exact_part(q4pq2_interleaved):
    """Fitted negative-exponent terms must sharpen the counting residual."""
    exact = seed_expansion(quartic(1.0))
    fitted = bs_coefficients(quartic(1.0), 14, q4pq2_interleaved, k_fit_min=24)
    # exact part is untouched
    np.testing.assert_allclose(
        fitted.coefficients[: len(exact.coefficients)], exact.coefficients,
        rtol=0, atol=1e-12,
    )
    n = np.arange(30, len(q4pq2_interleaved), dtype=float)
    e = q4pq2_interleaved[30:]
    resid_exact = np.abs(exact.counting(e) / (2 * math.pi) - (n + 0.5))
    resid_fit = np.abs(fitted.counting(e) / (2 * math.pi) - (n + 0.5))
    assert resid_fit.max() < resid_exact.max()


def test_exponents_must_decrease():
    with pytest.raises(ValueError):
        BSExpansion(4, (0.75, 0.75), (1.0, 2.0))
