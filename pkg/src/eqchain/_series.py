"""Truncated power series in x = 1/q for large-q asymptotics.

A series is a 1-D complex ndarray c with c[p] the coefficient of x^p.
All products are truncated at the common length.  These expansions feed the
momentum-function tail (V + lambda)^(1/2) ~ q^(N/2) f(1/q) and the
all-orders WKB symbol u(q) ~ q^(N/2) g(1/q).
"""

from __future__ import annotations

import numpy as np


def ser_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.convolve(a[:n], b[:n])[:n]


def ser_sqrt(a: np.ndarray, n: int) -> np.ndarray:
    """Square root of a series with a[0] = 1 (principal branch)."""
    if abs(a[0] - 1.0) > 1e-13:
        raise ValueError("ser_sqrt expects a series starting at 1")
    c = np.zeros(n, dtype=complex)
    c[0] = 1.0
    a = np.pad(a[:n], (0, max(0, n - len(a))))
    for p in range(1, n):
        s = np.dot(c[1:p], c[p - 1 : 0 : -1]) if p > 1 else 0.0
        c[p] = (a[p] - s) / 2.0
    return c

def ser_inv(a: np.ndarray, n: int) -> np.ndarray:
    """Reciprocal series; requires a[0] != 0."""
    c = np.zeros(n, dtype=complex)
    c[0] = 1.0 / a[0]
    a = np.pad(a[:n], (0, max(0, n - len(a))))
    for p in range(1, n):
        c[p] = -np.dot(a[1 : p + 1], c[p - 1 :: -1]) / a[0]
    return c


def momentum_series(coefficients, degree: int, lam: complex, n: int) -> np.ndarray:
    """Series f with (V(q) + lambda)^(1/2) = q^(N/2) f(1/q) for large q."""
    w = np.zeros(n, dtype=complex)
    for j, v in enumerate(coefficients, start=1):
        if j < n:
            w[j] += v
    if degree < n:
        w[degree] += lam
    w[0] += 1.0
    return ser_sqrt(w, n)


def wkb_symbol_series(coefficients, degree: int, lam: complex, n: int) -> np.ndarray:
    """All-orders WKB symbol g with u(q) = q^(N/2) g(1/q).

    u solves u^2 = Pi^2 + u''/(2u) - (3/4)(u'/u)^2, the exact condition for
    psi = u^(-1/2) exp(-int u) to satisfy the Schrodinger equation.
    Iterating from g = f gains accuracy order by order; the loop stops when
    the coefficients stabilize.
    """
    f = momentum_series(coefficients, degree, lam, n)
    f2 = ser_mul(f, f, n)
    half_n = degree / 2.0
    shift = degree + 2  # u''/(2u) etc. enter g^2 = f^2 + x^(N+2) (...)
    p = np.arange(n)
    g = f.copy()
    for _ in range(n + 2):
        dg = (half_n - p) * g  # q^(N/2-1) prefactor series of u'
        d2g = (half_n - 1 - p) * dg  # q^(N/2-2) prefactor series of u''
        ginv = ser_inv(g, n)
        corr = ser_mul(d2g, ginv, n) / 2.0
        ratio = ser_mul(dg, ginv, n)
        corr -= 0.75 * ser_mul(ratio, ratio, n)
        corr = np.concatenate((np.zeros(shift), corr))[:n]
        g_new = ser_sqrt(f2 + corr, n)
        if np.max(np.abs(g_new - g)) < 1e-16 * max(1.0, np.max(np.abs(g_new))):
            g = g_new
            break
        g = g_new
    return g


def regularized_tail_integral(
    series: np.ndarray, degree: int, cut: float, zero_tol: float | None = None
) -> complex:
    """Regularized integral of q^(N/2) * series(1/q) over [cut, infinity).

    Each monomial q^(N/2 - p) is integrated termwise as -cut^(N/2-p+1)/(N/2-p+1),
    the analytic continuation in the exponent of the convergent case.  A
    monomial with exponent exactly -1 marks the Z(0) != 0 pole; its
    coefficient must vanish (checked against ``zero_tol``).
    """
    p = np.arange(len(series))
    expo = degree / 2.0 - p + 1.0
    singular = np.isclose(expo, 0.0)
    if singular.any():
        bad = series[singular]
        # scale from coefficients below the singular slot: those are free of
        # the spectral parameter, which dominates the higher entries
        idx = int(np.argmax(singular))
        scale = max(1.0, float(np.max(np.abs(series[:idx]))) if idx else 1.0)
        tol = 1e-9 * scale if zero_tol is None else zero_tol
        if np.max(np.abs(bad)) > tol:
            raise ValueError(
                "1/q monomial survives in the tail expansion "
                f"(coefficient {bad[0]:.3e}): Z(0) != 0, regularization undefined"
            )
    expo_safe = np.where(singular, 1.0, expo)
    terms = np.where(singular, 0.0, -series * cut**expo_safe / expo_safe)
    return complex(terms.sum())
