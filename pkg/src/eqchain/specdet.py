"""Zeta-regularized spectral determinants from level chains.

A chain holds one rotation sector's explicit eigenvalues up to k_max plus a
level-law tail.  log D^+/-(lambda) is the regularized sum of log(E_k + lambda)
over the sector: explicit terms up to a junction index, then the Euler-
Maclaurin continuation of the tail model.  The divergent part of the tail is
removed termwise by the analytic continuation in the level-law exponents, the
same subtraction that defines the determinant; the finite lambda-dependent
remainder is a convergent integral done by Gauss-Jacobi quadrature.

Branches of the complex logarithms are fixed by continuity from lambda = 0,
where every chain level sits near the positive real axis.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .potential import spectral_symmetry_angle
from .semiclassics import BSExpansion


class PoleProximityError(ArithmeticError):
    """lambda is too close to a determinant zero for a reliable evaluation."""


_PARITY_OFFSET = {"+": 0, "-": 1}


@dataclass(frozen=True)
class SpectrumChain:
    """One rotation sector: explicit levels k = 0..k_max plus a tail model.

    ``levels[k]`` is the sector-local eigenvalue of parity ``parity`` (global
    quantum number 2k or 2k+1).  ``tail`` is the level law of the sector's
    rotated potential, covering both parities through the global index.
    """

    ell: int
    parity: str
    levels: tuple[complex, ...]
    tail: BSExpansion

    def __post_init__(self):
        if self.parity not in _PARITY_OFFSET:
            raise ValueError(f"parity must be '+' or '-', got {self.parity!r}")
        levels = tuple(complex(e) for e in self.levels)
        if not levels:
            raise ValueError("a chain needs at least one explicit level")
        if any(not np.isfinite([e.real, e.imag]).all() or e == 0 for e in levels):
            raise ValueError("chain levels must be finite and nonzero")
        object.__setattr__(self, "levels", levels)
        anchor = model_levels(self.tail, self.parity, self.k_max, self.k_max)[0]
        if abs(anchor - levels[-1]) > 0.10 * abs(anchor):
            raise ValueError(
                f"tail model disagrees with the last explicit level by more "
                f"than 10% ({anchor:.6g} vs {levels[-1]:.6g})"
            )

    @property
    def k_max(self) -> int:
        return len(self.levels) - 1

    def with_level(self, k: int, value: complex) -> "SpectrumChain":
        new = list(self.levels)
        new[k] = complex(value)
        return SpectrumChain(self.ell, self.parity, tuple(new), self.tail)

    def conjugated(self, new_ell: int) -> "SpectrumChain":
        return SpectrumChain(
            new_ell,
            self.parity,
            tuple(e.conjugate() for e in self.levels),
            self.tail.conjugated(),
        )


@functools.lru_cache(maxsize=512)
def model_levels(tail: BSExpansion, parity: str, k_lo: int, k_hi: int) -> tuple[complex, ...]:
    """Tail-model levels for sector-local indices k_lo..k_hi inclusive."""
    delta = _PARITY_OFFSET[parity]
    n = 2.0 * np.arange(k_lo, k_hi + 1) + delta
    return tuple(complex(e) for e in tail.levels(n))


def _tracked_args(
    levels: np.ndarray, lam: complex, bow: float = 0.0, max_splits: int = 18
) -> np.ndarray:
    """Continuous arguments of (E_k + lambda) along a path from 0 to lambda.

    Starts at the principal arguments (levels lie near the positive real
    axis) and subdivides the path until no step rotates any factor by pi/2
    or more.  ``bow`` arcs the path sideways by bow*|lambda| at its midpoint;
    the straight path can run through a determinant zero when lambda sits on
    the chain's own axis, in which case a bowed detour reaches the same
    endpoint (the resulting branch is path-dependent only by multiples of
    2 pi i, which callers needing exp(log D) may ignore).
    """
    args0 = np.angle(levels)
    steps = 1
    while True:
        t = np.linspace(0.0, 1.0, steps + 1)
        path = t * lam + 1j * bow * abs(lam) * t * (1.0 - t)
        prev = levels + path[0]
        args = args0.copy()
        ok = True
        for pt in path[1:]:
            cur = levels + pt
            if np.min(np.abs(cur)) < 1e-12 * (1.0 + np.max(np.abs(levels))):
                raise PoleProximityError("branch path passes through a determinant zero")
            d = np.angle(cur / prev)
            if np.max(np.abs(d)) >= 0.5 * math.pi:
                ok = False
                break
            args += d
            prev = cur
        if ok:
            return args
        steps *= 2
        if steps > 2**max_splits:
            raise PoleProximityError("branch tracking did not resolve the path")


@functools.lru_cache(maxsize=64)
def _jacobi_rule(n: int, beta: float):
    """Nodes/weights for int_0^1 t^beta h(t) dt, endpoint weight at t = 0."""
    x, w = roots_jacobi(n, 0.0, beta)
    return (x + 1.0) / 2.0, w * 2.0 ** (-beta - 1.0)


def _tail_integral(tail: BSExpansion, x: complex, lam: complex, log1pc: complex, n_quad: int) -> complex:
    """Regularized (1/4 pi) int_{E_J}^inf log(E + lambda) B'(E) dE.

    Termwise in the level law: the log E part continues to
    -b_a x^a (log x - 1/a); the log(1 + lambda/E) part is the convergent
    integral b_a x^a [ -log(1+c) + c/(1-a) - c^2 int_0^1 t^(1-a)/(1+ct) dt ]
    with c = lambda/x, valid for every exponent a < 2 by continuation.
    """
    c = lam / x
    total = 0.0 + 0.0j
    log_x = cmath.log(x)
    for a, b in zip(tail.exponents, tail.coefficients):
        if abs(a) < 1e-14:
            continue  # constant term drops out of B'
        xa = x**a
        total += -b * xa * (log_x - 1.0 / a)
        t, w = _jacobi_rule(n_quad, 1.0 - a)
        denom = 1.0 + c * t
        if np.min(np.abs(denom)) < 1e-3:
            raise PoleProximityError("lambda too close to the tail of the spectrum")
        g = np.dot(w, 1.0 / denom)
        total += b * xa * (-log1pc + c / (1.0 - a) - c * c * g)
    return total / (4.0 * math.pi)


def log_det(
    chain: SpectrumChain,
    lam: complex,
    junction_buffer: int = 8,
    n_explicit: int | None = None,
    n_quad: int = 48,
) -> complex:
    """log D(lambda) of the chain's sector and parity.

    Sums log(E_k + lambda) over explicit levels (optionally truncated at
    ``n_explicit`` with tail-model substitution beyond), bridges with model
    levels up to the junction index, and closes with the Euler-Maclaurin
    tail: half-term, derivative corrections, and the regularized integral
    of the level law.
    """
    lam = complex(lam)
    n_expl = len(chain.levels) if n_explicit is None else min(n_explicit, len(chain.levels))
    j_cut = chain.k_max + 1 + junction_buffer  # first index handled by the integral
    explicit = np.array(chain.levels[:n_expl], dtype=complex)
    bridge = np.array(model_levels(chain.tail, chain.parity, n_expl, j_cut), dtype=complex)
    all_e = np.concatenate((explicit, bridge))  # indices 0..j_cut
    if np.min(np.abs(all_e + lam)) < 1e-12 * (1.0 + np.max(np.abs(all_e))):
        raise PoleProximityError("lambda within 1e-12 of a chain level")

    args = None
    for bow in (0.0, 0.25, -0.25):
        try:
            args = _tracked_args(all_e, lam, bow=bow)
            break
        except PoleProximityError:
            continue
    if args is None:
        raise PoleProximityError("branch tracking failed along every path")
    logs = np.log(np.abs(all_e + lam)) + 1j * args
    total = complex(np.sum(logs[:-1]) + 0.5 * logs[-1])

    # Euler-Maclaurin derivative terms at the junction, h(j) = log(E(j)+lam)
    # with dE/dj = 4 pi / B'(E): -h'(J)/12 + h'''(J)/720, the third
    # derivative from a unit-step second difference of the exact h'.
    e_j = all_e[-1]
    neighbors = np.array(
        model_levels(chain.tail, chain.parity, j_cut - 1, j_cut + 1), dtype=complex
    )
    hp = 4.0 * math.pi / (chain.tail.counting_derivative(neighbors) * (neighbors + lam))
    total -= hp[1] / 12.0
    total += (hp[0] - 2.0 * hp[1] + hp[2]) / 720.0

    log1pc = logs[-1] - cmath.log(e_j)  # branch-consistent log(1 + lam/E_J)
    total += _tail_integral(chain.tail, e_j, lam, log1pc, n_quad)
    return total


def wronskian_residual(chains: dict, lam: complex) -> complex:
    """Defect of the bilinear determinant identity at lambda.

    ``chains`` maps (ell, parity) to SpectrumChain for ell in {0, 1} and both
    parities.  Returns
    e^{+i phi/4} D^+(e^{-i phi} lambda; v^[1]) D^-(lambda; v)
    - e^{-i phi/4} D^+(lambda; v) D^-(e^{-i phi} lambda; v^[1]) - 2i,
    which vanishes identically on exact spectral data.
    """
    degree = chains[(0, "+")].tail.degree
    phi = spectral_symmetry_angle(degree)
    lam = complex(lam)
    lam_rot = cmath.exp(-1j * phi) * lam
    term_a = cmath.exp(0.25j * phi) * cmath.exp(
        log_det(chains[(1, "+")], lam_rot) + log_det(chains[(0, "-")], lam)
    )
    term_b = cmath.exp(-0.25j * phi) * cmath.exp(
        log_det(chains[(0, "+")], lam) + log_det(chains[(1, "-")], lam_rot)
    )
    return term_a - term_b - 2.0j


def dump_chains(chains, stream) -> None:
    """Write chains as CSV rows (ell, parity, k, re(E), im(E))."""
    stream.write("ell,parity,k,re_E,im_E\n")
    for chain in chains:
        for k, e in enumerate(chain.levels):
            stream.write(
                f"{chain.ell},{chain.parity},{k},{e.real:.17g},{e.imag:.17g}\n"
            )


def load_chain_levels(stream) -> dict:
    """Read a chain CSV back into {(ell, parity): [E_0, E_1, ...]}."""
    out: dict = {}
    header = None
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line
            continue
        ell, parity, k, re, im = line.split(",")
        out.setdefault((int(ell), parity), {})[int(k)] = complex(float(re), float(im))
    return {
        key: [vals[k] for k in sorted(vals)] for key, vals in out.items()
    }
