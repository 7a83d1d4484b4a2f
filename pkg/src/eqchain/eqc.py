"""Exact quantization conditions coupling neighboring spectrum chains.

Each level E of chain ell must satisfy
log D(-e^{-i phi} E; chain ell+1) - log D(-e^{+i phi} E; chain ell-1)
= pi i [k + 1/2 +/- (N-2)/(2(N+2))],
with the upper sign for the Neumann (+) sector and k the global quantum
number (even for +, odd for -).  This module evaluates the residual of that
condition and performs damped single-level Newton updates; the iteration
schemes that sweep whole systems live elsewhere.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .potential import PolynomialPotential, spectral_symmetry_angle
from .specdet import PoleProximityError, SpectrumChain, log_det


class LevelStuckError(RuntimeError):
    """Newton could not decrease the residual; carries the best iterate."""

    def __init__(self, message: str, best: complex, residual: float):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True)
class ChainSystem:
    """All chains of one parity, indexed by the sector ell mod L.

    ``potentials`` holds the rotated coefficient orbit v^[ell].  For a real
    base potential, chain L-ell carries the conjugate spectrum of chain ell;
    schemes may enforce that pairing explicitly.
    """

    parity: str
    chains: tuple[SpectrumChain, ...]
    potentials: tuple[PolynomialPotential, ...]

    def __post_init__(self):
        if not self.chains:
            raise ValueError("a chain system needs at least one chain")
        k_max = self.chains[0].k_max
        for chain in self.chains:
            if chain.parity != self.parity:
                raise ValueError("all chains must share the system parity")
            if chain.k_max != k_max:
                raise ValueError("all chains must share k_max")
        if len(self.potentials) != len(self.chains):
            raise ValueError("need one potential per chain")

    @property
    def order(self) -> int:
        return len(self.chains)

    @property
    def degree(self) -> int:
        return self.potentials[0].degree

    @property
    def k_max(self) -> int:
        return self.chains[0].k_max

    def chain(self, ell: int) -> SpectrumChain:
        return self.chains[ell % self.order]

    def with_chain(self, ell: int, chain: SpectrumChain) -> "ChainSystem":
        chains = list(self.chains)
        chains[ell % self.order] = chain
        return replace(self, chains=tuple(chains))

    def with_level(self, ell: int, k: int, value: complex) -> "ChainSystem":
        return self.with_chain(ell, self.chain(ell).with_level(k, value))

    def conjugate_partner(self, ell: int) -> int:
        return (-ell) % self.order


def even_levels_via_dw(
    system: ChainSystem,
    count: int,
    guesses=None,
    tol: float = 1e-10,
    max_iter: int = 60,
) -> np.ndarray:
    """Even-sector eigenvalues recovered from a converged Dirichlet system.

    The bilinear identity
    e^{i phi/4} D^+(e^{-i phi} lam, v^[l+1]) D^-(lam, v^[l])
    - e^{-i phi/4} D^+(lam, v^[l]) D^-(e^{-i phi} lam, v^[l+1]) = 2i,
    written at lam_l = e^{-i l phi} lam for l = 0..L-1, closes cyclically and
    is linear in the Neumann values x_l = D^+(e^{-i l phi} lam, v^[l]) once
    the Dirichlet values y_l are known from the chains.  Even eigenvalues are
    the zeros of x_0(lam) at lam = -E, found by a secant search seeded from
    the semiclassical level law.
    """
    if system.parity != "-":
        raise ValueError("even levels via the bilinear identity need Dirichlet chains")
    from .semiclassics import seed_expansion

    phi = spectral_symmetry_angle(system.degree)
    order = system.order

    def x0(lam: complex) -> complex:
        y = np.array(
            [
                cmath.exp(log_det(system.chain(ell), cmath.exp(-1j * ell * phi) * lam))
                for ell in range(order)
            ]
        )
        mat = np.zeros((order, order), dtype=complex)
        for ell in range(order):
            nxt = (ell + 1) % order
            mat[ell, nxt] += cmath.exp(1j * phi / 4.0) * y[ell]
            mat[ell, ell] += -cmath.exp(-1j * phi / 4.0) * y[nxt]
        rhs = np.full(order, 2.0j)
        return complex(np.linalg.solve(mat, rhs)[0])

    if guesses is None:
        tail = seed_expansion(system.potentials[0])
        guesses = tail.levels(2 * np.arange(count))
    roots = []
    for g in np.asarray(guesses, dtype=complex)[:count]:
        e0 = complex(g)
        e1 = e0 * (1.0 + 1e-4) + 1e-7
        f0, f1 = x0(-e0), x0(-e1)
        for _ in range(max_iter):
            if f1 == f0:
                break
            e2 = e1 - f1 * (e1 - e0) / (f1 - f0)
            e0, f0, e1 = e1, f1, e2
            if abs(e1 - e0) < tol * max(1.0, abs(e1)):
                f1 = x0(-e1)
                break
            f1 = x0(-e1)
        roots.append(e1)
    return np.asarray(roots, dtype=complex)


def rhs_phase(degree: int, parity: str, k: int) -> complex:
    """pi i [k + 1/2 +/- (N-2)/(2(N+2))]; k is the global quantum number."""
    if parity == "+":
        if k % 2:
            raise ValueError("Neumann levels carry even quantum numbers")
        sign = 1.0
    elif parity == "-":
        if k % 2 == 0:
            raise ValueError("Dirichlet levels carry odd quantum numbers")
        sign = -1.0
    else:
        raise ValueError(f"parity must be '+' or '-', got {parity!r}")
    return 1j * math.pi * (k + 0.5 + sign * (degree - 2.0) / (2.0 * (degree + 2.0)))


def _global_quantum_number(parity: str, k_local: int) -> int:
    return 2 * k_local + (1 if parity == "-" else 0)


def eqc_residual(system: ChainSystem, ell: int, k: int, energy: complex) -> complex:
    """Residual of the quantization condition for level k (sector-local) of
    chain ell, evaluated at the trial energy."""
    phi = spectral_symmetry_angle(system.degree)
    energy = complex(energy)
    lhs = log_det(system.chain(ell + 1), -cmath.exp(-1j * phi) * energy) - log_det(
        system.chain(ell - 1), -cmath.exp(1j * phi) * energy
    )
    return lhs - rhs_phase(system.degree, system.parity, _global_quantum_number(system.parity, k))


def _pole_positions(system: ChainSystem, ell: int) -> np.ndarray:
    """Energies at which either neighboring determinant has a zero."""
    phi = spectral_symmetry_angle(system.degree)
    left = np.asarray(system.chain(ell + 1).levels) * cmath.exp(1j * phi)
    right = np.asarray(system.chain(ell - 1).levels) * cmath.exp(-1j * phi)
    return np.concatenate((left, right))


def newton_update_level(
    system: ChainSystem,
    ell: int,
    k: int,
    tol_newton: float = 1e-10,
    max_iter: int = 20,
    max_halvings: int = 8,
) -> complex:
    """Damped Newton on the quantization residual for one level.

    Starts from the current chain value; the derivative is a central finite
    difference with step 1e-6 max(1, |E|).  The step is capped at 40% of
    the local level spacing so the update cannot leave the level's own
    basin (the residual jumps by multiples of 2 pi i across neighboring
    zeros), and steps that would land within 1e-10 of a determinant zero
    are clamped to half the distance to it.  Raises LevelStuckError
    (carrying the best iterate) when no damped step decreases the residual.
    """
    poles = _pole_positions(system, ell)
    own = system.chain(ell).levels
    e = complex(own[k])
    spacing = min(
        abs(own[k] - own[k - 1]) if k > 0 else np.inf,
        abs(own[k + 1] - own[k]) if k + 1 < len(own) else np.inf,
    )
    if not np.isfinite(spacing):
        spacing = abs(e)
    max_step = 0.4 * spacing
    r = eqc_residual(system, ell, k, e)
    for _ in range(max_iter):
        if abs(r) < tol_newton:
            return e
        h = 1e-6 * max(1.0, abs(e))
        try:
            dr = (eqc_residual(system, ell, k, e + h) - eqc_residual(system, ell, k, e - h)) / (2.0 * h)
        except PoleProximityError:
            dr = 0.0
        if dr == 0.0:
            raise LevelStuckError("vanishing residual derivative", e, abs(r))
        step = -r / dr
        if abs(step) > max_step:
            step *= max_step / abs(step)
        accepted = False
        for _ in range(max_halvings + 1):
            e_new = e + step
            d = np.min(np.abs(e_new - poles))
            if d < 1e-10:
                nearest = poles[int(np.argmin(np.abs(e_new - poles)))]
                step = step * (0.5 * abs(nearest - e) / max(abs(step), 1e-300))
                e_new = e + step
            try:
                r_new = eqc_residual(system, ell, k, e_new)
            except PoleProximityError:
                step *= 0.5
                continue
            if abs(r_new) < abs(r):
                e, r = e_new, r_new
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise LevelStuckError("damping ladder exhausted", e, abs(r))
    if abs(r) < tol_newton:
        return e
    raise LevelStuckError("iteration limit reached", e, abs(r))
