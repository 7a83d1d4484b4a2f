"""Fixed-point iteration over the coupled chain system.

A sweep visits the chains in a schedule and Newton-updates every explicit
level against the quantization conditions; repeating sweeps drives the
system to the joint fixed point where all conditions hold simultaneously.
Several refresh policies are provided because their convergence behavior
differs sharply away from the pure quartic case; the schedule itself is
data, so scheme comparisons are configuration sweeps.

The seed tails carry the exact level-law coefficients through the first
quantum correction, which is already sharper than anything a fit to the
finite explicit window can deliver; optional tail refits against the
chain's own converged levels remain available for experimentation but are
off by default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .eqc import ChainSystem, LevelStuckError, newton_update_level
from .potential import (
    PolynomialPotential,
    check_admissibility,
    rotate_potential,
    symmetry_order,
)
from .semiclassics import (
    FitUnderdeterminedError,
    bs_coefficients,
    seed_expansion,
)
from .specdet import PoleProximityError, SpectrumChain, model_levels

SCHEME_KINDS = (
    "full-cycle-refresh",
    "alternating-immediate",
    "conjugate-symmetrized",
    "custom-sequence",
)


@dataclass(frozen=True)
class SchemeConfig:
    """How a sweep visits and refreshes the chains.

    ``sequence`` is required for the custom-sequence kind; entries outside
    the actual symmetry order of the potential at hand are skipped, so one
    schedule can serve families whose order varies (e.g. shifted potentials
    that degenerate to a smaller orbit at zero shift).
    """

    kind: str = "alternating-immediate"
    sequence: tuple[int, ...] | None = None
    k_max: int = 48
    tol_fixed: float = 1e-9
    max_sweeps: int = 200
    enforce_conjugation: bool = False
    tol_newton: float = 1e-10
    tail_refits: int = 0
    n_tail_terms: int | None = None
    k_fit_min: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "custom-sequence":
            if not self.sequence:
                raise ValueError("custom-sequence requires a sequence")
            object.__setattr__(self, "sequence", tuple(int(s) for s in self.sequence))
        if self.k_max < 4:
            raise ValueError("k_max must be at least 4")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sequence": list(self.sequence) if self.sequence else None,
            "k_max": self.k_max,
            "tol_fixed": self.tol_fixed,
            "max_sweeps": self.max_sweeps,
            "enforce_conjugation": self.enforce_conjugation,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-sweep sup-norm deltas and the verdict of a solve."""

    deltas: tuple[float, ...]
    contraction_ratio: float
    converged: bool
    sweeps_used: int
    stuck_levels: tuple[tuple[int, int], ...] = ()

    def to_dict(self) -> dict:
        return {
            "deltas": list(self.deltas),
            "contraction_ratio": self.contraction_ratio,
            "converged": self.converged,
            "sweeps_used": self.sweeps_used,
            "stuck_levels": [list(s) for s in self.stuck_levels],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _contraction_ratio(deltas) -> float:
    """Geometric-mean delta ratio over (at most) the last 5 sweeps."""
    if len(deltas) < 2:
        return float("nan")
    m = min(5, len(deltas) - 1)
    a = max(deltas[-1 - m], 1e-300)
    b = max(deltas[-1], 1e-300)
    return float((b / a) ** (1.0 / m))


def initialize_chains(
    potential: PolynomialPotential, parity: str, config: SchemeConfig
) -> ChainSystem:
    """Seed every chain of the system with semiclassical levels.

    The base sector gets the level-law levels of the seed expansion; each
    rotated sector gets the correspondingly rotated expansion, so that the
    seeds already satisfy the rotation consistency of homogeneous
    potentials exactly.
    """
    check_admissibility(potential)
    order = symmetry_order(potential)
    base_tail = seed_expansion(potential)
    chains = []
    potentials = []
    for ell in range(order):
        tail = base_tail.rotated(ell)
        levels = model_levels(tail, parity, 0, config.k_max)
        chains.append(SpectrumChain(ell, parity, levels, tail))
        potentials.append(rotate_potential(potential, ell))
    return ChainSystem(parity, tuple(chains), tuple(potentials))


def _schedule(system: ChainSystem, config: SchemeConfig) -> tuple[int, ...]:
    order = system.order
    if config.kind == "custom-sequence":
        return tuple(s for s in config.sequence if 0 <= s < order)
    if config.kind == "conjugate-symmetrized":
        return tuple(range(order // 2 + 1))
    return tuple(range(order))


def _mirror(system: ChainSystem, ell: int) -> ChainSystem:
    """Copy chain ell onto its conjugate partner (realness for self-pairs)."""
    partner = system.conjugate_partner(ell)
    src = system.chain(ell)
    if partner % system.order == ell % system.order:
        levels = tuple(complex(e.real, 0.0) for e in src.levels)
        return system.with_chain(ell, SpectrumChain(src.ell, src.parity, levels, src.tail))
    return system.with_chain(partner, src.conjugated(partner))


def sweep(system: ChainSystem, config: SchemeConfig):
    """One full pass of Newton updates over the schedule.

    Returns (new system, sup-norm delta, stuck levels).  Stuck levels keep
    their previous value; the sweep itself never aborts.
    """
    old = system
    schedule = _schedule(system, config)
    mirror = config.enforce_conjugation or config.kind == "conjugate-symmetrized"
    stuck: list[tuple[int, int]] = []

    if config.kind == "full-cycle-refresh":
        updates = {}
        for ell in schedule:
            for k in range(config.k_max + 1):
                try:
                    updates[(ell, k)] = newton_update_level(
                        system, ell, k, tol_newton=config.tol_newton
                    )
                except (LevelStuckError, PoleProximityError):
                    stuck.append((ell, k))
        for (ell, k), value in updates.items():
            system = system.with_level(ell, k, value)
        if mirror:
            for ell in range(system.order // 2 + 1):
                system = _mirror(system, ell)
    else:
        for ell in schedule:
            for k in range(config.k_max + 1):
                try:
                    value = newton_update_level(
                        system, ell, k, tol_newton=config.tol_newton
                    )
                except (LevelStuckError, PoleProximityError):
                    stuck.append((ell, k))
                    continue
                system = system.with_level(ell, k, value)
            if mirror:
                system = _mirror(system, ell)

    delta = 0.0
    for ell in range(system.order):
        a = np.asarray(system.chain(ell).levels)
        b = np.asarray(old.chain(ell).levels)
        delta = max(delta, float(np.max(np.abs(a - b))))
    return system, delta, stuck


def _refit_tails(system: ChainSystem, potential: PolynomialPotential, config: SchemeConfig):
    """Refit the level-law tail to the base chain's own levels.

    Returns the system with refreshed (rotated) tails, or None when the fit
    is unavailable or changes the junction anchor by less than the stopping
    tolerance (no further refit is useful).
    """
    seed = seed_expansion(potential)
    n_terms = config.n_tail_terms or len(seed.exponents) + 4
    k_fit_min = config.k_fit_min
    if k_fit_min is None:
        k_fit_min = max(4, (2 * (config.k_max + 1)) // 3)
    delta_parity = 1 if system.parity == "-" else 0
    quantum_numbers = 2 * np.arange(config.k_max + 1) + delta_parity
    levels = np.asarray(system.chain(0).levels)
    try:
        tail = bs_coefficients(
            potential,
            n_terms,
            levels,
            k_fit_min=2 * k_fit_min,
            quantum_numbers=quantum_numbers,
        )
    except (FitUnderdeterminedError, ValueError):
        return None
    old_anchor = model_levels(system.chain(0).tail, system.parity, config.k_max, config.k_max)[0]
    new_anchor = model_levels(tail, system.parity, config.k_max, config.k_max)[0]
    if abs(new_anchor - old_anchor) < 0.1 * config.tol_fixed * max(1.0, abs(new_anchor)):
        return None
    chains = tuple(
        SpectrumChain(c.ell, c.parity, c.levels, tail.rotated(c.ell))
        for c in system.chains
    )
    return replace(system, chains=chains)


def solve_spectrum(
    potential: PolynomialPotential, parity: str, config: SchemeConfig
):
    """Iterate sweeps (with tail refits) to the joint fixed point.

    Returns (system, ConvergenceReport).  Non-convergence is reported, not
    raised; the best system reached is returned either way.  The contraction
    ratio is measured on the final uninterrupted stretch of sweeps so that
    tail-refit discontinuities do not pollute it.
    """
    system = initialize_chains(potential, parity, config)
    deltas: list[float] = []
    cycle_deltas: list[float] = []
    last_ratio = float("nan")
    stuck_all: set[tuple[int, int]] = set()
    converged = False
    refits_left = config.tail_refits
    while len(deltas) < config.max_sweeps:
        system, delta, stuck = sweep(system, config)
        deltas.append(delta)
        cycle_deltas.append(delta)
        stuck_all.update(stuck)
        if delta < config.tol_fixed:
            if len(cycle_deltas) >= 3:
                last_ratio = _contraction_ratio(cycle_deltas)
            if refits_left > 0:
                refreshed = _refit_tails(system, potential, config)
                refits_left -= 1
                if refreshed is not None:
                    system = refreshed
                    cycle_deltas = []
                    continue
            converged = True
            break
        if len(cycle_deltas) >= 6 and all(
            cycle_deltas[-i] > cycle_deltas[-i - 1] for i in range(1, 6)
        ):
            break
        if delta > 1e3 * cycle_deltas[0]:
            break
    if math.isnan(last_ratio) or (not converged and len(cycle_deltas) >= 3):
        last_ratio = _contraction_ratio(cycle_deltas)
    report = ConvergenceReport(
        tuple(deltas), last_ratio, converged, len(deltas), tuple(sorted(stuck_all))
    )
    return system, report


def _free_coordinates(system: ChainSystem, config: SchemeConfig):
    """(ell, k, component) triples spanning the sweep map's free variables."""
    mirror = config.enforce_conjugation or config.kind == "conjugate-symmetrized"
    real_base = all(p.is_real for p in system.potentials[:1])
    coords = []
    if mirror:
        ells = range(system.order // 2 + 1)
    else:
        ells = range(system.order)
    for ell in ells:
        self_pair = mirror and system.conjugate_partner(ell) % system.order == ell
        parts = ("re",) if (self_pair and real_base) else ("re", "im")
        for k in range(config.k_max + 1):
            for part in parts:
                coords.append((ell, k, part))
    return coords


def _pack(system: ChainSystem, coords) -> np.ndarray:
    out = np.empty(len(coords))
    for i, (ell, k, part) in enumerate(coords):
        e = system.chain(ell).levels[k]
        out[i] = e.real if part == "re" else e.imag
    return out


def _perturb(system: ChainSystem, config: SchemeConfig, coord, h: float) -> ChainSystem:
    ell, k, part = coord
    e = system.chain(ell).levels[k]
    e_new = e + (h if part == "re" else 1j * h)
    system = system.with_level(ell, k, e_new)
    mirror = config.enforce_conjugation or config.kind == "conjugate-symmetrized"
    if mirror and system.conjugate_partner(ell) % system.order != ell % system.order:
        system = _mirror(system, ell)
    return system


def linearized_dynamics(system: ChainSystem, config: SchemeConfig, h_rel: float = 1e-7):
    """Finite-difference Jacobian of the sweep map at a fixed point.

    The coordinates are the real/imaginary parts of all explicit levels,
    restricted to the representative chains when conjugation is enforced.
    Returns (jacobian, eigenvalues sorted by descending modulus); the
    spectral radius is the scheme's local contraction ratio.
    """
    coords = _free_coordinates(system, config)
    swept, _, _ = sweep(system, config)
    f0 = _pack(swept, coords)
    jac = np.empty((len(coords), len(coords)))
    for i, coord in enumerate(coords):
        ell, k, _ = coord
        h = h_rel * max(1.0, abs(system.chain(ell).levels[k]))
        pert = _perturb(system, config, coord, h)
        swept_i, _, _ = sweep(pert, config)
        jac[:, i] = (_pack(swept_i, coords) - f0) / h
    eigenvalues = np.linalg.eigvals(jac)
    order = np.argsort(-np.abs(eigenvalues))
    return jac, eigenvalues[order]
