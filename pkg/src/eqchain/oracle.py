"""Independent ODE-based reference solutions and spectra.

Everything here rests only on direct integration of -psi'' + (V+lambda) psi = 0:
recessive solutions started from high-order WKB data at large q, naturally
normalized values at the origin, eigenvalue shooting, and a finite-difference
matrix discretization as a second, fully independent cross-check.

The integrator is batched: one solve_ivp call advances the recessive solution
for a whole vector of spectral parameters at once, so a full spectrum costs
about as much as a single level.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

from . import _series
from .potential import PolynomialPotential, spectral_symmetry_angle, symmetry_order
from .semiclassics import closed_form_expansion, seed_expansion


class ShootingError(RuntimeError):
    """Eigenvalue shooting failed to converge or landed on the wrong index."""


@dataclass(frozen=True)
class OracleConfig:
    """Controls for the inward integration."""

    q_infinity: float | None = None  # None: automatic, beyond all turning points
    rtol: float = 1e-12
    atol: float = 1e-14
    normalization: str = "natural"  # "natural" or "raw"
    n_series: int = 44  # truncation of the large-q WKB series
    log_per_segment: float = 30.0  # max e-folds of growth between rescales


DEFAULT_CONFIG = OracleConfig()


def _auto_q_infinity(potential: PolynomialPotential, lam: complex) -> float:
    threshold = 1.0e4 + 10.0 * abs(lam)
    q = 1.0
    while abs(potential(q)) < threshold:
        q *= 1.05
        if q > 1e6:
            raise ValueError("potential grows too slowly for the oracle")
    return float(q)


def _segments(potential, lam, q_inf, q_stops, per_segment):
    """Descending breakpoints from q_inf to 0, bounding growth per segment.

    Growth follows Re sqrt(V + lambda): the recessive solution's amplitude
    only grows in the classically forbidden region, while in the oscillatory
    region it stays bounded, so the whole well may form a single segment.
    """
    grid = np.linspace(0.0, q_inf, 400)
    pi_vals = np.sqrt(np.asarray(potential(grid) + lam, dtype=complex)).real
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (pi_vals[1:] + pi_vals[:-1]) * np.diff(grid))))
    total = cum[-1]
    n_seg = max(1, int(math.ceil(total / per_segment)))
    targets = np.linspace(0.0, total, n_seg + 1)
    breaks = np.interp(targets, cum, grid)
    pts = set(float(b) for b in breaks)
    pts.update(float(q) for q in q_stops)
    pts.add(0.0)
    pts.add(float(q_inf))
    return sorted(pts, reverse=True)


def _wkb_initial_state(potential, lam, q_inf, n_series):
    """State (psi, psi') of the recessive solution at q_inf, plus the
    regularized action integral of the WKB symbol over [q_inf, inf)."""
    g = _series.wkb_symbol_series(potential.coefficients, potential.degree, lam, n_series)
    half_n = potential.degree / 2.0
    x = 1.0 / q_inf
    powers = x ** np.arange(n_series)
    u = q_inf**half_n * np.dot(g, powers)
    du = q_inf ** (half_n - 1.0) * np.dot((half_n - np.arange(n_series)) * g, powers)
    psi = u ** (-0.5)
    dpsi = (-u - du / (2.0 * u)) * psi
    tail = _series.regularized_tail_integral(g, potential.degree, q_inf)
    return complex(psi), complex(dpsi), complex(tail)


def _integrate_inward(potential, lams, q_stops, cfg, scale_plan=None, want_nodes=False):
    """Batched inward integration from q_infinity down to min(q_stops).

    ``lams`` is a 1-D array of spectral parameters integrated side by side.
    Returns (values, logscales, tails, nodes, plan): values[i] has shape
    (2, n) — scaled (psi, psi') at q_stops[i] for each lambda; the true
    recessive solution there is values[i] * exp(logscales[i]), normalized as
    psi ~ u^(-1/2) at q_infinity.  ``scale_plan`` freezes segment boundaries
    and rescale exponents so repeated calls are analytic in the lambdas
    (needed by the secant search).  ``nodes`` counts interior sign changes of
    Re psi on (0, q_infinity) per column.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = len(lams)
    coeffs = potential.full_coefficients()

    def rhs(q, y):
        v = coeffs[0]
        for c in coeffs[1:]:
            v = v * q + c
        dy = np.empty_like(y)
        dy[:n] = y[n:]
        dy[n:] = (v + lams) * y[:n]
        return dy

    if scale_plan is None:
        lam_big = lams[int(np.argmax(np.abs(lams)))]
        q_inf = cfg.q_infinity or _auto_q_infinity(potential, lam_big)
        breaks = _segments(potential, lam_big, q_inf, q_stops, cfg.log_per_segment)
        exps = []
        for a, b in zip(breaks[:-1], breaks[1:]):  # a > b
            g = np.linspace(b, a, 12)
            pv = np.sqrt(np.asarray(potential(g))[:, None] + lams[None, :]).real
            exps.append(np.trapezoid(pv, g, axis=0))
        scale_plan = (q_inf, breaks, exps)
    q_inf, breaks, exps = scale_plan

    y = np.empty(2 * n, dtype=complex)
    tails = np.empty(n, dtype=complex)
    for i, lam in enumerate(lams):
        psi0, dpsi0, tail = _wkb_initial_state(potential, lam, q_inf, cfg.n_series)
        y[i], y[n + i] = psi0, dpsi0
        tails[i] = tail
    logscale = np.zeros(n)
    stops = {round(float(q), 12) for q in q_stops}
    values, logscales, traces = {}, {}, []
    key0 = round(q_inf, 12)
    if key0 in stops:
        values[key0] = y.reshape(2, n).copy()
        logscales[key0] = logscale.copy()
    lam_scale = float(np.max(np.abs(lams)))
    for (a, b), s in zip(zip(breaks[:-1], breaks[1:]), exps):
        t_eval = None
        if want_nodes:
            n_pts = 24 + int(8.0 * (a - b) * math.sqrt(lam_scale) + 0.5)
            t_eval = np.linspace(a, b, n_pts)
            t_eval = t_eval[t_eval > 1e-12]  # boundary zero at q=0 is not a node
            if len(t_eval) < 2:
                t_eval = np.array([a, max(b, 1e-10)])
        sol = solve_ivp(
            rhs, (a, b), y, method="DOP853", rtol=cfg.rtol, atol=cfg.atol,
            t_eval=t_eval, dense_output=False,
        )
        if not sol.success:
            raise RuntimeError(f"ODE integration failed on [{b}, {a}]: {sol.message}")
        if want_nodes:
            traces.append(sol.y[:n].T)  # (n_pts, n)
        y = sol.y[:, -1].copy()
        key = round(float(b), 12)
        if key in stops:
            values[key] = y.reshape(2, n).copy()
            logscales[key] = logscale.copy()
        factor = np.exp(-s)
        y[:n] *= factor
        y[n:] *= factor
        logscale = logscale + s
    ordered = [values[round(float(q), 12)] for q in q_stops]
    ordered_ls = [logscales[round(float(q), 12)] for q in q_stops]
    nodes = None
    if want_nodes:
        # per-segment rescaling is by positive reals, so sign changes of the
        # concatenated raw traces count nodes correctly
        trace = np.concatenate(traces, axis=0)
        nodes = np.empty(n, dtype=int)
        for i in range(n):
            re = trace[:, i].real
            re = re[np.abs(re) > 1e-290]
            nodes[i] = int(np.sum(np.abs(np.diff(np.sign(re))) > 1))
    return ordered, ordered_ls, tails, nodes, scale_plan


def recessive_solution(potential, lam, q_points, cfg: OracleConfig = DEFAULT_CONFIG):
    """Values (psi, psi') of the recessive solution at the given points.

    In natural mode the solution carries the q0 = +infinity WKB normalization,
    built from the regularized action of the WKB symbol; in raw mode it is
    normalized to psi = u^(-1/2) at q_infinity (may overflow for deep points).
    """
    lam = complex(lam)
    q_points = list(q_points)
    vals, logs, tails, _, _ = _integrate_inward(potential, [lam], q_points, cfg)
    out = []
    for y, ls in zip(vals, logs):
        expo = tails[0] + ls[0] if cfg.normalization == "natural" else ls[0]
        factor = np.exp(expo)
        out.append((complex(y[0, 0] * factor), complex(y[1, 0] * factor)))
    return out


def natural_psi_at_zero(potential, lam, cfg: OracleConfig = DEFAULT_CONFIG):
    """Naturally normalized (psi(0), psi'(0)); psi(0) is the oracle value of
    the Dirichlet determinant at lambda, -psi'(0) of the Neumann one."""
    cfg = replace(cfg, normalization="natural")
    (pair,) = recessive_solution(potential, lam, [0.0], cfg)
    return pair


def _secant_levels(potential, comp, guesses, cfg, tol=1e-12, maxiter=60):
    """Vectorized secant search for zeros of the boundary defect.

    ``comp`` selects psi(0) (Dirichlet) or psi'(0) (Neumann); every column
    iterates until its own update stalls below ``tol``.  Returns the roots
    and the frozen scale plan for follow-up node counting.
    """
    plan = None

    def f(es):
        nonlocal plan
        vals, _, _, _, plan = _integrate_inward(potential, -es, [0.0], cfg, scale_plan=plan)
        return vals[0][comp]

    x0 = np.asarray(guesses, dtype=complex)
    x1 = x0 * (1.0 + 1e-4) + 1e-7
    f0, f1 = f(x0), f(x1)
    done = np.zeros(len(x0), dtype=bool)
    for _ in range(maxiter):
        denom = f1 - f0
        safe = np.where(denom == 0, 1.0, denom)
        step = np.where(done | (denom == 0), 0.0, f1 * (x1 - x0) / safe)
        x2 = x1 - step
        done |= np.abs(x2 - x1) < tol * np.maximum(1.0, np.abs(x2))
        if done.all():
            return x2, plan
        x0, f0 = x1, f1
        x1 = x2
        f1 = f(x1)
    raise ShootingError("secant search did not converge for some levels")


def shoot_eigenvalue(
    potential,
    parity: str,
    k: int,
    guess: complex,
    cfg: OracleConfig = DEFAULT_CONFIG,
    verify_nodes: bool | None = None,
):
    """Eigenvalue of sector-local index k by a secant search on the boundary
    defect psi(0) (Dirichlet) or psi'(0) (Neumann) at lambda = -E.

    For real potentials the node count of the eigenfunction is verified and a
    bisection fallback re-seeds the search if the root has the wrong index.
    """
    comp = 0 if parity == "-" else 1
    if verify_nodes is None:
        verify_nodes = potential.is_real
    roots, plan = _secant_levels(potential, comp, [complex(guess)], cfg)
    e = complex(roots[0])
    if verify_nodes:
        e = complex(e.real, 0.0)
        if _node_counts(potential, [e], cfg, plan)[0] != k:
            e = _bisect_reseed(potential, parity, k, cfg)
    return e


def _node_counts(potential, energies, cfg, plan=None):
    _, _, _, nodes, _ = _integrate_inward(
        potential, -np.asarray(energies, dtype=complex), [0.0], cfg,
        scale_plan=plan, want_nodes=True,
    )
    return nodes


def _bisect_reseed(potential, parity, k, cfg):
    """Bracket index k between semiclassical neighbors and bisect on the sign
    of the boundary defect (real potentials only)."""
    comp = 0 if parity == "-" else 1
    p = 0 if parity == "+" else 1
    bs = seed_expansion(potential)
    lo = bs.levels([max(0, 2 * k + p - 1)])[0].real * 0.5
    hi = bs.levels([2 * k + p + 1])[0].real * 1.5
    plans = {}  # keyed by batch width: rescale exponents are per-column

    def defect(es):
        es = np.asarray(es, dtype=complex)
        vals, _, _, _, plan = _integrate_inward(
            potential, -es, [0.0], cfg, scale_plan=plans.get(len(es))
        )
        plans[len(es)] = plan
        return vals[0][comp].real

    grid = np.linspace(lo, hi, 160)
    vals = defect(grid)
    crossings = [
        (grid[i], grid[i + 1])
        for i in range(len(grid) - 1)
        if np.sign(vals[i]) != np.sign(vals[i + 1])
    ]
    for a, b in crossings:
        fa = defect([a])[0]
        for _ in range(80):
            m = 0.5 * (a + b)
            fm = defect([m])[0]
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
            if b - a < 1e-13 * max(1.0, b):
                break
        e = complex(0.5 * (a + b))
        if _node_counts(potential, [e], cfg, plans.get(1))[0] == k:
            return e
    raise ShootingError(f"could not locate index-{k} eigenvalue by bisection")


def oracle_spectrum(
    potential,
    parity: str,
    count: int,
    cfg: OracleConfig = DEFAULT_CONFIG,
    verify_nodes: bool | None = None,
):
    """First ``count`` eigenvalues of one parity sector (real potential)."""
    comp = 0 if parity == "-" else 1
    p = 0 if parity == "+" else 1
    bs = seed_expansion(potential)
    guesses = bs.levels(2 * np.arange(count) + p)
    levels, plan = _secant_levels(potential, comp, guesses, cfg)
    if verify_nodes is None:
        verify_nodes = potential.is_real
    if not verify_nodes:
        return levels
    levels = levels.real.astype(complex)
    nodes = _node_counts(potential, levels, cfg, plan)
    for k in range(count):
        if nodes[k] != k:
            levels[k] = _bisect_reseed(potential, parity, k, cfg)
    if np.any(np.diff(levels.real) <= 0):
        raise ShootingError("spectrum is not strictly increasing")
    return levels


def continued_spectrum(
    potential,
    ell: int,
    parity: str,
    count: int,
    cfg: OracleConfig = DEFAULT_CONFIG,
    steps: int = 6,
    base_levels=None,
):
    """Spectrum of the rotated coefficient set v^[ell] by analytic continuation
    along the rotation orbit, seeded from the real spectrum."""
    if base_levels is None:
        base_levels = oracle_spectrum(potential, parity, count, cfg)
    levels = np.array(base_levels, dtype=complex)
    if ell % symmetry_order(potential) == 0:
        return levels
    comp = 0 if parity == "-" else 1
    for t in np.linspace(0.0, 1.0, steps + 1)[1:]:
        vt = _fractional_rotation(potential, ell * t)
        levels, _ = _secant_levels(vt, comp, levels, cfg)
    return levels


def _fractional_rotation(potential, s: float) -> PolynomialPotential:
    half_phi = spectral_symmetry_angle(potential.degree) / 2.0
    coeffs = tuple(
        c * np.exp(1j * j * s * half_phi)
        for j, c in enumerate(potential.coefficients, start=1)
    )
    return PolynomialPotential(potential.degree, coeffs)


def interleaved_spectrum(potential, count: int, cfg: OracleConfig = DEFAULT_CONFIG):
    """Global spectrum indexed by the full quantum number (parities merged)."""
    n_even = (count + 1) // 2
    n_odd = count // 2
    even = oracle_spectrum(potential, "+", n_even, cfg)
    odd = oracle_spectrum(potential, "-", n_odd, cfg)
    out = np.empty(count, dtype=complex)
    out[0::2] = even[:n_even]
    out[1::2] = odd[:n_odd]
    return out


@functools.lru_cache(maxsize=64)
def cached_spectrum(potential: PolynomialPotential, parity: str, count: int):
    """Memoized oracle spectrum with default configuration."""
    return oracle_spectrum(potential, parity, count)


@functools.lru_cache(maxsize=64)
def cached_interleaved(potential: PolynomialPotential, count: int):
    return interleaved_spectrum(potential, count)


def matrix_spectrum(potential, parity: str, count: int, n: int = 1600, box: float | None = None):
    """Eigenvalues from a second-order finite-difference discretization on
    [0, box], Richardson-extrapolated in the grid spacing.

    Entirely independent of the shooting machinery; real potentials only.
    """
    if not potential.is_real:
        raise ValueError("matrix oracle requires a real potential")
    if box is None:
        bs = closed_form_expansion(potential, 2)
        e_max = bs.levels([2 * count + 2])[0].real
        box = float(abs(e_max) ** (1.0 / potential.degree) + 6.0)

    def eigs(m):
        h = box / m
        q = h * np.arange(0, m)
        v = np.asarray(potential(q)).real
        if parity == "-":
            # Dirichlet at 0: unknowns at q = h..(m-1)h
            d = 2.0 / h**2 + v[1:]
            e = -np.ones(m - 2) / h**2
        else:
            # Neumann at 0 via symmetric ghost point, symmetrized weights
            d = 2.0 / h**2 + v
            e = -np.ones(m - 1) / h**2
            e[0] *= math.sqrt(2.0)
        vals = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))[0]
        return vals

    coarse = eigs(n)
    fine = eigs(2 * n)
    return (4.0 * fine - coarse) / 3.0
