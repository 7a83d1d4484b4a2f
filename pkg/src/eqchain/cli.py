"""Command-line frontend: configuration, subcommands, and artifact files.

Four subcommands cover the computations: ``spectrum`` (converged chains and
eigenvalues), ``stability`` (contraction ratios and linearized spectral radii
over a coefficient grid), ``wavefunction`` (pointwise reconstruction against
the shooting reference), and ``validate`` (identity-based self-checks).  All
artifacts are plain CSV/JSON with a metadata header echoing the configuration,
so reruns with identical input are reproducible byte for byte apart from the
timestamp line.

Exit codes: 0 success, 1 usage/configuration error, 2 non-convergence,
3 validation failure.
"""

from __future__ import annotations

import argparse
import cmath
import datetime
import functools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .eqc import even_levels_via_dw
from .iterate import (
    SCHEME_KINDS,
    SchemeConfig,
    linearized_dynamics,
    solve_spectrum,
)
from .oracle import (
    DEFAULT_CONFIG,
    cached_spectrum,
    continued_spectrum,
    natural_psi_at_zero,
    oracle_spectrum,
    recessive_solution,
)
from .potential import (
    AdmissibilityError,
    PolynomialPotential,
    potential_from_dict,
    potential_to_dict,
    rotate_potential,
)
from .semiclassics import seed_expansion
from .specdet import (
    SpectrumChain,
    dump_chains,
    load_chain_levels,
    log_det,
    wronskian_residual,
)
from .wavefn import default_wavefunction_config, wavefunction_by_eqc

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2
EXIT_VALIDATION = 3


class ConfigError(ValueError):
    """Configuration file failed schema validation."""


_SCHEMA = {
    "potential": {"N", "v"},
    "spectrum": {"parity", "scheme", "sequence", "k_max", "bs_terms", "tol",
                 "max_sweeps", "via_dw", "enforce_conjugation"},
    "stability": {"v2_grid", "schemes", "k_max", "max_sweeps"},
    "wavefunction": {"lambda", "a_grid", "scheme", "k_max", "tol"},
    "validate": {"checks", "chain_file", "n_lambda", "n_levels"},
    "output": {"directory", "formats"},
}


def _check_keys(block_name: str, block: dict) -> None:
    if not isinstance(block, dict):
        raise ConfigError(f"config block {block_name!r} must be an object")
    unknown = set(block) - _SCHEMA[block_name]
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {block_name!r}: {', '.join(sorted(unknown))}"
        )


def load_config(path: str | None) -> dict:
    """Read and schema-validate the run configuration."""
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(data) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    for name, block in data.items():
        _check_keys(name, block)
    return data


def _potential_from_config(config: dict) -> PolynomialPotential:
    block = config.get("potential")
    if block is None:
        return PolynomialPotential(4, (0.0, 0.0, 0.0))
    try:
        coeffs = block.get("v", [])
        pairs = []
        for c in coeffs:
            if isinstance(c, (int, float)):
                pairs.append([float(c), 0.0])
            else:
                pairs.append([float(c[0]), float(c[1])])
        return potential_from_dict({"N": block["N"], "v": pairs})
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid potential block: {exc}") from exc


def _parities(sector: str):
    if sector == "even":
        return ("+",)
    if sector == "odd":
        return ("-",)
    return ("+", "-")


def _scheme_config(block: dict, args) -> SchemeConfig:
    kwargs = {}
    if "scheme" in block:
        kwargs["kind"] = block["scheme"]
    if "sequence" in block and block["sequence"] is not None:
        kwargs["sequence"] = tuple(block["sequence"])
    if "k_max" in block:
        kwargs["k_max"] = int(block["k_max"])
    if "tol" in block:
        kwargs["tol_fixed"] = float(block["tol"])
    if "max_sweeps" in block:
        kwargs["max_sweeps"] = int(block["max_sweeps"])
    if "enforce_conjugation" in block:
        kwargs["enforce_conjugation"] = bool(block["enforce_conjugation"])
    if getattr(args, "scheme", None):
        kwargs["kind"] = args.scheme
    if getattr(args, "kmax", None):
        kwargs["k_max"] = args.kmax
    try:
        return SchemeConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _metadata_lines(command: str, config: dict) -> list[str]:
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    echo = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return [
        f"# command: {command}",
        f"# version: {__version__}",
        f"# config: {echo}",
        f"# timestamp: {stamp}",
    ]


def _write_csv(path: Path, command: str, config: dict, header: str, rows) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for line in _metadata_lines(command, config):
            fh.write(line + "\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _write_json(path: Path, command: str, config: dict, payload: dict) -> None:
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    doc = {
        "command": command,
        "version": __version__,
        "config": config,
        "timestamp": stamp,
    }
    doc.update(payload)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _seed_levels_from_file(path: str, system, parity: str):
    """Overwrite explicit levels from a chain CSV where indices match."""
    with open(path, encoding="utf-8") as fh:
        loaded = load_chain_levels(fh)
    for (ell, par), levels in loaded.items():
        if par != parity or not 0 <= ell < system.order:
            continue
        for k, value in enumerate(levels[: system.k_max + 1]):
            system = system.with_level(ell, k, value)
    return system


def cmd_spectrum(args) -> int:
    config = load_config(args.config)
    potential = _potential_from_config(config)
    block = dict(config.get("spectrum", {}))
    scheme = _scheme_config(block, args)
    via_dw = bool(block.get("via_dw", False)) or args.via_dw
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    parities = _parities(args.sector)
    if via_dw:
        parities = ("-",)

    all_converged = True
    report_payload: dict = {"sectors": {}}
    chains_rows = []
    comparison_rows = []
    dw_rows = []
    for parity in parities:
        system, report = solve_spectrum(potential, parity, scheme)
        if args.seed_from:
            system = _seed_levels_from_file(args.seed_from, system, parity)
            system, report = _resweep(system, potential, parity, scheme)
        all_converged &= report.converged
        report_payload["sectors"][parity] = report.to_dict()
        for chain in system.chains:
            for k, e in enumerate(chain.levels):
                chains_rows.append(
                    f"{chain.ell},{chain.parity},{k},{_fmt(e.real)},{_fmt(e.imag)}"
                )
        if args.with_oracle and potential.is_real:
            truth = cached_spectrum(potential, parity, min(scheme.k_max + 1, 16))
            for k, t in enumerate(truth):
                e = system.chain(0).levels[k]
                rel = abs(e - t) / abs(t)
                comparison_rows.append(
                    f"{parity},{k},{_fmt(e.real)},{_fmt(t.real)},{rel:.3e}"
                )
        if via_dw and report.converged:
            count = min(scheme.k_max + 1, 12)
            evens = even_levels_via_dw(system, count)
            for k, e in enumerate(evens):
                dw_rows.append(f"{k},{_fmt(e.real)},{_fmt(e.imag)}")

    _write_csv(out / "chains.csv", "spectrum", config,
               "ell,parity,k,re_E,im_E", chains_rows)
    _write_json(out / "report.json", "spectrum", config, report_payload)
    if comparison_rows:
        _write_csv(out / "oracle_comparison.csv", "spectrum", config,
                   "parity,k,re_E,re_E_oracle,rel_error", comparison_rows)
    if via_dw:
        _write_csv(out / "even_levels_dw.csv", "spectrum", config,
                   "k,re_E,im_E", dw_rows)
    return EXIT_OK if all_converged else EXIT_NO_CONVERGENCE


def _resweep(system, potential, parity, scheme):
    """Re-run the fixed-point loop from an externally seeded system."""
    from .iterate import ConvergenceReport, sweep

    deltas = []
    stuck_all: set = set()
    converged = False
    for _ in range(scheme.max_sweeps):
        system, delta, stuck = sweep(system, scheme)
        deltas.append(delta)
        stuck_all.update(stuck)
        if delta < scheme.tol_fixed:
            converged = True
            break
    from .iterate import _contraction_ratio

    report = ConvergenceReport(
        tuple(deltas), _contraction_ratio(deltas), converged, len(deltas),
        tuple(sorted(stuck_all)),
    )
    return system, report


def cmd_stability(args) -> int:
    config = load_config(args.config)
    block = dict(config.get("stability", {}))
    v2_grid = block.get("v2_grid", [-2.0, -1.0, 0.0, 1.0, 2.0])
    schemes = block.get("schemes", ["alternating-immediate", "conjugate-symmetrized"])
    k_max = int(block.get("k_max", 16))
    if args.kmax:
        k_max = args.kmax
    if args.scheme:
        schemes = [args.scheme]
    for name in schemes:
        if name not in SCHEME_KINDS:
            print(f"unknown scheme {name!r}", file=sys.stderr)
            return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for v2 in v2_grid:
        potential = PolynomialPotential(4, (0.0, float(v2), 0.0))
        for parity in _parities(args.sector):
            for name in schemes:
                scheme = SchemeConfig(
                    kind=name, k_max=k_max,
                    max_sweeps=int(block.get("max_sweeps", 200)),
                )
                try:
                    system, report = solve_spectrum(potential, parity, scheme)
                except (AdmissibilityError, ValueError):
                    rows.append(f"{_fmt(v2)},{parity},{name},nan,nan")
                    continue
                ratio = report.contraction_ratio
                if report.converged:
                    try:
                        _, eigs = linearized_dynamics(system, scheme)
                        radius = float(abs(eigs[0]))
                    except (ValueError, ArithmeticError):
                        radius = float("nan")
                else:
                    radius = float("nan")
                rows.append(
                    f"{_fmt(v2)},{parity},{name},{_fmt(ratio)},{_fmt(radius)}"
                )
    _write_csv(out / "stability.csv", "stability", config,
               "v2,parity,scheme,observed_ratio,spectral_radius", rows)
    return EXIT_OK


def cmd_wavefunction(args) -> int:
    config = load_config(args.config)
    potential = _potential_from_config(config)
    block = dict(config.get("wavefunction", {}))
    a_grid = block.get("a_grid", [])
    if not a_grid:
        print("wavefunction requires a non-empty a_grid", file=sys.stderr)
        return EXIT_USAGE
    lam_raw = block.get("lambda", None)
    if lam_raw is None:
        print("wavefunction requires lambda in the config", file=sys.stderr)
        return EXIT_USAGE
    if isinstance(lam_raw, (int, float)):
        lam = complex(lam_raw)
    else:
        lam = complex(float(lam_raw[0]), float(lam_raw[1]))
    k_max = int(block.get("k_max", 24))
    if args.kmax:
        k_max = args.kmax
    scheme = default_wavefunction_config(k_max)
    if "tol" in block:
        from dataclasses import replace

        scheme = replace(scheme, tol_fixed=float(block["tol"]))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    points = wavefunction_by_eqc(potential, lam, a_grid, scheme)
    rows = []
    deviations = []
    flagged = []
    for pt in points:
        if pt.psi is not None:
            rows.append(f"{_fmt(pt.a)},{_fmt(pt.psi.real)},{_fmt(pt.psi.imag)},eqc")
        psi_o, _ = recessive_solution(potential, lam, [pt.a], DEFAULT_CONFIG)[0]
        rows.append(f"{_fmt(pt.a)},{_fmt(psi_o.real)},{_fmt(psi_o.imag)},oracle")
        if pt.psi is None:
            flagged.append(pt.a)
        else:
            deviations.append(abs(pt.psi - psi_o) / abs(psi_o))
    _write_csv(out / "wavefunction.csv", "wavefunction", config,
               "a,re_psi,im_psi,source", rows)
    _write_json(out / "wavefunction_report.json", "wavefunction", config, {
        "max_relative_deviation": max(deviations) if deviations else None,
        "flagged_points": flagged,
        "contraction_ratios": [pt.report.contraction_ratio for pt in points],
    })
    return EXIT_OK if not flagged else EXIT_NO_CONVERGENCE


@functools.lru_cache(maxsize=8)
def _oracle_chain_pair(potential, count):
    """Chains (ell, parity) -> SpectrumChain for ell in {0,1} from the oracle."""
    tail = seed_expansion(potential)
    chains = {}
    for parity in ("+", "-"):
        base = oracle_spectrum(potential, parity, count)
        rotated = continued_spectrum(potential, 1, parity, count, base_levels=base)
        chains[(0, parity)] = SpectrumChain(0, parity, tuple(base), tail)
        chains[(1, parity)] = SpectrumChain(1, parity, tuple(rotated), tail.rotated(1))
    return chains


def _check_dw(potential, count, n_lambda, chain_file=None, parity_override=None):
    chains = dict(_oracle_chain_pair(potential, count))
    if chain_file:
        with open(chain_file, encoding="utf-8") as fh:
            loaded = load_chain_levels(fh)
        for (ell, parity), levels in loaded.items():
            if (ell, parity) in chains:
                old = chains[(ell, parity)]
                new_levels = list(old.levels)
                for k, v in enumerate(levels[: len(new_levels)]):
                    new_levels[k] = v
                chains[(ell, parity)] = SpectrumChain(
                    old.ell, old.parity, tuple(new_levels), old.tail
                )
    lams = [complex(1.5 + 3.7 * i, 0.9 * ((-1) ** i)) for i in range(n_lambda)]
    residuals = [abs(wronskian_residual(chains, lam)) for lam in lams]
    return max(residuals)


def _check_det_identity(potential, count, n_lambda):
    tail = seed_expansion(potential)
    base = oracle_spectrum(potential, "-", count)
    chain = SpectrumChain(0, "-", tuple(base), tail)
    worst = 0.0
    for i in range(n_lambda):
        lam = complex(0.8 + 2.9 * i, 1.1 * ((-1) ** i))
        psi0, _ = natural_psi_at_zero(potential, lam)
        det = cmath.exp(log_det(chain, lam))
        worst = max(worst, abs(det - psi0) / abs(psi0))
    return worst


def _check_k_independence(potential, count):
    tail = seed_expansion(potential)
    base = oracle_spectrum(potential, "-", count)
    chain = SpectrumChain(0, "-", tuple(base), tail)
    lam = 2.25 + 1.5j
    values = [
        log_det(chain, lam, n_explicit=n)
        for n in (count - 12, count - 6, count)
    ]
    return max(abs(v - values[-1]) for v in values[:-1])


def _check_bs_residual(potential, count):
    tail = seed_expansion(potential)
    worst = 0.0
    for parity, delta in (("+", 0), ("-", 1)):
        levels = oracle_spectrum(potential, parity, count)
        for k in range(count - 6, count):
            n = 2 * k + delta
            b = sum(
                c * complex(levels[k]) ** a
                for a, c in zip(tail.exponents, tail.coefficients)
            )
            worst = max(worst, abs(b / (2.0 * math.pi) - (n + 0.5)))
    return worst


_VALIDATION_THRESHOLDS = {
    "dw_residual": 1e-6,
    "det_identity": 1e-6,
    "k_independence": 1e-8,
    "bs_fit": 1e-4,
}


def cmd_validate(args) -> int:
    config = load_config(args.config)
    potential = _potential_from_config(config)
    block = dict(config.get("validate", {}))
    checks = block.get("checks", list(_VALIDATION_THRESHOLDS))
    chain_file = block.get("chain_file") or args.seed_from
    n_lambda = int(block.get("n_lambda", 4))
    count = int(block.get("n_levels", 32))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    for check in checks:
        if check not in _VALIDATION_THRESHOLDS:
            print(f"unknown validation check {check!r}", file=sys.stderr)
            return EXIT_USAGE
        if check == "dw_residual":
            value = _check_dw(potential, count, n_lambda, chain_file)
        elif check == "det_identity":
            value = _check_det_identity(potential, count, n_lambda)
        elif check == "k_independence":
            value = _check_k_independence(potential, count)
        else:
            value = _check_bs_residual(potential, count)
        threshold = _VALIDATION_THRESHOLDS[check]
        results[check] = {
            "value": float(value),
            "threshold": threshold,
            "passed": bool(value < threshold),
        }
    all_passed = all(r["passed"] for r in results.values())
    _write_json(out / "validation.json", "validate", config, {
        "checks": results,
        "passed": all_passed,
    })
    return EXIT_OK if all_passed else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqchain",
        description="Spectra of polynomial potentials from exact quantization chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("spectrum", cmd_spectrum),
        ("stability", cmd_stability),
        ("wavefunction", cmd_wavefunction),
        ("validate", cmd_validate),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON configuration file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--with-oracle", action="store_true", dest="with_oracle")
        p.add_argument("--sector", choices=("even", "odd", "both"), default="both")
        p.add_argument("--scheme", choices=SCHEME_KINDS, default=None)
        p.add_argument("--kmax", type=int, default=None)
        p.add_argument("--seed-from", default=None, dest="seed_from",
                       help="chain CSV used as the initial state")
        p.add_argument("--via-dw", action="store_true", dest="via_dw",
                       help="recover even levels from the bilinear identity")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AdmissibilityError as exc:
        print(f"inadmissible potential: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
