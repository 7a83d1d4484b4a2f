"""Fixed-point iteration on chain systems: schedules, convergence, stability."""

import numpy as np
import pytest

from eqchain.iterate import (
    SCHEME_KINDS,
    ConvergenceReport,
    SchemeConfig,
    _schedule,
    initialize_chains,
    linearized_dynamics,
    solve_spectrum,
    sweep,
)

from conftest import quartic


def small_config(**overrides):
    defaults = dict(kind="alternating-immediate", k_max=12, enforce_conjugation=True)
    defaults.update(overrides)
    return SchemeConfig(**defaults)


def test_scheme_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(kind="gauss-seidel")
    with pytest.raises(ValueError):
        SchemeConfig(kind="custom-sequence")  # sequence missing
    with pytest.raises(ValueError):
        SchemeConfig(k_max=2)
    cfg = SchemeConfig(kind="custom-sequence", sequence=[0, 2, 1])
    assert cfg.sequence == (0, 2, 1)
    assert set(SCHEME_KINDS) == {
        "full-cycle-refresh",
        "alternating-immediate",
        "conjugate-symmetrized",
        "custom-sequence",
    }


def test_schedules_respect_symmetry_order():
    system = initialize_chains(quartic(1.0), "-", small_config())  # order 3
    assert _schedule(system, small_config()) == (0, 1, 2)
    assert _schedule(system, small_config(kind="full-cycle-refresh")) == (0, 1, 2)
    assert _schedule(system, small_config(kind="conjugate-symmetrized")) == (0, 1)
    custom = small_config(kind="custom-sequence", sequence=(0, 5, 2, 3, 1))
    # entries outside the order-3 orbit are skipped
    assert _schedule(system, custom) == (0, 2, 1)


def test_seeded_chains_satisfy_rotation_consistency():
    system = initialize_chains(quartic(), "-", small_config())
    base = np.array(system.chain(0).levels)
    for ell in (1, 2):
        rotated = np.array(system.chain(ell).levels)
        np.testing.assert_allclose(rotated, base, rtol=1e-12)


def test_solve_is_deterministic():
    cfg = small_config()
    a, _ = solve_spectrum(quartic(-1.0), "-", cfg)
    b, _ = solve_spectrum(quartic(-1.0), "-", cfg)
    for ell in range(a.order):
        np.testing.assert_array_equal(
            np.array(a.chain(ell).levels), np.array(b.chain(ell).levels)
        )


def test_conjugation_keeps_base_chain_real():
    system, report = solve_spectrum(quartic(-1.0), "-", small_config())
    assert report.converged
    base = np.array(system.chain(0).levels)
    assert np.abs(base.imag).max() == 0.0
    # sectors 1 and 2 are exact conjugates
    np.testing.assert_array_equal(
        np.array(system.chain(2).levels), np.conj(np.array(system.chain(1).levels))
    )


def test_truncation_stability_under_k_max_doubling():
    """Low levels must be insensitive to where the chain is truncated."""
    lo, _ = solve_spectrum(quartic(1.0), "-", small_config(k_max=12))
    hi, _ = solve_spectrum(quartic(1.0), "-", small_config(k_max=24))
    a = np.array(lo.chain(0).levels[:6])
    b = np.array(hi.chain(0).levels[:6])
    assert (np.abs(a - b) / np.abs(b)).max() < 1e-8


def test_observed_ratio_matches_linearized_radius():
    cfg = small_config(k_max=12)
    system, report = solve_spectrum(quartic(), "-", cfg)
    assert report.converged
    assert report.contraction_ratio <= 0.5
    _, eigs = linearized_dynamics(system, cfg)
    radius = float(np.abs(eigs[0]))
    assert radius <= 0.5
    assert abs(radius - report.contraction_ratio) < 0.15


def test_sweep_returns_delta_and_new_system():
    cfg = small_config(k_max=8)
    system = initialize_chains(quartic(1.0), "-", cfg)
    new, delta, stuck = sweep(system, cfg)
    assert delta > 0.0
    assert list(stuck) == []
    again, delta2, _ = sweep(new, cfg)
    assert delta2 < delta


def test_report_serialization_round_trip():
    report = ConvergenceReport((0.5, 0.1), 0.2, True, 2, ((1, 3),))
    data = report.to_dict()
    assert data["converged"] is True
    assert data["stuck_levels"] == [[1, 3]]
    assert "contraction_ratio" in report.to_json()
