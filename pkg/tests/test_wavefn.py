"""Pointwise wavefunction reconstruction from shifted-potential determinants."""

import numpy as np
import pytest

from eqchain.oracle import recessive_solution
from eqchain.wavefn import default_wavefunction_config, wavefunction_by_eqc

from conftest import quartic


LAM = 0.75  # generic lambda below the ground state, where psi is nodeless


def test_reconstruction_matches_oracle_near_origin():
    pot = quartic()
    a_points = [0.0, 0.5]
    cfg = default_wavefunction_config(k_max=16)
    points = wavefunction_by_eqc(pot, LAM, a_points, cfg)
    oracle = recessive_solution(pot, LAM, a_points)
    for pt, (psi_o, _) in zip(points, oracle):
        assert pt.converged
        rel = abs(pt.psi - psi_o) / abs(psi_o)
        assert rel < 1e-6
        assert pt.psi.imag == pytest.approx(0.0, abs=1e-10 * abs(pt.psi))


def test_zero_shift_reduces_to_even_system():
    """At a = 0 the shifted potential is the original even one; the default
    schedule must still drive that order-3 system to convergence."""
    pot = quartic()
    (pt,) = wavefunction_by_eqc(pot, LAM, [0.0], default_wavefunction_config(k_max=12))
    assert pt.converged
    assert pt.report.contraction_ratio <= 0.75


def test_contraction_reported_per_point():
    pot = quartic()
    points = wavefunction_by_eqc(
        pot, LAM, [0.5], default_wavefunction_config(k_max=12)
    )
    assert all(p.report.sweeps_used > 0 for p in points)
    assert all(np.isfinite(p.report.contraction_ratio) for p in points)


def test_non_convergence_yields_none():
    pot = quartic()
    cfg = default_wavefunction_config(k_max=12)
    from dataclasses import replace

    starved = replace(cfg, max_sweeps=1)
    (pt,) = wavefunction_by_eqc(pot, LAM, [0.5], starved)
    assert not pt.converged
    assert pt.psi is None
