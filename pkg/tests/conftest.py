"""Shared fixtures: disk-cached oracle spectra.

Shooting spectra are expensive; they are computed once and cached as .npy
files under tests/.cache so that repeated test runs (and the several tests
sharing one spectrum) pay the integration cost only once.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from eqchain.oracle import continued_spectrum, interleaved_spectrum, oracle_spectrum
from eqchain.potential import PolynomialPotential

CACHE_DIR = Path(__file__).parent / ".cache"


def cached_array(name: str, builder):
    CACHE_DIR.mkdir(exist_ok=True)
    path = CACHE_DIR / f"{name}.npy"
    if path.exists():
        return np.load(path)
    data = np.asarray(builder())
    np.save(path, data)
    return data


def quartic(v2: float = 0.0, v1: float = 0.0, v3: float = 0.0) -> PolynomialPotential:
    return PolynomialPotential(4, (v1, v2, v3))


@pytest.fixture(scope="session")
def q4_interleaved():
    return cached_array("q4_interleaved_64", lambda: interleaved_spectrum(quartic(), 64))


@pytest.fixture(scope="session")
def q4pq2_interleaved():
    return cached_array(
        "q4pq2_interleaved_64", lambda: interleaved_spectrum(quartic(1.0), 64)
    )


@pytest.fixture(scope="session")
def q4mq2_interleaved():
    return cached_array(
        "q4mq2_interleaved_64", lambda: interleaved_spectrum(quartic(-1.0), 64)
    )


@pytest.fixture(scope="session")
def q4m2q2_interleaved():
    return cached_array(
        "q4m2q2_interleaved_64", lambda: interleaved_spectrum(quartic(-2.0), 64)
    )


@pytest.fixture(scope="session")
def cubic_dirichlet():
    """Dirichlet levels of the admissible non-even quartic q^4 - q^3 + q/8."""
    return cached_array(
        "cubic_dirichlet_24",
        lambda: oracle_spectrum(PolynomialPotential(4, (-1.0, 0.0, 0.125)), "-", 24),
    )


def rotated_sector(potential_name: str, potential, parity: str, count: int):
    """Cached analytic continuation of the parity spectrum to sector 1."""
    return cached_array(
        f"{potential_name}_sector1_{parity_tag(parity)}_{count}",
        lambda: continued_spectrum(potential, 1, parity, count),
    )


def parity_tag(parity: str) -> str:
    return "even" if parity == "+" else "odd"
