from __future__ import annotations

import numpy as np
import pytest

from wqed_amp.model import ArraySpec, DriveSpec, TransmonSpec

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def transmon() -> TransmonSpec:
    return TransmonSpec(J=6, omega10=2100.0, alpha=100.0)


@pytest.fixture(scope="session")
def atom(transmon) -> ArraySpec:
    return ArraySpec.single(transmon)


@pytest.fixture(scope="session")
def k2_point(transmon):
    return DriveSpec.k_photon(transmon, 2, np.sqrt(100.0)), transmon.omega10 - 102.0


@pytest.fixture(scope="session")
def k3_point(transmon):
    return DriveSpec.k_photon(transmon, 3, np.sqrt(5600.0)), transmon.omega10 - 12.1


def random_density(d: int, rng) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
