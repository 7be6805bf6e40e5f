"""Shared fixtures: lattices, circuits and compiled models are built once per session."""

from __future__ import annotations

import pytest

from floqsim import circuit as circ
from floqsim import dem as dem_mod
from floqsim import lattice as lat


@pytest.fixture(scope="session")
def hcf16() -> lat.Tiling:
    return lat.build_base_lattice("hcf16")


@pytest.fixture(scope="session")
def refined(hcf16):
    cache: dict[int, lat.Tiling] = {}

    def get(ell: int) -> lat.Tiling:
        if ell not in cache:
            cache[ell] = lat.refine(hcf16, ell)
        return cache[ell]

    return get


@pytest.fixture(scope="session")
def memory(refined):
    """Noiseless or noisy memory circuits keyed by (family, ell, periods, p)."""
    cache: dict[tuple, circ.MeasurementCircuit] = {}

    def get(family: str, ell: int = 1, periods: int = 1, p: float | None = None, basis: str = "Z"):
        key = (family, ell, periods, p, basis)
        if key not in cache:
            noise = circ.NoiseModel("em3-ind", p) if p is not None else None
            cache[key] = circ.memory_circuit(refined(ell), family, periods, basis=basis, noise=noise)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def model(memory):
    cache: dict[tuple, dem_mod.DetectorErrorModel] = {}

    def get(family: str, ell: int = 1, periods: int = 1, p: float = 1e-3):
        key = (family, ell, periods, p)
        if key not in cache:
            cache[key] = dem_mod.compile_dem(memory(family, ell, periods, p))
        return cache[key]

    return get


# -- acceptance reporting -------------------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(request) -> dict:
    """criterion number -> (passed, detail); echoed in the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(log):
        passed, detail = log[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'} - {detail}")
