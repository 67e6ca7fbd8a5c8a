"""Shared fixtures.

Session-scoped heavy objects (default metric table, default spectral
store) are built once and reused; small-problem fixtures keep the unit
tests fast.
"""

import numpy as np
import pytest

import qmoves as qm

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cfg():
    return qm.PhysicsConfig()


@pytest.fixture(scope="session")
def single_cfg():
    """Single moving tweezer only (no static well)."""
    return qm.PhysicsConfig(amp_static=0.0)


@pytest.fixture(scope="session")
def small_cfg():
    """Coarse, narrow problem for fast unit tests."""
    return qm.PhysicsConfig(
        n_grid=128, grid_min=-1.5, grid_max=1.5, x0_start=0.2, x0_end=-0.2
    )


@pytest.fixture(scope="session")
def small_lattice(small_cfg):
    return qm.PositionLattice.default(m=8, spacing=small_cfg.sigma / 8, center=0.0)


@pytest.fixture(scope="session")
def small_bank(small_cfg, small_lattice):
    return qm.build_bank(small_cfg, small_lattice, 0.05, 5)


@pytest.fixture(scope="session")
def small_states(small_cfg):
    return qm.initial_state(small_cfg), qm.target_state(small_cfg)


@pytest.fixture(scope="session")
def metric_table(cfg):
    return qm.default_metric_table(cfg)


@pytest.fixture(scope="session")
def default_store(cfg):
    return qm.SpectralStore(cfg, qm.PositionLattice.default())


def record_criterion(name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
