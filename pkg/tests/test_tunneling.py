import numpy as np
import pytest

import qmoves as qm
from qmoves.errors import DomainError

SIGMA = 0.125


@pytest.fixture(scope="module")
def curve(cfg):
    return qm.tunnel_curve(cfg, np.linspace(0.0, 1.0, 81))


def test_merged_well_limit(cfg, curve):
    # d = 0: two coincident amplitude-160 Gaussians equal one well of depth 320
    merged = cfg.replace(amp_moving=320.0, amp_static=0.0)
    dec = qm.spectral_decomposition(0.0, merged, 2)
    expected = dec.energies[1] - dec.energies[0]
    assert curve.splittings[0] == pytest.approx(expected, abs=1e-8)


def test_splitting_decays_monotonically(curve):
    tail = curve.separations >= 3 * SIGMA
    assert np.all(np.diff(curve.splittings[tail]) < 0)


def test_exponential_tail(cfg, curve):
    kappa, r_sq = qm.fit_decay_constant(curve, cfg)
    assert r_sq > 0.99
    kappa_theory = np.sqrt(-2.0 * curve.ground_energies[-1])
    assert abs(kappa - kappa_theory) / kappa_theory < 0.05
    # frozen values from the default grid
    assert kappa == pytest.approx(15.23, abs=0.1)
    assert kappa_theory == pytest.approx(15.20, abs=0.05)


def test_parity_of_lowest_doublet(cfg):
    d = 0.5
    sym = cfg.replace(amp_static=cfg.amp_moving, x_static=-d / 2)
    dec = qm.spectral_decomposition(d / 2, sym, 2)
    ground, excited = dec.states[:, 0], dec.states[:, 1]
    assert np.max(np.abs(ground - ground[::-1])) < 1e-6
    assert np.max(np.abs(excited + excited[::-1])) < 1e-6


def test_transfer_time_at_three_sigma(curve):
    t_3s = np.interp(3 * SIGMA, curve.separations, curve.transfer_times)
    assert 0.1 < t_3s < 0.3
    assert t_3s == pytest.approx(0.227, abs=0.01)


def test_max_tunnel_distance_at_speed_limit(cfg, curve):
    t_csl = qm.classical_speed_limit(cfg, 1.1).t_csl_exact
    reach = qm.max_tunnel_distance(curve, t_csl)
    assert 0.2 < reach < 0.4
    assert reach == pytest.approx(0.30, abs=0.02)


def test_max_tunnel_distance_edges(curve):
    assert qm.max_tunnel_distance(curve, 1e9) == curve.separations[-1]
    with pytest.raises(DomainError):
        qm.max_tunnel_distance(curve, 1e-9)


def test_transfer_time_definition(curve):
    assert np.allclose(curve.transfer_times, np.pi / curve.splittings)
    assert np.allclose(curve.couplings, curve.splittings / 2)
    assert np.all(curve.splittings >= 0)


def test_barrier_report(cfg):
    e0, barrier, tunneling = qm.barrier_report(cfg, 0.3)
    assert not tunneling  # ground state above the barrier top
    assert barrier > 0
    e0, barrier, tunneling = qm.barrier_report(cfg, 5 * SIGMA)
    assert tunneling
    e0, barrier, tunneling = qm.barrier_report(cfg, 0.0)
    assert not tunneling
    assert barrier == pytest.approx(0.0, abs=1e-12)


def test_rows_format(cfg, curve):
    rows = list(curve.rows(cfg))
    assert len(rows) == len(curve.separations)
    keys = {"d", "splitting", "transfer_time", "barrier_height", "E0", "tunneling_regime"}
    assert set(rows[0]) == keys
    regimes = [r["tunneling_regime"] for r in rows]
    assert regimes[0] is False and regimes[-1] is True


def test_unsorted_separations_rejected(cfg):
    with pytest.raises(DomainError):
        qm.tunnel_curve(cfg, [0.5, 0.3])
