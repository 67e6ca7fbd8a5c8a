import numpy as np
import pytest

import qmoves as qm
from qmoves.errors import ContractError, DomainError, ResourceError
from qmoves.propagation import downsample_density


class TestLattice:
    def test_default_shape(self):
        lat = qm.PositionLattice.default()
        assert lat.m == 128
        assert lat.spacing == pytest.approx(1.0 / 64.0)
        assert lat.spacing == pytest.approx(0.125 / 8.0)
        assert lat.x_min == pytest.approx(-1.0 + 1 / 128)
        assert lat.x_max == pytest.approx(1.0 - 1 / 128)
        assert np.allclose(lat.positions, -lat.positions[::-1])

    def test_uniformity_required(self):
        with pytest.raises(DomainError):
            qm.PositionLattice(np.array([0.0, 0.1, 0.3]), 0.1)


class TestBank:
    def test_tiny_dt_is_identity(self, small_cfg, small_lattice, small_states):
        psi0, _ = small_states
        bank = qm.build_bank(small_cfg, small_lattice, 1e-12, 1)
        out = bank.step(3, np.ascontiguousarray(psi0.values))
        assert np.max(np.abs(out - psi0.values)) < 1e-8

    def test_step_adjoint_inverts(self, small_bank, small_states):
        psi0, _ = small_states
        vals = np.ascontiguousarray(psi0.values)
        out = small_bank.step_adjoint(2, small_bank.step(2, vals))
        assert np.max(np.abs(out - vals)) < 1e-10

    def test_two_half_steps_equal_one(self, small_cfg, small_lattice, small_states):
        psi0, _ = small_states
        store = qm.SpectralStore(small_cfg, small_lattice)
        full = qm.build_bank(small_cfg, small_lattice, 0.02, 1, store=store)
        half = full.with_dt(full.dt / 2)
        vals = np.ascontiguousarray(psi0.values)
        one = full.step(4, vals)
        two = half.step(4, half.step(4, vals))
        assert np.max(np.abs(one - two)) < 1e-10

    def test_eigenstate_phases_exact(self, small_cfg, small_lattice):
        # every eigenvector picks up exactly exp(-i E dt)
        bank = qm.build_bank(small_cfg, small_lattice, 0.03, 3)
        k = 5
        energies, vectors = bank.store.get(k)
        dt = bank.dt
        for n in (0, 1, 7, 40):
            vec = vectors[:, n].astype(complex)
            out = bank.step(k, vec)
            expected = np.exp(-1j * energies[n] * dt) * vec
            assert np.max(np.abs(out - expected)) < 1e-10

    def test_eager_budget_error(self, small_cfg, small_lattice):
        with pytest.raises(ResourceError):
            qm.build_bank(
                small_cfg, small_lattice, 0.05, 5, eager=True,
                max_bytes=small_cfg.n_grid * 8,
            )

    def test_budgeted_store_evicts(self, small_cfg, small_lattice):
        store = qm.SpectralStore(
            small_cfg, small_lattice, max_bytes=3 * store_bytes(small_cfg)
        )
        for k in range(6):
            store.get(k)
        assert store.n_built <= 3
        # evicted entries rebuild transparently
        w, v = store.get(0)
        assert len(w) == small_cfg.n_grid

    def test_budgeted_scan_matches_dense(self, small_cfg, small_lattice, small_states):
        psi0, phi = small_states
        dense = qm.build_bank(small_cfg, small_lattice, 0.05, 5)
        budgeted = qm.build_bank(
            small_cfg, small_lattice, 0.05, 5,
            max_bytes=4 * store_bytes(small_cfg),
        )
        left = np.ascontiguousarray(psi0.values)
        right = np.ascontiguousarray(phi.values)
        a = dense.candidate_fidelities(left, right)
        b = budgeted.candidate_fidelities(left, right)
        assert np.max(np.abs(a - b)) < 1e-13


def store_bytes(cfg):
    return 8 * cfg.n_grid * (cfg.n_grid + 1)


class TestQuantize:
    def test_constant_at_lattice_point(self, small_lattice):
        x = small_lattice.positions[3]
        p = qm.Protocol(np.array([0.0, 0.1]), np.array([x, x]))
        dp = qm.quantize_protocol(p, small_lattice, 7)
        assert np.all(dp.indices == 3)

    def test_rounding_error_bound(self, small_lattice):
        rng = np.random.default_rng(0)
        times = np.linspace(0, 0.1, 33)
        pos = rng.uniform(small_lattice.x_min, small_lattice.x_max, 33)
        p = qm.Protocol(times, pos)
        dp = qm.quantize_protocol(p, small_lattice, 16)
        mids = (np.arange(16) + 0.5) * (0.1 / 16)
        err = np.abs(dp.positions() - p.position_at(mids))
        assert np.max(err) <= small_lattice.spacing / 2 + 1e-12

    def test_linear_ramp_monotone_steps(self):
        lat = qm.PositionLattice.default()
        p = qm.Protocol(
            np.array([0.0, 0.1]), np.array([lat.x_min, lat.x_max])
        )
        dp = qm.quantize_protocol(p, lat, lat.m)
        steps = np.diff(dp.indices)
        assert np.all(steps >= 0)
        assert np.all(steps <= 2)

    def test_half_tie_rounds_toward_previous(self, small_lattice):
        # constant protocol exactly between lattice points 2 and 3,
        # starting from point 2's side: stays at 2 throughout
        boundary = small_lattice.positions[2] + small_lattice.spacing / 2
        p = qm.Protocol(np.array([0.0, 0.1]), np.array([boundary, boundary]))
        dp = qm.quantize_protocol(p, small_lattice, 5)
        assert np.all(dp.indices == dp.indices[0])
        assert dp.indices[0] in (2, 3)

    def test_out_of_range_rejected(self, small_lattice):
        p = qm.Protocol(np.array([0.0, 0.1]), np.array([0.0, 2.0]))
        with pytest.raises(DomainError):
            qm.quantize_protocol(p, small_lattice, 4)


class TestFidelity:
    def test_self_fidelity(self, small_states):
        psi0, _ = small_states
        assert qm.fidelity(psi0, psi0) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_states(self, small_cfg):
        dec = qm.spectral_decomposition(0.0, small_cfg, 2)
        grid = dec.grid
        a = qm.WaveFunction(dec.states[:, 0].astype(complex) / np.sqrt(grid.dx), grid)
        b = qm.WaveFunction(dec.states[:, 1].astype(complex) / np.sqrt(grid.dx), grid)
        assert qm.fidelity(a, b) < 1e-12

    def test_global_phase_invariance(self, small_states):
        psi0, phi = small_states
        rotated = qm.WaveFunction(np.exp(1.23j) * psi0.values, psi0.grid)
        assert qm.fidelity(rotated, phi) == pytest.approx(
            qm.fidelity(psi0, phi), abs=1e-12
        )

    def test_grid_mismatch_rejected(self, small_states, cfg):
        psi0, _ = small_states
        _, other = qm.ground_state(0.0, cfg)
        with pytest.raises(ContractError):
            qm.fidelity(psi0, other)


class TestEvolve:
    def test_stationary_eigenstate(self, small_cfg, small_lattice, small_states):
        bank = qm.build_bank(small_cfg, small_lattice, 0.1, 20)
        k = 4
        _, psi_k = qm.ground_state(float(small_lattice.positions[k]), small_cfg)
        dp = qm.DiscreteProtocol(np.full(20, k), small_lattice)
        res = qm.evolve(dp, bank, psi_k, psi_k)
        assert np.max(np.abs(res.final_state.density() - psi_k.density())) < 1e-8
        assert res.fidelity == pytest.approx(1.0, abs=1e-10)

    def test_norm_preserved_100_steps(self, small_cfg, small_lattice, small_states):
        psi0, phi = small_states
        bank = qm.build_bank(small_cfg, small_lattice, 0.1, 100)
        rng = np.random.default_rng(3)
        dp = qm.DiscreteProtocol(rng.integers(0, small_lattice.m, 100), small_lattice)
        res = qm.evolve(dp, bank, psi0, phi)
        assert res.final_state.norm() == pytest.approx(1.0, abs=1e-9)

    def test_reverse_with_conjugated_phases(self, small_cfg, small_lattice, small_states):
        psi0, _ = small_states
        bank = qm.build_bank(small_cfg, small_lattice, 0.05, 12)
        rng = np.random.default_rng(4)
        idx = rng.integers(0, small_lattice.m, 12)
        vals = np.ascontiguousarray(psi0.values)
        for k in idx:
            vals = bank.step(int(k), vals)
        for k in idx[::-1]:
            vals = bank.step_adjoint(int(k), vals)
        assert np.max(np.abs(vals - psi0.values)) < 1e-8

    def test_lattice_mismatch_rejected(self, small_cfg, small_lattice, small_states):
        psi0, phi = small_states
        bank = qm.build_bank(small_cfg, small_lattice, 0.05, 5)
        other = qm.PositionLattice.default(m=4, spacing=0.02)
        dp = qm.DiscreteProtocol(np.zeros(5, dtype=int), other)
        with pytest.raises(ContractError):
            qm.evolve(dp, bank, psi0, phi)

    def test_frames(self, small_cfg, small_lattice, small_states):
        psi0, phi = small_states
        bank = qm.build_bank(small_cfg, small_lattice, 0.05, 10)
        dp = qm.DiscreteProtocol(np.full(10, 2), small_lattice)
        res = qm.evolve(dp, bank, psi0, phi, frame_stride=3)
        times = [t for t, _ in res.frames]
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(0.05)
        grid = small_cfg.grid()
        covered = grid.points[-1] - grid.points[0] + grid.dx
        for _, dens in res.frames:
            assert np.all(dens >= 0)
            total = np.sum(dens) * covered / len(dens)
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_determinism(self, small_cfg, small_lattice, small_states):
        psi0, phi = small_states
        bank = qm.build_bank(small_cfg, small_lattice, 0.05, 8)
        dp = qm.DiscreteProtocol(np.arange(8) % small_lattice.m, small_lattice)
        f1 = qm.evolve(dp, bank, psi0, phi).fidelity
        f2 = qm.evolve(dp, bank, psi0, phi).fidelity
        assert f1 == f2


class TestFidelityCurve:
    def test_duplicate_durations_identical(self, small_cfg, small_lattice):
        def family(t):
            return qm.cubic_ramp(0.08, t, n_samples=65)

        rows = qm.fidelity_curve(
            family, small_cfg, small_lattice, [0.03, 0.03],
            n_rule=lambda t: 16,
        )
        assert rows[0] == rows[1]

    def test_unsorted_rejected(self, small_cfg, small_lattice):
        with pytest.raises(DomainError):
            qm.fidelity_curve(
                lambda t: qm.cubic_ramp(0.4, t), small_cfg, small_lattice,
                [0.05, 0.03],
            )


def test_downsample_preserves_integral(small_cfg):
    _, psi = qm.ground_state(0.1, small_cfg)
    grid = small_cfg.grid()
    dens = psi.density()
    down = downsample_density(dens, grid.points, 40)
    covered = grid.points[-1] - grid.points[0] + grid.dx
    assert np.sum(down) * covered / 40 == pytest.approx(1.0, abs=1e-8)
    assert np.all(down >= 0)


def test_initial_state_conventions(small_cfg):
    # at 1.6 sigma separation the joint ground state is a merged-well
    # state biased toward the deeper moving tweezer; the static-well
    # convention centers on the static tweezer at 0
    joint = qm.initial_state(small_cfg)
    static = qm.initial_state(small_cfg.replace(initial_state="static"))
    xg = small_cfg.grid().points
    dx = small_cfg.grid().dx
    assert np.sum(xg * joint.density()) * dx > 0.08
    assert abs(np.sum(xg * static.density()) * dx) < 1e-6


def test_initial_state_joint_localizes_at_separated_start(cfg):
    # at the default 4.4 sigma separation the joint state sits in the
    # moving tweezer at x0_start
    joint = qm.initial_state(cfg)
    xg = cfg.grid().points
    centroid = np.sum(xg * joint.density()) * cfg.grid().dx
    assert centroid == pytest.approx(cfg.x0_start, abs=0.01)
