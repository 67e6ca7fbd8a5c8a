import numpy as np
import pytest

import qmoves as qm
from qmoves.errors import DomainError
from qmoves.optimizer import _make_rng

MONOTONE_SLACK = 1e-12  # exact ascent holds in exact arithmetic; recorded
# values are measured along different partial-product paths and wobble
# at machine precision


def brute_force_locals(dp, step, bank, psi0, phi):
    out = np.empty(dp.lattice.m)
    for k in range(dp.lattice.m):
        trial = dp.indices.copy()
        trial[step] = k
        res = qm.evolve(qm.DiscreteProtocol(trial, dp.lattice), bank, psi0, phi)
        out[k] = res.fidelity
    return out


class TestLocalFidelities:
    def test_single_step_equals_full_evolution(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        bank = small_bank.with_dt(0.05)
        dp = qm.DiscreteProtocol(np.array([2]), small_lattice)
        local = qm.local_fidelities(dp, 0, bank, psi0, phi)
        brute = brute_force_locals(dp, 0, bank, psi0, phi)
        assert np.max(np.abs(local - brute)) < 1e-12

    def test_incumbent_matches_protocol_fidelity(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        rng = np.random.default_rng(11)
        dp = qm.DiscreteProtocol(rng.integers(0, small_lattice.m, 5), small_lattice)
        full = qm.evolve(dp, small_bank, psi0, phi).fidelity
        for w in range(5):
            local = qm.local_fidelities(dp, w, small_bank, psi0, phi)
            assert local[dp.indices[w]] == pytest.approx(full, abs=1e-10)

    def test_all_steps_match_brute_force(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        rng = np.random.default_rng(5)
        dp = qm.DiscreteProtocol(rng.integers(0, small_lattice.m, 5), small_lattice)
        for w in range(5):
            local = qm.local_fidelities(dp, w, small_bank, psi0, phi)
            brute = brute_force_locals(dp, w, small_bank, psi0, phi)
            assert np.max(np.abs(local - brute)) < 1e-10

    def test_step_out_of_range(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        dp = qm.DiscreteProtocol(np.zeros(3, dtype=int), small_lattice)
        with pytest.raises(DomainError):
            qm.local_fidelities(dp, 3, small_bank, psi0, phi)


class TestSweep:
    def test_fixed_point_unchanged(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        ocfg = qm.OptimizerConfig(n_steps=4, lattice=small_lattice, seed=2, max_sweeps=80)
        trace = qm.optimize(ocfg, small_bank, psi0, phi)
        assert trace.converged
        dp, changes, _ = qm.sweep(
            trace.final_protocol, small_bank, psi0, phi, _make_rng(123)
        )
        assert changes == 0
        assert np.array_equal(dp.indices, trace.final_protocol.indices)

    def test_sweep_never_decreases_fidelity(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        rng = _make_rng(9)
        dp = qm.DiscreteProtocol(rng.integers(0, small_lattice.m, 6), small_lattice)
        before = qm.evolve(dp, small_bank, psi0, phi).fidelity
        dp2, _, fragment = qm.sweep(dp, small_bank, psi0, phi, rng)
        after = qm.evolve(dp2, small_bank, psi0, phi).fidelity
        assert after >= before - MONOTONE_SLACK
        assert len(fragment) == 6

    def test_every_step_visited_once(self, small_bank, small_lattice, small_states):
        # one sweep visits each of the N steps exactly once, M candidate
        # evaluations per visit
        psi0, phi = small_states
        rng = _make_rng(1)
        dp = qm.DiscreteProtocol(rng.integers(0, small_lattice.m, 5), small_lattice)
        _, _, fragment = qm.sweep(dp, small_bank, psi0, phi, rng)
        assert len(fragment) == 5


class TestOptimize:
    def test_single_step_exhaustive(self, small_cfg, small_lattice, small_states):
        psi0, phi = small_states
        bank = qm.build_bank(small_cfg, small_lattice, 0.02, 1)
        ocfg = qm.OptimizerConfig(n_steps=1, lattice=small_lattice, seed=0)
        trace = qm.optimize(ocfg, bank, psi0, phi)
        brute = [
            qm.evolve(qm.DiscreteProtocol(np.array([k]), small_lattice), bank, psi0, phi).fidelity
            for k in range(small_lattice.m)
        ]
        assert trace.final_fidelity == pytest.approx(max(brute), abs=1e-12)
        assert trace.converged

    def test_monotone_trace(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        for seed in range(5):
            ocfg = qm.OptimizerConfig(n_steps=6, lattice=small_lattice, seed=seed)
            trace = qm.optimize(ocfg, small_bank, psi0, phi)
            assert np.all(np.diff(trace.fidelities) >= -MONOTONE_SLACK)

    def test_seed_reproducibility(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        ocfg = qm.OptimizerConfig(n_steps=5, lattice=small_lattice, seed=77)
        a = qm.optimize(ocfg, small_bank, psi0, phi)
        b = qm.optimize(ocfg, small_bank, psi0, phi)
        assert np.array_equal(a.fidelities, b.fidelities)
        assert np.array_equal(a.final_protocol.indices, b.final_protocol.indices)
        assert a.final_fidelity == b.final_fidelity

    def test_converged_is_local_optimum(self, small_bank, small_lattice, small_states):
        # no single-step replacement may beat a converged protocol
        psi0, phi = small_states
        ocfg = qm.OptimizerConfig(n_steps=5, lattice=small_lattice, seed=3)
        trace = qm.optimize(ocfg, small_bank, psi0, phi)
        assert trace.converged
        best = trace.final_fidelity
        for w in range(5):
            brute = brute_force_locals(trace.final_protocol, w, small_bank, psi0, phi)
            assert brute.max() <= best + 1e-12

    def test_non_convergence_reported(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        ocfg = qm.OptimizerConfig(n_steps=6, lattice=small_lattice, seed=0, max_sweeps=1)
        trace = qm.optimize(ocfg, small_bank, psi0, phi)
        assert trace.sweeps == 1
        if trace.updates > 0:
            assert not trace.converged

    def test_pinned_ends(self, small_cfg, small_lattice, small_states):
        psi0, phi = small_states
        bank = qm.build_bank(small_cfg, small_lattice, 0.05, 6)
        ocfg = qm.OptimizerConfig(
            n_steps=6, lattice=small_lattice, seed=4, pin_ends=True
        )
        trace = qm.optimize(ocfg, bank, psi0, phi)
        first = int(np.argmin(np.abs(small_lattice.positions - small_cfg.x0_start)))
        last = int(np.argmin(np.abs(small_lattice.positions - small_cfg.x0_end)))
        assert trace.final_protocol.indices[0] == first
        assert trace.final_protocol.indices[-1] == last

    def test_trace_schema(self, small_bank, small_lattice, small_states):
        from qmoves.service import validate_payload

        psi0, phi = small_states
        ocfg = qm.OptimizerConfig(n_steps=4, lattice=small_lattice, seed=6)
        trace = qm.optimize(ocfg, small_bank, psi0, phi)
        validate_payload("trace", trace.to_json_dict())


class TestEnsemble:
    def test_identical_seeds_identical_traces(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        template = qm.OptimizerConfig(n_steps=4, lattice=small_lattice)
        traces, _ = qm.run_ensemble(
            2, template, small_bank, psi0, phi, seeds=[5, 5]
        )
        assert np.array_equal(traces[0].fidelities, traces[1].fidelities)
        assert np.array_equal(
            traces[0].final_protocol.indices, traces[1].final_protocol.indices
        )

    def test_summary_fields(self, small_bank, small_lattice, small_states):
        psi0, phi = small_states
        template = qm.OptimizerConfig(n_steps=4, lattice=small_lattice)
        traces, summary = qm.run_ensemble(3, template, small_bank, psi0, phi)
        assert summary["n_seeds"] == 3
        assert summary["min_fidelity"] <= summary["median_fidelity"] <= summary["max_fidelity"]
        assert 0 <= summary["relative_spread"] <= 1
        assert summary["n_converged"] == sum(t.converged for t in traces)
