"""Stochastic ascent traces through the fidelity landscape.

A handful of random initial protocols are optimized step-by-step; every
visit evaluates all M candidate tweezer positions and keeps the best.
The runs converge to local optima with nearly identical fidelities even
though the final protocols differ -- a glassy landscape.

Uses a reduced instance (N = 16 steps) so it finishes in about a minute;
pass --full for the T = 0.1, N = 40, M = 128 setting of the acceptance
suite (several minutes per seed batch).
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import qmoves as qm

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

full = "--full" in sys.argv
cfg = qm.PhysicsConfig()
lattice = qm.PositionLattice.default()
n_steps = 40 if full else 16
n_seeds = 8 if full else 6

bank = qm.build_bank(cfg, lattice, 0.1, n_steps)
psi0, phi = qm.initial_state(cfg), qm.target_state(cfg)
template = qm.OptimizerConfig(n_steps=n_steps, lattice=lattice)

traces, summary = qm.run_ensemble(n_seeds, template, bank, psi0, phi)

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for trace in traces:
    evals = np.arange(1, len(trace.fidelities) + 1) * lattice.m
    axes[0].semilogx(evals, trace.fidelities, alpha=0.7)
    axes[1].step(
        np.arange(trace.final_protocol.n_steps),
        trace.final_protocol.positions(),
        where="mid", alpha=0.6,
    )
axes[0].set_xlabel("fidelity evaluations")
axes[0].set_ylabel("fidelity")
axes[0].set_title("ascent traces")
axes[1].set_xlabel("time step")
axes[1].set_ylabel("$x_0$")
axes[1].set_title("final protocols (all local optima)")
fig.tight_layout()
fig.savefig(out / "optimizer_traces.png", dpi=140)
print(f"wrote {out / 'optimizer_traces.png'}")

print(f"final fidelities in [{summary['min_fidelity']:.4f}, "
      f"{summary['max_fidelity']:.4f}], relative spread "
      f"{summary['relative_spread']:.2%}")
print(f"sweeps to convergence: mean {summary['mean_sweeps']:.1f}, "
      f"max {summary['max_sweeps_used']}")
