"""Transport fidelity versus protocol duration for the reference families.

Reproduces the qualitative picture: fidelity rises sharply near the
classical speed limit; the counter-diabatic corrections push the usable
durations down toward T_CSL, and the double-tweezer correction (built
from the approximate gauge potential) eventually wanes.

Runs a few minutes: each duration is one full quantized evolution.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import qmoves as qm

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

cfg = qm.PhysicsConfig()
tcsl = qm.classical_speed_limit(cfg, cfg.transport_distance).t_csl_exact
table = qm.default_metric_table(cfg)
lattice = qm.PositionLattice.default()
store = qm.SpectralStore(cfg, lattice)

t_list = list(np.linspace(0.5, 2.0, 16) * tcsl)

fig, ax = plt.subplots(figsize=(6.5, 4.2))
for kind, style in [("cubic", ":"), ("cd_single", "--"), ("cd_double", "-")]:
    rows = qm.fidelity_curve(
        lambda t, k=kind: qm.make_reference_protocol(k, t, cfg, table=table),
        cfg, lattice, t_list, store=store,
    )
    f = [r["F"] for r in rows]
    ax.plot(np.array(t_list) / tcsl, f, style, label=kind)
    print(f"{kind:10s} F(T_CSL) = {np.interp(1.0, np.array(t_list) / tcsl, f):.3f}")

ax.axvline(1.0, color="green", alpha=0.3, label="$T_{CSL}$")
ax.set_xlabel("$T / T_{CSL}$")
ax.set_ylabel("fidelity")
ax.set_ylim(0, 1)
ax.legend()
fig.tight_layout()
fig.savefig(out / "fidelity_curve.png", dpi=140)
print(f"wrote {out / 'fidelity_curve.png'}")
