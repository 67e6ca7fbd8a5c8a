"""Why resonant tunneling cannot replace transport.

Two equal tweezers at separation d form a double well; the ground
doublet splitting sets the population-transfer time pi / Delta.  The
splitting decays exponentially with kappa = sqrt(-2 m E0), so within the
classical speed limit the atom can only tunnel a fraction of the
required distance.
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
curve = qm.tunnel_curve(cfg, np.linspace(0.0, 1.0, 81))
tcsl = qm.classical_speed_limit(cfg, 1.1).t_csl_exact

kappa, r_sq = qm.fit_decay_constant(curve, cfg)
kappa_th = np.sqrt(-2 * curve.ground_energies[-1])
reach = qm.max_tunnel_distance(curve, tcsl)

fig, ax = plt.subplots(figsize=(6.5, 4.2))
ax.semilogy(curve.separations, curve.splittings, label="splitting $\\Delta$")
ax.axhline(np.pi / tcsl, color="green", alpha=0.4,
           label="coupling that transfers in $T_{CSL}$")
ax.axvline(reach, color="gray", ls=":", label=f"reach = {reach:.2f}")
ax.set_xlabel("tweezer separation $d$")
ax.set_ylabel("$E_1 - E_0$")
ax.legend()
fig.tight_layout()
fig.savefig(out / "tunnel_coupling.png", dpi=140)
print(f"wrote {out / 'tunnel_coupling.png'}")

print(f"decay constant: fit {kappa:.2f} vs sqrt(-2 m E0) = {kappa_th:.2f} "
      f"(R^2 = {r_sq:.5f})")
print(f"max distance transferable within T_CSL: {reach:.3f} (needed: 1.1)")
print(f"transfer time at 3 sigma: "
      f"{np.interp(3 * cfg.sigma, curve.separations, curve.transfer_times):.3f}")
