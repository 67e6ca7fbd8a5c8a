"""Tunneling feasibility: level splitting versus tweezer separation.

Resonant tunneling is modeled with two equal-amplitude Gaussians at
+/- d/2.  The two lowest levels give the splitting Delta = E1 - E0, the
tunnel coupling J = Delta / 2, and the two-level population transfer
time pi hbar / Delta.  On the far tail the splitting decays like
exp(-kappa d) with kappa = sqrt(-2 m E0) / hbar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PhysicsConfig
from .core import potential, spectral_decomposition
from .errors import DomainError

KAPPA_FIT_WINDOW = (4.0, 8.0)  # in units of sigma


def _symmetric_config(cfg: PhysicsConfig, d: float) -> PhysicsConfig:
    """Equal-amplitude double well at +/- d/2 (resonance condition)."""
    return cfg.replace(amp_static=cfg.amp_moving, x_static=-d / 2.0)


def _barrier_height(cfg_sym: PhysicsConfig, d: float) -> float:
    """V(0) minus the potential minimum, from a refined analytic sampling."""
    xs = np.linspace(cfg_sym.grid_min, cfg_sym.grid_max, 8 * cfg_sym.n_grid)
    v = potential(xs, d / 2.0, cfg_sym)
    v0 = float(potential(np.array([0.0]), d / 2.0, cfg_sym)[0])
    return max(v0 - float(v.min()), 0.0)


@dataclass(frozen=True)
class TunnelCurve:
    """Splitting, coupling, transfer time, and barrier height per separation."""

    separations: np.ndarray
    splittings: np.ndarray
    couplings: np.ndarray
    transfer_times: np.ndarray
    barrier_heights: np.ndarray
    ground_energies: np.ndarray

    def __post_init__(self):
        for name in (
            "separations",
            "splittings",
            "couplings",
            "transfer_times",
            "barrier_heights",
            "ground_energies",
        ):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def rows(self, cfg: PhysicsConfig):
        """CSV rows: d, splitting, transfer_time, barrier_height, E0, tunneling_regime."""
        for i, d in enumerate(self.separations):
            v_top = -2.0 * cfg.amp_moving * np.exp(-(d**2) / (8.0 * cfg.sigma**2))
            yield {
                "d": float(d),
                "splitting": float(self.splittings[i]),
                "transfer_time": float(self.transfer_times[i]),
                "barrier_height": float(self.barrier_heights[i]),
                "E0": float(self.ground_energies[i]),
                "tunneling_regime": bool(self.ground_energies[i] < v_top),
            }


def tunnel_curve(cfg: PhysicsConfig, d_list) -> TunnelCurve:
    """Lowest-doublet splitting for each separation in ascending d_list."""
    ds = np.asarray(list(d_list), dtype=float)
    if len(ds) < 1:
        raise DomainError("need at least one separation")
    if np.any(ds < 0):
        raise DomainError("separations must be non-negative")
    if np.any(np.diff(ds) <= 0):
        raise DomainError("separations must be strictly ascending")
    if ds[-1] / 2.0 > cfg.grid_max - 4 * cfg.sigma:
        raise DomainError("largest separation does not fit the grid with margin")

    splittings = np.empty_like(ds)
    barriers = np.empty_like(ds)
    e0s = np.empty_like(ds)
    for i, d in enumerate(ds):
        sym = _symmetric_config(cfg, d)
        dec = spectral_decomposition(d / 2.0, sym, 2)
        splittings[i] = dec.energies[1] - dec.energies[0]
        e0s[i] = dec.energies[0]
        barriers[i] = _barrier_height(sym, d)
    couplings = splittings / 2.0
    with np.errstate(divide="ignore"):
        transfer = np.pi * cfg.hbar / splittings
    return TunnelCurve(
        separations=ds,
        splittings=splittings,
        couplings=couplings,
        transfer_times=transfer,
        barrier_heights=barriers,
        ground_energies=e0s,
    )


def max_tunnel_distance(curve: TunnelCurve, t_budget: float) -> float:
    """Largest separation whose transfer time fits the budget (monotone interpolation)."""
    if t_budget <= 0:
        raise DomainError("time budget must be positive")
    tt = curve.transfer_times
    ds = curve.separations
    if t_budget >= tt[-1]:
        return float(ds[-1])
    if t_budget < tt[0]:
        raise DomainError("budget below the fastest sampled transfer; no crossing in range")
    # transfer time grows monotonically with separation on the sampled curve
    return float(np.interp(np.log(t_budget), np.log(tt), ds))


def barrier_report(cfg: PhysicsConfig, d: float) -> tuple[float, float, bool]:
    """(E0, barrier height, tunneling regime flag) for one separation.

    The flag is true iff the ground state lies below the barrier top,
    i.e. the crossing between the wells is classically forbidden.
    """
    if d < 0:
        raise DomainError("separation must be non-negative")
    sym = _symmetric_config(cfg, d)
    dec = spectral_decomposition(d / 2.0, sym, 1)
    e0 = float(dec.energies[0])
    barrier = _barrier_height(sym, d)
    v_top = float(potential(np.array([0.0]), d / 2.0, sym)[0])
    return e0, barrier, bool(e0 < v_top)


def fit_decay_constant(curve: TunnelCurve, cfg: PhysicsConfig, window=None) -> tuple[float, float]:
    """Least-squares decay rate of log(splitting) on the asymptotic tail.

    Returns (kappa, r_squared).  The default window [4 sigma, 8 sigma]
    excludes the merged-well region and the grid noise floor.
    """
    lo, hi = window if window is not None else (
        KAPPA_FIT_WINDOW[0] * cfg.sigma,
        KAPPA_FIT_WINDOW[1] * cfg.sigma,
    )
    mask = (curve.separations >= lo) & (curve.separations <= hi)
    if mask.sum() < 3:
        raise DomainError("fit window contains fewer than three samples")
    d = curve.separations[mask]
    y = np.log(curve.splittings[mask])
    slope, intercept = np.polyfit(d, y, 1)
    resid = y - (slope * d + intercept)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_sq = 1.0 - ss_res / ss_tot
    return float(-slope), r_sq
