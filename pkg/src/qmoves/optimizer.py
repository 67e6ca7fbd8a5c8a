"""Stochastic local-ascent optimization over discretized protocols.

The algorithm sweeps the time steps in a fresh random permutation; at
each visited step W it scores all M candidate lattice positions through

    F_k = |<phi_{W+1}| U_k |psi_{W-1}>|^2

and keeps the best.  The left state psi_{W-1} (steps before W applied)
and right costate phi_{W+1} (steps after W conjugate-applied) are
maintained from checkpoints spaced sqrt(N) apart, so a visit costs
O(sqrt(N)) step applications plus one M-way scan instead of a full
re-propagation.

Ascent is monotone (the incumbent setting is always among the
candidates) and terminates at a local optimum: a sweep that changes
nothing proves no single-step replacement can improve the fidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import WaveFunction
from .errors import ContractError, DomainError
from .propagation import DiscreteProtocol, PositionLattice, UnitaryBank

RNG_ID = "philox4x64"


def _make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class OptimizerConfig:
    n_steps: int
    lattice: PositionLattice
    seed: int = 0
    max_sweeps: int = 200
    tolerance: float = 0.0
    pin_ends: bool = False

    def __post_init__(self):
        if self.n_steps < 1:
            raise DomainError("need at least one step")
        if self.max_sweeps < 1:
            raise DomainError("need at least one sweep")
        if self.tolerance < 0:
            raise DomainError("tolerance must be non-negative")


@dataclass
class OptimizationTrace:
    """Record of one optimization run: one fidelity entry per step visit."""

    seed: int
    n_steps: int
    m: int
    duration: float
    fidelities: np.ndarray
    sweep_bounds: list
    final_protocol: DiscreteProtocol
    final_fidelity: float
    updates: int
    sweeps: int
    converged: bool
    rng: str = RNG_ID

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "N": self.n_steps,
            "M": self.m,
            "T": self.duration,
            "fidelities": [float(f) for f in self.fidelities],
            "sweep_bounds": [int(b) for b in self.sweep_bounds],
            "final_protocol": [int(k) for k in self.final_protocol.indices],
            "converged": self.converged,
            "updates": self.updates,
            "sweeps": self.sweeps,
            "rng": self.rng,
        }


def _scan_all(bank: UnitaryBank, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """F_k for every lattice position at one step."""
    return bank.candidate_fidelities(left, right)


class _PartialProducts:
    """Prefix states and suffix costates with sqrt(N)-spaced checkpoints.

    prefix(j): psi0 with the first j steps applied.
    suffix(j): target with steps j..N-1 conjugate-applied.
    Updating step w invalidates prefixes beyond w and suffixes up to w;
    watermarks track the still-valid contiguous checkpoint ranges.
    """

    def __init__(self, bank: UnitaryBank, indices: np.ndarray, psi0: np.ndarray, phi: np.ndarray):
        self.bank = bank
        self.k = np.array(indices, dtype=np.int64)
        n = len(self.k)
        self.n = n
        self.stride = max(1, int(math.isqrt(n)))
        self.pre_slots = list(range(0, n + 1, self.stride))
        if self.pre_slots[-1] != n:
            self.pre_slots.append(n)
        self.suf_slots = sorted({n - s for s in self.pre_slots} | {0, n})
        self.pre_cp: dict[int, np.ndarray] = {0: np.ascontiguousarray(psi0)}
        self.suf_cp: dict[int, np.ndarray] = {n: np.ascontiguousarray(phi)}
        # fill all checkpoints with one forward and one backward pass
        state = self.pre_cp[0]
        for j in range(1, n + 1):
            state = bank.step(int(self.k[j - 1]), state)
            if j in self.pre_slots:
                self.pre_cp[j] = state
        self.pre_valid = n
        state = self.suf_cp[n]
        for j in range(n - 1, -1, -1):
            state = bank.step_adjoint(int(self.k[j]), state)
            if j in self.suf_slots:
                self.suf_cp[j] = state
        self.suf_valid = 0

    def prefix(self, j: int) -> np.ndarray:
        start = max(s for s in self.pre_slots if s <= j and s <= self.pre_valid)
        state = self.pre_cp[start]
        for i in range(start, j):
            state = self.bank.step(int(self.k[i]), state)
            if (i + 1) in self.pre_slots:
                self.pre_cp[i + 1] = state
                self.pre_valid = max(self.pre_valid, i + 1)
        return state

    def suffix(self, j: int) -> np.ndarray:
        start = min(s for s in self.suf_slots if s >= j and s >= self.suf_valid)
        state = self.suf_cp[start]
        for i in range(start - 1, j - 1, -1):
            state = self.bank.step_adjoint(int(self.k[i]), state)
            if i in self.suf_slots:
                self.suf_cp[i] = state
                self.suf_valid = min(self.suf_valid, i)
        return state

    def update(self, w: int, new_k: int) -> None:
        self.k[w] = new_k
        self.pre_valid = min(self.pre_valid, w)
        self.suf_valid = max(self.suf_valid, w + 1)


def local_fidelities(
    dp: DiscreteProtocol,
    step: int,
    bank: UnitaryBank,
    psi0: WaveFunction,
    phi: WaveFunction,
    left: np.ndarray | None = None,
    right: np.ndarray | None = None,
) -> np.ndarray:
    """Fidelities F_k for every candidate position at the given step (0-based).

    left/right override the internally propagated partial states; they
    must be raw complex grid values.
    """
    if dp.lattice != bank.lattice:
        raise ContractError("protocol and bank use different lattices")
    if not 0 <= step < dp.n_steps:
        raise DomainError(f"step {step} out of range [0, {dp.n_steps})")
    if left is None:
        left = np.ascontiguousarray(psi0.values)
        for i in range(step):
            left = bank.step(int(dp.indices[i]), left)
    if right is None:
        right = np.ascontiguousarray(phi.values)
        for i in range(dp.n_steps - 1, step, -1):
            right = bank.step_adjoint(int(dp.indices[i]), right)
    return _scan_all(bank, left, right)


def _best_index(scores: np.ndarray, incumbent: int) -> int:
    best = int(np.argmax(scores))  # lowest index among exact ties
    if scores[incumbent] >= scores[best]:
        return incumbent
    return best


def sweep(
    dp: DiscreteProtocol,
    bank: UnitaryBank,
    psi0: WaveFunction,
    phi: WaveFunction,
    rng: np.random.Generator,
    pinned: tuple = (),
) -> tuple[DiscreteProtocol, int, list]:
    """One full sweep: visit all (unpinned) steps in a random permutation.

    Returns the updated protocol, the number of changed steps, and the
    per-visit fidelity fragment.
    """
    if dp.lattice != bank.lattice:
        raise ContractError("protocol and bank use different lattices")
    parts = _PartialProducts(bank, dp.indices, psi0.values, phi.values)
    changes, fragment = _sweep_inner(parts, bank, rng, set(pinned))
    return DiscreteProtocol(parts.k, dp.lattice), changes, fragment


def _sweep_inner(parts: _PartialProducts, bank: UnitaryBank, rng, pinned: set):
    candidates = [w for w in range(parts.n) if w not in pinned]
    order = rng.permutation(len(candidates))
    changes = 0
    fragment = []
    for oi in order:
        w = candidates[oi]
        left = parts.prefix(w)
        right = parts.suffix(w + 1)
        scores = _scan_all(bank, left, right)
        incumbent = int(parts.k[w])
        chosen = _best_index(scores, incumbent)
        if chosen != incumbent:
            parts.update(w, chosen)
            changes += 1
        fragment.append(float(scores[chosen]))
    return changes, fragment


def optimize(
    ocfg: OptimizerConfig,
    bank: UnitaryBank,
    psi0: WaveFunction,
    phi: WaveFunction,
) -> OptimizationTrace:
    """Run sweeps until a zero-change sweep, tolerance, or max_sweeps."""
    rng = _make_rng(ocfg.seed)
    n, m = ocfg.n_steps, ocfg.lattice.m
    indices = rng.integers(0, m, size=n)
    pinned: tuple = ()
    if ocfg.pin_ends:
        cfg = bank.cfg
        lat = ocfg.lattice
        first = int(np.argmin(np.abs(lat.positions - cfg.x0_start)))
        last = int(np.argmin(np.abs(lat.positions - cfg.x0_end)))
        indices[0], indices[-1] = first, last
        pinned = (0, n - 1) if n > 1 else (0,)

    parts = _PartialProducts(bank, indices, psi0.values, phi.values)
    fidelities: list[float] = []
    sweep_bounds: list[int] = []
    updates = 0
    sweeps = 0
    converged = False
    while sweeps < ocfg.max_sweeps:
        before = fidelities[-1] if fidelities else None
        changes, fragment = _sweep_inner(parts, bank, rng, set(pinned))
        fidelities.extend(fragment)
        sweeps += 1
        sweep_bounds.append(len(fidelities))
        updates += changes
        if changes == 0:
            converged = True
            break
        if ocfg.tolerance > 0 and before is not None:
            if fidelities[-1] - before <= ocfg.tolerance:
                converged = True
                break

    dp = DiscreteProtocol(parts.k, ocfg.lattice)
    final_fid = fidelities[-1] if fidelities else float("nan")
    return OptimizationTrace(
        seed=ocfg.seed,
        n_steps=n,
        m=m,
        duration=bank.dt * n,
        fidelities=np.asarray(fidelities),
        sweep_bounds=sweep_bounds,
        final_protocol=dp,
        final_fidelity=float(final_fid),
        updates=updates,
        sweeps=sweeps,
        converged=converged,
    )


def run_ensemble(
    n_seeds: int,
    template: OptimizerConfig,
    bank: UnitaryBank,
    psi0: WaveFunction,
    phi: WaveFunction,
    seeds=None,
    progress=None,
) -> tuple[list[OptimizationTrace], dict]:
    """Independent seeded runs plus a spread summary."""
    if n_seeds < 1:
        raise DomainError("need at least one seed")
    seeds = list(range(n_seeds)) if seeds is None else list(seeds)
    traces = []
    for s in seeds:
        ocfg = OptimizerConfig(
            n_steps=template.n_steps,
            lattice=template.lattice,
            seed=int(s),
            max_sweeps=template.max_sweeps,
            tolerance=template.tolerance,
            pin_ends=template.pin_ends,
        )
        trace = optimize(ocfg, bank, psi0, phi)
        traces.append(trace)
        if progress is not None:
            progress(trace)
    finals = np.array([t.final_fidelity for t in traces])
    summary = {
        "n_seeds": len(seeds),
        "min_fidelity": float(finals.min()),
        "max_fidelity": float(finals.max()),
        "median_fidelity": float(np.median(finals)),
        "relative_spread": float((finals.max() - finals.min()) / finals.max()),
        "n_converged": int(sum(t.converged for t in traces)),
        "max_sweeps_used": int(max(t.sweeps for t in traces)),
        "mean_sweeps": float(np.mean([t.sweeps for t in traces])),
    }
    return traces, summary
