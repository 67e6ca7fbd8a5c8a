"""Exact step propagators from precomputed spectral factorizations.

For each allowed tweezer position x^k the tridiagonal H_k is factorized
once (eigenvalues w_k, orthogonal eigenvectors V_k); a time step of any
size dt is then the exact unitary

    psi -> V_k diag(exp(-i w_k dt / hbar)) V_k^T psi

applied as two real matrix products on the (re, im) view of the state.
Factorizations are shared across banks with different dt, cached with
LRU eviction under an optional byte budget.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .config import PhysicsConfig
from .core import WaveFunction, build_hamiltonian, ground_state
from .errors import ContractError, DomainError, NumericError, ResourceError
from .protocols import Protocol

try:
    from scipy.linalg import eigh_tridiagonal
except ImportError as exc:  # pragma: no cover
    raise ImportError("scipy is required for spectral propagation") from exc


@dataclass(frozen=True)
class PositionLattice:
    """Quantized tweezer positions: M points with uniform spacing."""

    positions: np.ndarray
    spacing: float

    def __post_init__(self):
        pts = np.asarray(self.positions, dtype=float)
        if pts.ndim != 1 or len(pts) < 1:
            raise DomainError("lattice needs at least one position")
        if self.spacing <= 0:
            raise DomainError("lattice spacing must be positive")
        if len(pts) > 1:
            steps = np.diff(pts)
            if not np.allclose(steps, self.spacing, rtol=0, atol=1e-12):
                raise DomainError("lattice positions must be uniformly spaced")
        pts.setflags(write=False)
        object.__setattr__(self, "positions", pts)

    @classmethod
    def default(cls, m: int = 128, spacing: float = 1.0 / 64.0, center: float = 0.0):
        """M positions centered on `center`; the default covers (-1, 1) at sigma/8."""
        offset = center - 0.5 * (m - 1) * spacing
        return cls(offset + spacing * np.arange(m), spacing)

    @property
    def m(self) -> int:
        return len(self.positions)

    @property
    def x_min(self) -> float:
        return float(self.positions[0])

    @property
    def x_max(self) -> float:
        return float(self.positions[-1])

    def __eq__(self, other):
        return (
            isinstance(other, PositionLattice)
            and self.m == other.m
            and self.spacing == other.spacing
            and self.positions[0] == other.positions[0]
        )

    def __hash__(self):
        return hash((self.m, self.spacing, float(self.positions[0])))


class SpectralStore:
    """Per-position spectral factorizations with optional LRU byte budget.

    Without a budget the factorizations live in one dense (M, n, n)
    block so all-candidate scans run as a single broadcast matmul; with
    a budget they are kept in an LRU dict and evicted when over budget.
    Thread-safe; a built factorization is immutable and may be shared
    read-only by any number of concurrent evolutions.
    """

    def __init__(self, cfg: PhysicsConfig, lattice: PositionLattice, max_bytes: int | None = None):
        self.cfg = cfg
        self.lattice = lattice
        self.max_bytes = max_bytes
        self._lock = threading.RLock()
        n = cfg.n_grid
        self.bytes_per_entry = 8 * n * (n + 1)
        if max_bytes is None:
            self._dense_w = np.empty((lattice.m, n))
            self._dense_v = np.empty((lattice.m, n, n))
            self._dense_built = np.zeros(lattice.m, dtype=bool)
            self._entries = None
        else:
            self._dense_built = None
            self._entries: OrderedDict[int, tuple[np.ndarray, np.ndarray]] = OrderedDict()

    @property
    def n_built(self) -> int:
        if self._entries is None:
            return int(self._dense_built.sum())
        return len(self._entries)

    @property
    def bytes_used(self) -> int:
        return self.n_built * self.bytes_per_entry

    def _factorize(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        h = build_hamiltonian(float(self.lattice.positions[k]), self.cfg)
        try:
            return eigh_tridiagonal(h.diagonal, h.off_diagonal)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise NumericError(f"factorization failed at lattice index {k}: {exc}") from exc

    def get(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if not 0 <= k < self.lattice.m:
            raise DomainError(f"lattice index {k} out of range [0, {self.lattice.m})")
        if self._entries is None:
            if not self._dense_built[k]:
                w, v = self._factorize(k)
                with self._lock:
                    if not self._dense_built[k]:
                        self._dense_w[k] = w
                        self._dense_v[k] = v
                        self._dense_built[k] = True
            return self._dense_w[k], self._dense_v[k]
        with self._lock:
            entry = self._entries.get(k)
            if entry is not None:
                self._entries.move_to_end(k)
                return entry
        built = self._factorize(k)
        with self._lock:
            self._entries[k] = built
            self._entries.move_to_end(k)
            while (
                len(self._entries) > 1
                and len(self._entries) * self.bytes_per_entry > self.max_bytes
            ):
                self._entries.popitem(last=False)
        return built

    def dense_arrays(self) -> tuple[np.ndarray, np.ndarray] | None:
        """All factorizations as (M, n) energies and (M, n, n) vectors, or None if budgeted."""
        if self._entries is not None:
            return None
        if not self._dense_built.all():
            for k in np.nonzero(~self._dense_built)[0]:
                self.get(int(k))
        return self._dense_w, self._dense_v

    def build_all(self) -> None:
        need = self.lattice.m * self.bytes_per_entry
        if self.max_bytes is not None and need > self.max_bytes:
            raise ResourceError(
                f"eager bank needs {need / 1e6:.0f} MB but the budget is "
                f"{self.max_bytes / 1e6:.0f} MB"
            )
        for k in range(self.lattice.m):
            self.get(k)


def _real_apply(mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Real (n, n) matrix times complex vector via its float view (one dgemm)."""
    view = vec.view(np.float64).reshape(-1, 2)
    out = mat @ view
    return out.view(np.complex128).ravel()


@dataclass
class UnitaryBank:
    """Step propagators exp(-i H_k dt / hbar) for every lattice position."""

    store: SpectralStore
    dt: float
    _phases: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def cfg(self) -> PhysicsConfig:
        return self.store.cfg

    @property
    def lattice(self) -> PositionLattice:
        return self.store.lattice

    def phases(self, k: int) -> np.ndarray:
        ph = self._phases.get(k)
        if ph is None:
            w, _ = self.store.get(k)
            ph = np.exp(-1j * w * self.dt / self.cfg.hbar)
            with self._lock:
                self._phases[k] = ph
        return ph

    def step(self, k: int, values: np.ndarray) -> np.ndarray:
        """One exact step at lattice position k on raw complex grid values."""
        _, v = self.store.get(k)
        coeffs = _real_apply(v.T, np.ascontiguousarray(values))
        coeffs *= self.phases(k)
        return _real_apply(v, coeffs)

    def step_adjoint(self, k: int, values: np.ndarray) -> np.ndarray:
        _, v = self.store.get(k)
        coeffs = _real_apply(v.T, np.ascontiguousarray(values))
        coeffs *= np.conj(self.phases(k))
        return _real_apply(v, coeffs)

    def with_dt(self, dt: float) -> "UnitaryBank":
        """A bank for a different step size sharing the same factorizations."""
        return UnitaryBank(store=self.store, dt=dt)

    def _stacked_phases(self, energies: np.ndarray) -> np.ndarray:
        key = "stacked"
        ph = self._phases.get(key)
        if ph is None:
            ph = np.exp(-1j * energies * self.dt / self.cfg.hbar)
            with self._lock:
                self._phases[key] = ph
        return ph

    def candidate_fidelities(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """|<right| U_k |left>|^2 for every lattice position k.

        Unbudgeted stores evaluate all positions with one broadcast
        matmul over the dense factorization block; budgeted stores fall
        back to a per-position loop.
        """
        dx = self.cfg.grid().dx
        dense = self.store.dense_arrays()
        if dense is not None:
            energies, vectors = dense
            block = np.empty((4, len(left)))
            block[0] = left.real
            block[1] = left.imag
            block[2] = right.real
            block[3] = right.imag
            tr = block @ vectors  # (M, 4, n)
            a = tr[:, 0, :] + 1j * tr[:, 1, :]
            b = tr[:, 2, :] - 1j * tr[:, 3, :]
            ph = self._stacked_phases(energies)
            return np.abs(np.einsum("kn,kn,kn->k", b, ph, a) * dx) ** 2
        out = np.empty(self.lattice.m)
        block = np.empty((len(left), 4))
        block[:, 0] = left.real
        block[:, 1] = left.imag
        block[:, 2] = right.real
        block[:, 3] = right.imag
        for k in range(self.lattice.m):
            _, v = self.store.get(k)
            tr = v.T @ block
            a = tr[:, 0] + 1j * tr[:, 1]
            b = tr[:, 2] - 1j * tr[:, 3]
            out[k] = abs(np.dot(b * self.phases(k), a) * dx) ** 2
        return out


def build_bank(
    cfg: PhysicsConfig,
    lattice: PositionLattice,
    duration: float,
    n_steps: int,
    eager: bool = False,
    store: SpectralStore | None = None,
    max_bytes: int | None = None,
) -> UnitaryBank:
    """Bank of exact step unitaries with dt = T / N."""
    if n_steps < 1:
        raise DomainError("need at least one step")
    if duration <= 0:
        raise DomainError("duration must be positive")
    if store is None:
        store = SpectralStore(cfg, lattice, max_bytes=max_bytes)
    elif store.lattice != lattice:
        raise ContractError("store was built for a different lattice")
    bank = UnitaryBank(store=store, dt=duration / n_steps)
    if eager:
        store.build_all()
    return bank


@dataclass(frozen=True)
class DiscreteProtocol:
    """Index-quantized protocol: one lattice index per time step."""

    indices: np.ndarray
    lattice: PositionLattice

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or len(idx) < 1:
            raise ContractError("discrete protocol needs at least one step")
        if idx.min() < 0 or idx.max() >= self.lattice.m:
            raise ContractError("lattice index out of range")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def n_steps(self) -> int:
        return len(self.indices)

    def positions(self) -> np.ndarray:
        return self.lattice.positions[self.indices]


def quantize_protocol(protocol: Protocol, lattice: PositionLattice, n_steps: int) -> DiscreteProtocol:
    """Sample at step midpoints and round to the nearest lattice position.

    Exact half-way ties round toward the previous step's position so a
    re-quantized constant protocol stays constant.
    """
    if n_steps < 1:
        raise DomainError("need at least one step")
    dt = protocol.duration / n_steps
    mids = (np.arange(n_steps) + 0.5) * dt
    xs = protocol.position_at(mids)
    half = 0.5 * lattice.spacing
    if xs.min() < lattice.x_min - half or xs.max() > lattice.x_max + half:
        raise DomainError(
            f"protocol range [{xs.min():.4f}, {xs.max():.4f}] outside lattice range "
            f"[{lattice.x_min:.4f}, {lattice.x_max:.4f}]"
        )
    rel = (xs - lattice.x_min) / lattice.spacing
    prev = int(np.clip(np.floor(
        (protocol.position_at(0.0) - lattice.x_min) / lattice.spacing + 0.5
    ), 0, lattice.m - 1))
    idx = np.empty(n_steps, dtype=np.int64)
    for i, r in enumerate(rel):
        lo = int(np.floor(r))
        frac = r - lo
        if frac > 0.5:
            k = lo + 1
        elif frac < 0.5:
            k = lo
        else:
            k = lo if prev <= lo else lo + 1
        idx[i] = min(max(k, 0), lattice.m - 1)
        prev = idx[i]
    return DiscreteProtocol(indices=idx, lattice=lattice)


def fidelity(psi: WaveFunction, phi: WaveFunction) -> float:
    """Squared overlap |<phi|psi>|^2."""
    return abs(psi.overlap(phi)) ** 2


@dataclass(frozen=True)
class SimulationResult:
    fidelity: float
    final_state: WaveFunction
    frames: list | None = None


def downsample_density(density: np.ndarray, x: np.ndarray, n_out: int = 160) -> np.ndarray:
    """Bin-averaged density on n_out equal-width bins.

    Bins the point masses n_i dx, so the rectangle-rule integral (the
    conserved norm) is preserved exactly.
    """
    dx = x[1] - x[0]
    edges = np.linspace(x[0] - dx / 2, x[-1] + dx / 2, n_out + 1)
    mass, _ = np.histogram(x, bins=edges, weights=density * dx)
    return mass / np.diff(edges)


def evolve(
    dp: DiscreteProtocol,
    bank: UnitaryBank,
    psi0: WaveFunction,
    target: WaveFunction,
    frame_stride: int = 0,
) -> SimulationResult:
    """Apply the step unitaries in order and score against the target state."""
    if dp.lattice != bank.lattice:
        raise ContractError("discrete protocol and bank use different lattices")
    if psi0.grid != bank.cfg.grid():
        raise ContractError("initial state grid does not match the bank")
    values = np.ascontiguousarray(psi0.values)
    xg = psi0.grid.points
    frames = [] if frame_stride > 0 else None
    if frames is not None:
        frames.append((0.0, downsample_density(np.abs(values) ** 2, xg)))
    for i, k in enumerate(dp.indices):
        values = bank.step(int(k), values)
        if frames is not None:
            step_no = i + 1
            if step_no % frame_stride == 0 or step_no == dp.n_steps:
                frames.append(
                    (step_no * bank.dt, downsample_density(np.abs(values) ** 2, xg))
                )
    final = WaveFunction(values, psi0.grid)
    return SimulationResult(
        fidelity=fidelity(final, target), final_state=final, frames=frames
    )


_STATE_CACHE: dict = {}


def initial_state(cfg: PhysicsConfig) -> WaveFunction:
    """Default transport initial state per the configured convention.

    "joint": ground state of the full two-tweezer Hamiltonian at x0_start.
    "static": ground state of the static tweezer alone.
    """
    key = ("init", cfg)
    if key not in _STATE_CACHE:
        if cfg.initial_state == "static":
            if cfg.amp_static <= 0:
                raise DomainError("static initial state needs a static tweezer")
            solo = cfg.replace(amp_moving=cfg.amp_static, amp_static=0.0)
            _, psi = ground_state(cfg.x_static, solo)
        else:
            _, psi = ground_state(cfg.x0_start, cfg)
        _STATE_CACHE[key] = psi
    return _STATE_CACHE[key]


def target_state(cfg: PhysicsConfig) -> WaveFunction:
    """Transport target: ground state of the full Hamiltonian at x0_end."""
    key = ("target", cfg)
    if key not in _STATE_CACHE:
        _, phi = ground_state(cfg.x0_end, cfg)
        _STATE_CACHE[key] = phi
    return _STATE_CACHE[key]


def default_n_rule(duration: float) -> int:
    """Step count targeting dt ~ 5e-4 with a floor of 64 steps."""
    return max(64, int(round(duration / 5e-4)))


def simulate_protocol(
    protocol: Protocol,
    cfg: PhysicsConfig,
    lattice: PositionLattice | None = None,
    n_steps: int | None = None,
    frame_stride: int = 0,
    store: SpectralStore | None = None,
) -> SimulationResult:
    """Quantize a protocol and evolve the default initial state against the target.

    Single entry point shared by the CLI and the HTTP service so both
    yield bit-identical fidelities for the same protocol.
    """
    lattice = PositionLattice.default() if lattice is None else lattice
    n = default_n_rule(protocol.duration) if n_steps is None else n_steps
    bank = build_bank(cfg, lattice, protocol.duration, n, store=store)
    dp = quantize_protocol(protocol, lattice, n)
    return evolve(dp, bank, initial_state(cfg), target_state(cfg), frame_stride)


def fidelity_curve(
    protocol_family,
    cfg: PhysicsConfig,
    lattice: PositionLattice,
    t_list,
    n_rule=None,
    store: SpectralStore | None = None,
) -> list[dict]:
    """Fidelity versus duration for a family of protocols.

    protocol_family maps a duration T to a Protocol; n_rule maps T to a
    step count (default: default_n_rule).  Factorizations are shared
    across durations.
    """
    t_list = list(t_list)
    if not t_list:
        raise DomainError("need at least one duration")
    if any(b < a for a, b in zip(t_list, t_list[1:])):
        raise DomainError("durations must be ascending")
    n_rule = default_n_rule if n_rule is None else n_rule
    if store is None:
        store = SpectralStore(cfg, lattice)
    psi0 = initial_state(cfg)
    phi = target_state(cfg)
    rows = []
    for t in t_list:
        protocol = protocol_family(t)
        bank = build_bank(cfg, lattice, t, n_rule(t), store=store)
        dp = quantize_protocol(protocol, lattice, n_rule(t))
        res = evolve(dp, bank, psi0, phi)
        rows.append({"T": float(t), "F": res.fidelity, "protocol_kind": protocol.kind})
    return rows
