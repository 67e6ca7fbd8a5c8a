"""Spatial discretization of the tweezer Hamiltonians.

The Hamiltonian H(x0) = p^2/2m + V(x - x0) with

    V = -A exp(-(x-x0)^2 / 2 sigma^2) - B exp(-(x-x_B)^2 / 2 sigma^2)

is discretized with second-order central differences on a uniform grid
with hard walls at the grid edges.  All bound states of interest decay
far inside the walls, so the Dirichlet truncation error is negligible
(< 1e-10 at the default bounds).

Wave functions are stored as complex grid amplitudes normalized so that
sum(|psi_i|^2) * dx = 1.  Eigenvectors returned by the solvers are
l2-orthonormal grid vectors; dividing by sqrt(dx) converts between the
two conventions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import eigh_tridiagonal

from .config import PhysicsConfig, SpatialGrid
from .errors import ContractError, DomainError, NumericError

NORM_TOL = 1e-10


def potential(x, x0: float, cfg: PhysicsConfig):
    """Two-Gaussian tweezer potential evaluated at x for tweezer position x0."""
    x = np.asarray(x, dtype=float)
    two_sig2 = 2.0 * cfg.sigma**2
    v = -cfg.amp_moving * np.exp(-((x - x0) ** 2) / two_sig2)
    if cfg.amp_static != 0.0:
        v = v - cfg.amp_static * np.exp(-((x - cfg.x_static) ** 2) / two_sig2)
    return v


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Real symmetric tridiagonal Hamiltonian at a fixed tweezer position."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray
    x0: float
    grid: SpatialGrid

    def __post_init__(self):
        for name in ("diagonal", "off_diagonal"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_dense(self) -> np.ndarray:
        h = np.diag(self.diagonal)
        h += np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)
        return h


@dataclass(frozen=True)
class SpectralDecomposition:
    """Lowest eigenpairs of a tweezer Hamiltonian.

    energies are ascending; states holds l2-orthonormal eigenvectors as
    columns (grid convention: divide by sqrt(dx) for wave functions).
    """

    energies: np.ndarray
    states: np.ndarray
    x0: float
    grid: SpatialGrid


@dataclass(frozen=True)
class WaveFunction:
    """Normalized complex amplitudes on a spatial grid."""

    values: np.ndarray
    grid: SpatialGrid

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=complex)
        norm = np.sum(np.abs(vals) ** 2) * self.grid.dx
        if abs(norm - 1.0) > NORM_TOL:
            raise ContractError(f"wave function norm {norm!r} differs from 1")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def normalized(cls, values, grid: SpatialGrid) -> "WaveFunction":
        vals = np.ascontiguousarray(values, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(vals) ** 2) * grid.dx)
        if norm == 0:
            raise ContractError("cannot normalize a zero wave function")
        return cls(vals / norm, grid)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def overlap(self, other: "WaveFunction") -> complex:
        if self.grid != other.grid:
            raise ContractError("wave functions live on different grids")
        return complex(np.vdot(other.values, self.values) * self.grid.dx)


def build_hamiltonian(x0: float, cfg: PhysicsConfig) -> HamiltonianMatrix:
    """Tridiagonal H(x0): central-difference kinetic term plus the two-Gaussian potential."""
    if not (cfg.grid_min <= x0 <= cfg.grid_max):
        raise DomainError(f"tweezer position {x0} outside grid bounds")
    grid = cfg.grid()
    kin = cfg.hbar**2 / (2.0 * cfg.mass * grid.dx**2)
    diag = 2.0 * kin + potential(grid.points, x0, cfg)
    off = np.full(grid.n - 1, -kin)
    return HamiltonianMatrix(diagonal=diag, off_diagonal=off, x0=x0, grid=grid)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    # deterministic gauge: amplitude positive at the density maximum
    peak = np.argmax(np.abs(vec))
    return -vec if vec[peak] < 0 else vec


def spectral_decomposition(
    x0: float, cfg: PhysicsConfig, n_states: int
) -> SpectralDecomposition:
    """First n_states eigenpairs of H(x0), ascending."""
    if not 1 <= n_states <= cfg.n_grid:
        raise DomainError(f"n_states must be in [1, {cfg.n_grid}]")
    h = build_hamiltonian(x0, cfg)
    try:
        if n_states == cfg.n_grid:
            w, v = eigh_tridiagonal(h.diagonal, h.off_diagonal)
        else:
            w, v = eigh_tridiagonal(
                h.diagonal,
                h.off_diagonal,
                select="i",
                select_range=(0, n_states - 1),
            )
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigensolver failed at x0={x0}: {exc}") from exc
    v = np.column_stack([_fix_sign(v[:, i]) for i in range(v.shape[1])])
    return SpectralDecomposition(energies=w, states=v, x0=x0, grid=h.grid)


def ground_state(x0: float, cfg: PhysicsConfig) -> tuple[float, WaveFunction]:
    """Lowest eigenpair; the wave function is real, non-negative at its peak."""
    dec = spectral_decomposition(x0, cfg, 1)
    psi = WaveFunction(dec.states[:, 0].astype(complex) / np.sqrt(dec.grid.dx), dec.grid)
    return float(dec.energies[0]), psi


def ground_density(x0: float, cfg: PhysicsConfig) -> np.ndarray:
    """Ground-state density |psi|^2 at tweezer position x0 (grid convention)."""
    dec = spectral_decomposition(x0, cfg, 1)
    return dec.states[:, 0] ** 2 / dec.grid.dx


def density_and_cdf(psi: WaveFunction) -> tuple[np.ndarray, np.ndarray]:
    """Density n = |psi|^2 and its cumulative distribution I by trapezoidal sum."""
    n = psi.density()
    cdf = cumulative_trapezoid(n, psi.grid.points, initial=0.0)
    return n, cdf
