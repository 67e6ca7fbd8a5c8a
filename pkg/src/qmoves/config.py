"""Physical parameters and spatial grid.

Units are dimensionless throughout: hbar = m = 1 by default, tweezer
amplitudes are energies, sigma and positions are lengths. The default
parameter set is a deep moving tweezer (amp 160) passing over a static
tweezer (amp 130, width 1/8) centered at the origin, with transport
endpoints +/-0.55.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict, replace
from functools import lru_cache

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform 1-D grid with hard-wall boundaries."""

    points: np.ndarray
    dx: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_bounds(cls, lo: float, hi: float, n: int) -> "SpatialGrid":
        pts = np.linspace(lo, hi, n)
        return cls(points=pts, dx=float(pts[1] - pts[0]))

    @property
    def n(self) -> int:
        return len(self.points)

    def __eq__(self, other):
        return (
            isinstance(other, SpatialGrid)
            and self.n == other.n
            and self.points[0] == other.points[0]
            and self.points[-1] == other.points[-1]
        )

    def __hash__(self):
        return hash((self.n, float(self.points[0]), float(self.points[-1])))


@dataclass(frozen=True)
class PhysicsConfig:
    """All physical parameters and grid settings.

    amp_moving / amp_static are the depths of the movable and static
    Gaussian tweezers, sigma their common width, x_static the static
    tweezer center.  x0_start / x0_end are the transport endpoints of
    the moving tweezer.
    """

    mass: float = 1.0
    hbar: float = 1.0
    amp_moving: float = 160.0
    amp_static: float = 130.0
    sigma: float = 0.125
    x_static: float = 0.0
    grid_min: float = -2.0
    grid_max: float = 2.0
    n_grid: int = 512
    x0_start: float = 0.55
    x0_end: float = -0.55
    initial_state: str = "joint"  # "joint" | "static"

    def __post_init__(self):
        if self.amp_moving <= 0:
            raise DomainError("moving tweezer amplitude must be positive")
        if self.amp_static < 0:
            raise DomainError("static tweezer amplitude must be non-negative")
        if self.sigma <= 0:
            raise DomainError("tweezer width sigma must be positive")
        if self.mass <= 0 or self.hbar <= 0:
            raise DomainError("mass and hbar must be positive")
        if not self.grid_min < self.grid_max:
            raise DomainError("grid bounds must be strictly ordered")
        if self.n_grid < 64:
            raise DomainError("need at least 64 grid points")
        if self.x0_start == self.x0_end:
            raise DomainError("transport endpoints must differ")
        lo_needed = min(self.x0_start, self.x0_end) - 4 * self.sigma
        hi_needed = max(self.x0_start, self.x0_end) + 4 * self.sigma
        if self.grid_min > lo_needed or self.grid_max < hi_needed:
            raise DomainError(
                "grid bounds must contain the transport range padded by 4 sigma"
            )
        if self.initial_state not in ("joint", "static"):
            raise DomainError("initial_state must be 'joint' or 'static'")

    @property
    def transport_distance(self) -> float:
        return abs(self.x0_start - self.x0_end)

    @property
    def omega(self) -> float:
        """Harmonic frequency of the moving tweezer, sqrt(amp/m)/sigma."""
        return np.sqrt(self.amp_moving / self.mass) / self.sigma

    @property
    def omega_sq(self) -> float:
        return self.amp_moving / (self.mass * self.sigma**2)

    def grid(self) -> SpatialGrid:
        return _make_grid(self.grid_min, self.grid_max, self.n_grid)

    def replace(self, **changes) -> "PhysicsConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicsConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@lru_cache(maxsize=64)
def _make_grid(lo: float, hi: float, n: int) -> SpatialGrid:
    return SpatialGrid.from_bounds(lo, hi, n)
