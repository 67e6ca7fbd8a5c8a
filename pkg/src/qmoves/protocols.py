"""Analytic tweezer protocols: cubic ramp, speed limits, counter-diabatic
corrections, adiabatic metric, geodesics, and exact velocity fields.

Conventions
-----------
A protocol is a sampled path x0(t) of the moving tweezer with piecewise
linear interpolation.  Time derivatives are central differences on the
samples with second-order one-sided ends, so analytic identities (e.g.
the cubic ramp's peak acceleration 6 L / T^2) hold to O(dt^2).

The counter-diabatic corrections displace the tweezer so its restoring
force cancels the inertial pseudo-force of the moving frame:

    single tweezer:  x_cd = x0 + xdd / omega^2,        omega^2 = A / (m sigma^2)
    double tweezer:  x_cd = x0 + d/dt(sqrt(g) xd) / omega^2

where g(x0) is the adiabatic metric relating tweezer displacement to the
displacement of the atom's equilibrium position:

    sqrt(g) = int(-dn/dx0 * dn/dx) dx / int((dn/dx)^2) dx

with n the instantaneous ground-state density.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .config import PhysicsConfig
from .core import density_and_cdf, ground_density, ground_state
from .errors import ContractError, DomainError, NumericError

PROTOCOL_KINDS = ("cubic", "cd_single", "geodesic", "cd_double", "optimized", "human")


@dataclass(frozen=True)
class Protocol:
    """Tweezer position as a function of time: samples plus linear interpolation."""

    times: np.ndarray
    positions: np.ndarray
    kind: str = "human"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or t.shape != x.shape or len(t) < 2:
            raise ContractError("protocol needs matching 1-D time/position samples")
        if abs(t[0]) > 1e-15 * max(1.0, t[-1]):
            raise ContractError("protocol must start at t = 0")
        if not np.all(np.diff(t) > 0):
            raise ContractError("protocol times must be strictly increasing")
        if t[-1] <= 0:
            raise ContractError("protocol duration must be positive")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ContractError("protocol samples must be finite")
        t.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def position_at(self, t):
        return np.interp(t, self.times, self.positions)

    def velocity(self) -> np.ndarray:
        edge = 2 if len(self.times) >= 3 else 1
        return np.gradient(self.positions, self.times, edge_order=edge)

    def acceleration(self) -> np.ndarray:
        edge = 2 if len(self.times) >= 3 else 1
        return np.gradient(self.velocity(), self.times, edge_order=edge)

    def resampled(self, n_samples: int) -> "Protocol":
        t = np.linspace(0.0, self.duration, n_samples)
        return Protocol(t, self.position_at(t), self.kind)

    def to_json_dict(self) -> dict:
        return {
            "T": self.duration,
            "samples": [[float(t), float(x)] for t, x in zip(self.times, self.positions)],
            "kind": self.kind,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "Protocol":
        try:
            samples = np.asarray(d["samples"], dtype=float)
            kind = d.get("kind", "human")
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed protocol payload: {exc}") from exc
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise DomainError("protocol samples must be [[t, x0], ...]")
        return cls(samples[:, 0], samples[:, 1], kind)

    @classmethod
    def from_json(cls, text: str) -> "Protocol":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class SpeedLimitReport:
    """Classical speed limit for transporting over distance L.

    t_csl_exact comes from the cubic ramp's peak acceleration hitting the
    tweezer's maximal restoring force; t_csl_harmonic eliminates the
    amplitude in favor of the trap frequency.  Both agree within ~0.2%
    since pi is nearly (6 sqrt(e))^(1/2).
    """

    t_csl_exact: float
    t_csl_harmonic: float
    a_max: float
    omega: float


def classical_speed_limit(cfg: PhysicsConfig, distance: float) -> SpeedLimitReport:
    """T_CSL = sqrt(6 m L sigma sqrt(e) / A), harmonic form (pi/omega) sqrt(L/sigma)."""
    if distance < 0:
        raise DomainError("transport distance must be non-negative")
    sqrt_e = np.sqrt(np.e)
    a_max = cfg.amp_moving / (cfg.mass * cfg.sigma * sqrt_e)
    exact = np.sqrt(6.0 * cfg.mass * distance * cfg.sigma * sqrt_e / cfg.amp_moving)
    harmonic = (np.pi / cfg.omega) * np.sqrt(distance / cfg.sigma)
    return SpeedLimitReport(
        t_csl_exact=float(exact),
        t_csl_harmonic=float(harmonic),
        a_max=float(a_max),
        omega=float(cfg.omega),
    )


def cubic_ramp(distance: float, duration: float, center: float = 0.0, n_samples: int = 513) -> Protocol:
    """Cubic transport ramp x0(t) = L (2 (t/T)^3 - 3 (t/T)^2 + 1/2) + center.

    Starts at center + L/2, ends at center - L/2 with zero end velocities;
    the acceleration peaks at |6 L / T^2| at t = 0 and t = T.
    """
    if duration <= 0:
        raise DomainError("protocol duration must be positive")
    if n_samples < 2:
        raise DomainError("need at least two samples")
    t = np.linspace(0.0, duration, n_samples)
    s = t / duration
    x = distance * (2.0 * s**3 - 3.0 * s**2 + 0.5) + center
    return Protocol(t, x, "cubic")


def _end_velocity(t: np.ndarray, x: np.ndarray, left: bool) -> float:
    # cubic fit through the four boundary samples: exact end slope for
    # polynomial ramps of degree <= 3, unlike the second-order gradient
    if len(t) >= 4:
        ts = (t[:4] - t[0]) if left else (t[-4:] - t[-1])
        xs = x[:4] if left else x[-4:]
        coeffs = np.polyfit(ts, xs, 3)
        return float(coeffs[2])
    v = np.gradient(x, t, edge_order=1)
    return float(v[0] if left else v[-1])


def _check_end_velocities(protocol: Protocol) -> None:
    v0 = _end_velocity(protocol.times, protocol.positions, left=True)
    v1 = _end_velocity(protocol.times, protocol.positions, left=False)
    span = abs(protocol.positions[-1] - protocol.positions[0])
    scale = max(1.0, float(np.max(np.abs(protocol.positions))))
    tol = (1e-6 * span + 1e-10 * scale) / protocol.duration
    if abs(v0) > tol or abs(v1) > tol:
        raise ContractError(
            "counter-diabatic correction requires zero end velocities "
            f"(got {v0:.3e}, {v1:.3e})"
        )


def cd_correct_single(base: Protocol, cfg: PhysicsConfig) -> Protocol:
    """Single-tweezer counter-diabatic shift x_cd = x0 + xdd / omega^2."""
    _check_end_velocities(base)
    x_cd = base.positions + base.acceleration() / cfg.omega_sq
    return Protocol(base.times, x_cd, "cd_single")


def metric(x0: float, cfg: PhysicsConfig, delta: float | None = None) -> float:
    """Adiabatic metric g(x0) from least-squares projection of the density flow.

    dn/dx0 uses a symmetric finite difference of ground-state solves at
    x0 +/- delta (default: one grid step); dn/dx uses central differences
    on the grid.
    """
    grid = cfg.grid()
    d = grid.dx if delta is None else float(delta)
    if d <= 0:
        raise DomainError("finite-difference step must be positive")
    n0 = ground_density(x0, cfg)
    n_plus = ground_density(x0 + d, cfg)
    n_minus = ground_density(x0 - d, cfg)
    dn_dx0 = (n_plus - n_minus) / (2.0 * d)
    dn_dx = np.gradient(n0, grid.points)
    sqrt_g = np.trapezoid(-dn_dx0 * dn_dx, grid.points) / np.trapezoid(
        dn_dx**2, grid.points
    )
    if sqrt_g <= 0:
        raise NumericError(
            f"non-positive metric root {sqrt_g:.3e} at x0={x0}; "
            "density derivative under-resolved"
        )
    return float(sqrt_g**2)


@dataclass(frozen=True)
class MetricTable:
    """Sampled map x0 -> g(x0) with interpolation."""

    positions: np.ndarray
    g_values: np.ndarray
    interpolation: str = "linear"  # "linear" | "cubic"

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        g = np.asarray(self.g_values, dtype=float)
        if x.shape != g.shape or x.ndim != 1 or len(x) < 2:
            raise ContractError("metric table needs matching 1-D sample arrays")
        if not np.all(np.diff(x) > 0):
            raise ContractError("metric table positions must be strictly increasing")
        if np.any(g <= 0):
            raise NumericError("metric table contains non-positive g values")
        if self.interpolation not in ("linear", "cubic"):
            raise DomainError("interpolation must be 'linear' or 'cubic'")
        x.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "g_values", g)
        if self.interpolation == "cubic":
            spline = CubicSpline(x, np.sqrt(g))
            object.__setattr__(self, "_spline", spline)

    @property
    def x_min(self) -> float:
        return float(self.positions[0])

    @property
    def x_max(self) -> float:
        return float(self.positions[-1])

    def _check_range(self, x) -> None:
        x = np.asarray(x)
        eps = 1e-12 * max(1.0, abs(self.x_max - self.x_min))
        if np.any(x < self.x_min - eps) or np.any(x > self.x_max + eps):
            raise DomainError(
                f"position outside metric table range [{self.x_min}, {self.x_max}]"
            )

    def sqrt_g_at(self, x):
        self._check_range(x)
        if self.interpolation == "cubic":
            return np.maximum(self._spline(x), 1e-12)
        return np.interp(x, self.positions, np.sqrt(self.g_values))

    def g_at(self, x):
        return self.sqrt_g_at(x) ** 2


def build_metric_table(
    cfg: PhysicsConfig,
    x0_min: float,
    x0_max: float,
    n_samples: int = 129,
    delta: float | None = None,
    interpolation: str = "cubic",
) -> MetricTable:
    """Dense sampling of metric() over [x0_min, x0_max]."""
    if n_samples < 32:
        raise DomainError("metric table needs at least 32 samples")
    if not x0_min < x0_max:
        raise DomainError("metric table range must be ordered")
    d = cfg.grid().dx if delta is None else float(delta)
    if x0_min - d < cfg.grid_min or x0_max + d > cfg.grid_max:
        raise DomainError("metric table range (plus the FD step) must fit the grid")
    xs = np.linspace(x0_min, x0_max, n_samples)
    gs = np.array([metric(x, cfg, delta) for x in xs])
    return MetricTable(xs, gs, interpolation)


def geodesic_protocol(
    table: MetricTable,
    duration: float,
    cfg: PhysicsConfig,
    ramp_fraction: float = 0.15,
    n_samples: int = 801,
) -> Protocol:
    """Transport along a geodesic of the metric with constant-acceleration end ramps.

    The interior keeps sqrt(g(x0)) * xd constant (quadrature of the
    arclength integral of sqrt(g)); entry/exit segments are constant
    real-space acceleration, matched continuously in position and
    velocity.  x0(0) = x0_start, x0(T) = x0_end, zero end velocities.
    """
    if duration <= 0:
        raise DomainError("protocol duration must be positive")
    if not 0.0 < ramp_fraction < 0.5:
        raise DomainError("ramp_fraction must lie in (0, 0.5)")
    x_a, x_b = cfg.x0_start, cfg.x0_end
    for x in (x_a, x_b):
        if not table.x_min <= x <= table.x_max:
            raise DomainError("metric table range too small for the transport endpoints")

    direction = 1.0 if x_b > x_a else -1.0
    span = abs(x_b - x_a)
    tau = ramp_fraction * duration

    u_dense = np.linspace(0.0, span, 4001)
    sg_dense = table.sqrt_g_at(x_a + direction * u_dense)
    s_dense = cumulative_trapezoid(sg_dense, u_dense, initial=0.0)

    def s_of_u(u):
        return np.interp(u, u_dense, s_dense)

    def u_of_s(s):
        return np.interp(s, s_dense, u_dense)

    def sg_of_u(u):
        return np.interp(u, u_dense, sg_dense)

    def joins(c):
        # entry/exit join points from velocity continuity: v = c / sqrt(g)
        v1 = c / sg_of_u(0.0)
        for _ in range(80):
            u1 = 0.5 * v1 * tau
            v1 = c / sg_of_u(u1)
        v2 = c / sg_of_u(span)
        for _ in range(80):
            u2 = span - 0.5 * v2 * tau
            v2 = c / sg_of_u(u2)
        return u1, v1, u2, v2

    def residual(c):
        u1, _, u2, _ = joins(c)
        return (s_of_u(u2) - s_of_u(u1)) / c - (duration - 2.0 * tau)

    c_lo = 1e-9 * s_dense[-1] / duration
    c_hi = 16.0 * s_dense[-1] / duration
    if residual(c_hi) > 0:
        raise NumericError("geodesic speed bracket failed; metric badly scaled")
    for _ in range(200):
        c_mid = 0.5 * (c_lo + c_hi)
        if residual(c_mid) > 0:
            c_lo = c_mid
        else:
            c_hi = c_mid
    c = 0.5 * (c_lo + c_hi)
    u1, v1, u2, v2 = joins(c)
    s1 = s_of_u(u1)

    t = np.linspace(0.0, duration, n_samples)
    u = np.empty_like(t)
    entry = t <= tau
    exit_ = t >= duration - tau
    mid = ~(entry | exit_)
    u[entry] = 0.5 * (v1 / tau) * t[entry] ** 2
    u[exit_] = span - 0.5 * (v2 / tau) * (duration - t[exit_]) ** 2
    u[mid] = u_of_s(s1 + c * (t[mid] - tau))
    return Protocol(t, x_a + direction * u, "geodesic")


def cd_correct_double(base: Protocol, table: MetricTable, cfg: PhysicsConfig) -> Protocol:
    """Double-tweezer correction x_cd = x0 + d/dt(sqrt(g(x0)) xd) / omega^2."""
    _check_end_velocities(base)
    edge = 2 if len(base.times) >= 3 else 1
    flow = table.sqrt_g_at(base.positions) * base.velocity()
    x_cd = base.positions + np.gradient(flow, base.times, edge_order=edge) / cfg.omega_sq
    return Protocol(base.times, x_cd, "cd_double")


def _refined_cdf(density: np.ndarray, x: np.ndarray, factor: int = 8) -> np.ndarray:
    """CDF at the grid nodes from a log-density spline on a refined grid.

    Plain trapezoids on the coarse grid carry O((dx u / w^2)^2) relative
    error in the steep Gaussian tails; refining 8x pushes it far below
    the velocity-field tolerance.
    """
    log_n = np.log(np.maximum(density, 1e-300))
    fine_x = np.linspace(x[0], x[-1], factor * (len(x) - 1) + 1)
    fine_n = np.exp(CubicSpline(x, log_n)(fine_x))
    fine_cdf = cumulative_trapezoid(fine_n, fine_x, initial=0.0)
    return fine_cdf[::factor]


def _cdf_time_derivative(protocol: Protocol, t: float, cfg: PhysicsConfig, dt: float):
    """Symmetric finite difference of the instantaneous ground-state CDF and density."""
    grid = cfg.grid()

    def state(time):
        n = ground_density(float(protocol.position_at(time)), cfg)
        return n, _refined_cdf(n, grid.points)

    n_minus, cdf_minus = state(t - dt)
    n_plus, cdf_plus = state(t + dt)
    n0, cdf0 = state(t)
    dI_dt = (cdf_plus - cdf_minus) / (2.0 * dt)
    dn_dt = (n_plus - n_minus) / (2.0 * dt)
    return n0, cdf0, dI_dt, dn_dt, grid


def _default_dt(protocol: Protocol, t: float, cfg: PhysicsConfig) -> float:
    # aim for a tweezer displacement of ~dx/32 between the two solves:
    # small enough for the tail error of the CDF difference, far above
    # the eigensolver noise floor
    v = abs(np.gradient(protocol.positions, protocol.times, edge_order=1)[
        min(np.searchsorted(protocol.times, t), len(protocol.times) - 1)
    ])
    dt_from_speed = cfg.grid().dx / (32.0 * v) if v > 0 else np.inf
    return float(min(dt_from_speed, protocol.duration / 200.0, t / 2.0,
                     (protocol.duration - t) / 2.0))


def exact_velocity_field(
    protocol: Protocol,
    t: float,
    cfg: PhysicsConfig,
    dt: float | None = None,
    density_floor: float = 1e-8,
) -> np.ma.MaskedArray:
    """Exact flow field v = -dI/dt / dI/dx of the adiabatic density, masked in the tails.

    The denominator is the spatial gradient of the same discrete CDF, so
    the quadrature error of the steep Gaussian tails cancels between
    numerator and denominator.
    """
    if not 0.0 < t < protocol.duration:
        raise DomainError("need an interior time 0 < t < T")
    dt = _default_dt(protocol, t, cfg) if dt is None else float(dt)
    if dt <= 0 or t - dt < 0 or t + dt > protocol.duration:
        raise DomainError("finite-difference step does not fit inside the protocol")
    n0, _, dI_dt, _, grid = _cdf_time_derivative(protocol, t, cfg, dt)
    mask = n0 < density_floor
    v = np.ma.masked_array(np.zeros_like(n0), mask=mask)
    v[~mask] = -dI_dt[~mask] / n0[~mask]
    return v


def least_squares_velocity(
    protocol: Protocol, t: float, cfg: PhysicsConfig, dt: float | None = None
) -> float:
    """Best homogeneous flow speed: -int(dn/dt dn/dx) / int((dn/dx)^2).

    Equals xd(t) * sqrt(g(x0(t))) up to finite-difference error.
    """
    if not 0.0 < t < protocol.duration:
        raise DomainError("need an interior time 0 < t < T")
    dt = _default_dt(protocol, t, cfg) if dt is None else float(dt)
    n0, _, _, dn_dt, grid = _cdf_time_derivative(protocol, t, cfg, dt)
    dn_dx = np.gradient(n0, grid.points)
    return float(
        -np.trapezoid(dn_dt * dn_dx, grid.points)
        / np.trapezoid(dn_dx**2, grid.points)
    )


_TABLE_CACHE: dict[tuple, MetricTable] = {}


def default_metric_table(cfg: PhysicsConfig, n_samples: int = 129) -> MetricTable:
    """Metric table spanning the transport range padded to the flat-metric region."""
    pad = 3.6 * cfg.sigma
    lo = min(cfg.x0_start, cfg.x0_end) - pad
    hi = max(cfg.x0_start, cfg.x0_end) + pad
    d = cfg.grid().dx
    lo = max(lo, cfg.grid_min + 2 * d)
    hi = min(hi, cfg.grid_max - 2 * d)
    key = (cfg, round(lo, 12), round(hi, 12), n_samples)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = build_metric_table(cfg, lo, hi, n_samples)
    return _TABLE_CACHE[key]


def make_reference_protocol(
    kind: str,
    duration: float,
    cfg: PhysicsConfig,
    table: MetricTable | None = None,
    ramp_fraction: float = 0.15,
    n_samples: int = 801,
) -> Protocol:
    """Reference protocol family: cubic, cd_single, geodesic, or cd_double."""
    span = cfg.x0_start - cfg.x0_end
    center = 0.5 * (cfg.x0_start + cfg.x0_end)
    if kind == "cubic":
        return cubic_ramp(span, duration, center, n_samples)
    if kind == "cd_single":
        return cd_correct_single(cubic_ramp(span, duration, center, n_samples), cfg)
    if kind in ("geodesic", "cd_double"):
        if table is None:
            table = default_metric_table(cfg)
        geo = geodesic_protocol(table, duration, cfg, ramp_fraction, n_samples)
        if kind == "geodesic":
            return geo
        return cd_correct_double(geo, table, cfg)
    raise DomainError(f"unknown reference protocol kind {kind!r}")
