"""Desk-scale laboratory for single-atom optical-tweezer transport.

Simulate 1-D time-dependent Schrodinger dynamics of an atom carried by a
movable Gaussian tweezer over a static one, construct analytic
counter-diabatic and geodesic transport protocols, optimize discretized
protocols by stochastic local ascent, quantify the tunneling
alternative, and serve the interactive transport game.
"""

from .config import PhysicsConfig, SpatialGrid
from .core import (
    HamiltonianMatrix,
    SpectralDecomposition,
    WaveFunction,
    build_hamiltonian,
    density_and_cdf,
    ground_state,
    potential,
    spectral_decomposition,
)
from .errors import (
    ContractError,
    DomainError,
    NumericError,
    QmovesError,
    ResourceError,
)
from .optimizer import (
    OptimizationTrace,
    OptimizerConfig,
    local_fidelities,
    optimize,
    run_ensemble,
    sweep,
)
from .propagation import (
    DiscreteProtocol,
    PositionLattice,
    SimulationResult,
    SpectralStore,
    UnitaryBank,
    build_bank,
    default_n_rule,
    evolve,
    fidelity,
    fidelity_curve,
    initial_state,
    quantize_protocol,
    simulate_protocol,
    target_state,
)
from .protocols import (
    MetricTable,
    Protocol,
    SpeedLimitReport,
    build_metric_table,
    cd_correct_double,
    cd_correct_single,
    classical_speed_limit,
    cubic_ramp,
    default_metric_table,
    exact_velocity_field,
    geodesic_protocol,
    least_squares_velocity,
    make_reference_protocol,
    metric,
)
from .tunneling import (
    TunnelCurve,
    barrier_report,
    fit_decay_constant,
    max_tunnel_distance,
    tunnel_curve,
)

__version__ = "0.1.0"
