"""Achievable rate regions of the two-user degraded AWGN broadcast channel with
finite PAM inputs: time sharing, superposition modulation and general
superposition coding, plus SNR and rate gains between strategies."""

from .channel_model import (
    BroadcastChannel,
    Constellation,
    DegradednessError,
    DomainError,
    JointDistribution,
    Marginals,
    average_power,
    channel_from_snr,
    marginals,
    standard_pam,
)
from .metrics import (
    FrontierCache,
    GainReport,
    SearchOptions,
    max_rate_gain,
    max_shaping_gain,
    shaping_gain_at,
)
from .mutual_info import (
    DEFAULT_QUAD,
    ObjectiveValue,
    QuadratureSpec,
    conditional_row_mi,
    mi_u_y,
    mi_x_y,
    mi_x_y_given_u,
    objective_and_gradients,
)
from .optimizer import (
    BracketError,
    OptimizerOptions,
    OptResult,
    ascend_positions,
    ascend_probabilities,
    optimize_rates,
    solve_multiplier,
)
from .oracle import McEstimate, grid_search_optimize, mc_mutual_info
from .region import (
    DEFAULT_THETA_GRID,
    FrontierPoint,
    RegionFrontier,
    frontier_builder,
    region_contains,
    strategy_frontier,
    sweep_frontier,
    union_frontier,
    upper_envelope,
)
from .strategies import (
    StrategyConstraint,
    enumerate_sm_configs,
    general_sc,
    sm_support,
    superposition_modulation,
    time_sharing,
    ts_frontier,
    ts_rates,
    uniform_sm_joint,
)

__version__ = "0.1.0"
