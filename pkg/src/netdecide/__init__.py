"""Networked opinion dynamics: simulation, reduction, bifurcations and feedback."""

from .bifurcation import (
    Diagram,
    Problem,
    RegimeReport,
    bifurcation_diagram,
    classify_pitchfork,
    deadlock_equilibrium_expansion,
    deadlock_equilibrium_numeric,
    detect_folds,
    honeybee_sigma_star,
    network_problem,
    reduced_delta_nu_problem,
    reduced_problem,
    reduced_u2_problem,
    regime_from_diagram,
    u2star_expansion,
    ustar_expansion,
    ustar_numeric,
    value_sensitivity_curve,
)
from .continuation import (
    ContinuationSettings,
    EquilibriumBranch,
    EquilibriumPoint,
    MaxIterExceeded,
    SingularJacobian,
    StepFailure,
    continue_branch,
    newton_solve,
    switch_branch,
)
from .dynamics import (
    TANH,
    Decision,
    InfoVector,
    ModelParams,
    Sigmoid,
    classify_state,
    collective_opinion,
    disagreement,
    field_honeybee_mapped,
    field_normalized,
    field_original_time,
    jacobian,
    odd_saturation,
)
from .feedback import (
    ClosedLoopState,
    FeedbackParams,
    NoPassage,
    closed_loop_field_general,
    closed_loop_field_informed_z2,
    closed_loop_field_uniform,
    estimate_error,
    measure_bifurcation_delay,
    reduced_closed_loop_field,
)
from .graph import (
    Graph,
    GraphError,
    ThreeGroupSpec,
    build_all_to_all,
    build_explicit,
    build_three_group,
    check_z2_equivariance,
    is_balanced,
    is_strongly_connected,
)
from .honeybee import SwarmParams, SwarmState, quorum_reached, swarm_field, swarm_pitchfork_point
from .integrate import IntegrationConfig, IntegrationError, Trajectory, integrate, simulate_network
from .kernels import BACKEND
from .reduction import ReducedState, embed, manifold_distance, project, reduced_field, reduced_jacobian
from .scenario import run_scenario, sweep

__version__ = "0.1.0"
