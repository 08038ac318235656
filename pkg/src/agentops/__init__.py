"""Multi-agent constraint enforcement as composed projection and prox operators."""
from .baselines import averaging_baseline, finite_diff_grad, grid_minimize, monolithic_minimizer
from .dynamics import (
    AgentOperator,
    Schedule,
    StopRule,
    Trajectory,
    cluster_point_check,
    compose_round,
    constant,
    fejer_report,
    fixed_point_residual,
    harmonic,
    iterate,
    poly_decay,
)
from .errors import (
    AgentOpsError,
    DimensionError,
    DivergenceError,
    InvalidParameterError,
    InvalidStateError,
    NondifferentiableError,
    OracleScaleError,
    RejectedReferenceError,
    ScenarioError,
    SingularSystemError,
    UnsupportedObjectiveError,
)
from .kernel import BACKEND
from .penalties import (
    AffineQuadratic,
    EnergyFunction,
    Indicator,
    Penalty,
    SquaredDistance,
    eval_energy,
    evaluate,
    grad,
    prox,
)
from .scenario import Scenario, load_builtin, load_scenario, parse_scenario, serialize
from .sets import Ball, Box, ConvexSet, Halfspace, Hyperplane, contains, distance, project
from .state import as_state, axpy, inner, norm

__version__ = "0.1.0"
