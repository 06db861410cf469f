"""Electromagnetic suspension modelling, synthesis and simulation toolkit."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DimensionError,
    EmsimError,
    NumericalError,
    SimulationDiverged,
    SingularEquationError,
    SynthesisError,
    WeightError,
)
from .numerics import eig, solve_care, solve_lyapunov
from .plant import (
    PlantParams,
    StateSpace,
    TransferFunction,
    char_poly,
    electromagnet_force,
    finite_difference_jacobian,
    linearize,
    nonlinear_derivative,
    ss_to_tf,
    to_companion,
)
from .synthesis import (
    Compensator,
    LqWeights,
    NoiseModel,
    build_lqg,
    kalman_gain,
    lqg_cost,
    lqi_gain,
    lqr_gain,
)
from .simulate import (
    RoadProfile,
    SimConfig,
    SimTrace,
    closed_loop_matrix,
    integrate_rk4,
    peak_body_travel,
    road_value,
    simulate_closed_loop,
)
from .config import RunConfig, parse_config, render_config

__all__ = [
    "__version__",
    "ConfigError", "DimensionError", "EmsimError", "NumericalError",
    "SimulationDiverged", "SingularEquationError", "SynthesisError",
    "WeightError",
    "eig", "solve_care", "solve_lyapunov",
    "PlantParams", "StateSpace", "TransferFunction", "char_poly",
    "electromagnet_force", "finite_difference_jacobian", "linearize",
    "nonlinear_derivative", "ss_to_tf", "to_companion",
    "Compensator", "LqWeights", "NoiseModel", "build_lqg", "kalman_gain",
    "lqg_cost", "lqi_gain", "lqr_gain",
    "RoadProfile", "SimConfig", "SimTrace", "closed_loop_matrix",
    "integrate_rk4", "peak_body_travel", "road_value", "simulate_closed_loop",
    "RunConfig", "parse_config", "render_config",
]
