"""wceks: Wiener chaos expansion solver for stochastically forced
(generalized) Kuramoto-Sivashinsky dynamics, with reference oracles and
error diagnostics."""

from .analysis import ErrorSeries, Trajectory, error_series, moments, reconstruct, truncation_decay
from .brownian import (
    BrownianDriver,
    TimeBasis,
    brownian_at,
    driver_from_json,
    driver_to_json,
    increments,
    integrated_brownian,
    sample_driver,
)
from .chaos import (
    MAX_HERMITE_ORDER,
    HermiteOrderError,
    MultiIndex,
    TruncationScheme,
    convolution_terms,
    hermite_normalized,
    product_coeff,
    wick_eval,
)
from .oracles import (
    DomainExhaustedError,
    LangevinParams,
    MovingFrameResult,
    TransformedProblem,
    carrier,
    langevin_semianalytic,
    langevin_wce,
    moving_frame_solve,
)
from .problems import (
    BUILTIN_NAMES,
    PERIODIC,
    SIGMA_W,
    Diagnostic,
    GridSpec,
    ProblemSpec,
    RobinBC,
    builtin_problem,
    load_config,
    spec_from_mapping,
    validate,
)
from .propagator import ChaosField, PropagatorSystem, boundary_data, initial_field, rhs
from .stepping import DivergenceError, diff1, diff2, diff3, diff4, integrate, march, step_stream

__version__ = "0.1.0"
