"""Fluid limits of condensing zero-range processes on finite graphs."""

from ._backend import BACKEND
from .absorbing import (
    AbsorbingReport,
    MinimalAbsorbingTrace,
    bottleneck_set,
    enumerate_absorbing,
    is_r_absorbing,
    minimal_absorbing,
)
from .errors import *  # noqa: F401,F403
from .fluid import (
    OrpReport,
    PiecewiseLinearPath,
    RegulatorPath,
    evaluate_path,
    exit_time,
    fluid_trajectory,
    rates_from_probabilities,
    regulator_path,
    simplex_point,
    support,
    velocity,
    verify_orp,
)
from .markov import (
    TOL,
    FlowVector,
    HittingProbabilityMatrix,
    RateMatrix,
    embedded_probabilities,
    hitting_probabilities,
    invariant_distribution,
    jump_directions,
    net_flow,
    reflection_directions,
    trace_rates,
    trace_rates_recursive,
    validate_rates,
)
from .zrp import (
    ConvergenceResult,
    EventLog,
    JumpRateFunction,
    SampledPath,
    convergence_experiment,
    initial_configuration,
    rescaled_path,
    simulate_zrp,
)

__version__ = "0.1.0"
