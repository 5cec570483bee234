"""Expected-cost model, optimiser and simulator for periodic robot / delayed human handovers."""

from .cost import (
    DEFAULT_TOL,
    ConvergenceError,
    CostBreakdown,
    CostRates,
    Method,
    RealizedOutcome,
    ScheduleParams,
    closed_form_exponential,
    closed_form_uniform,
    evaluate,
    expected_cost,
    expected_visits,
    expected_waiting,
    realized_cost,
)
from .distributions import (
    ArrivalLaw,
    DelayDistribution,
    EmpiricalDelay,
    ExponentialDelay,
    PointDelay,
    UniformDelay,
    exponential_unit,
    parse_distribution,
    uniform_unit,
)
from .optimize import OptimizationResult, SearchDomain, brute_force_grid, optimize
from .simulate import Protocol, SimConfig, SimReport, compare_protocols, simulate

__version__ = "0.1.0"
