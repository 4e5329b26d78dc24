from .__version__ import __version__
from .errors import (
    DomainError,
    ExpressionError,
    NegativeTermError,
    ScenarioConfigError,
    StrongMaxError,
    ThresholdMonotonicityError,
    UndefinedRatioError,
)
from .distributions import Distribution, Exponential, Pareto1, RngStream, Uniform01, parse_distribution
from .events import ThresholdSequence, TransformFamily, parse_expression, parse_transform
from .criteria import (
    Verdict,
    check_barndorff,
    check_bc1,
    check_bs,
    check_ratio,
    check_stepanov,
    remark_limit,
    series_verdict,
)
from .simulator import SimulationConfig, simulate_paths
from .store import ResultStore
from .scenario import ScenarioConfig, list_builtins, run_scenario
