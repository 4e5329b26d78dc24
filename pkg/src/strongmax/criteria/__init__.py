from .series import SeriesReport, Verdict, VerdictConfig, series_verdict, tail_exponent
from .checkers import (
    DEFAULT_N_MAX,
    IO_ZERO,
    DecayCheck,
    RatioCheckConfig,
    RatioReport,
    StepanovReport,
    check_barndorff,
    check_bc1,
    check_bs,
    check_ratio,
    check_stepanov,
    decays_to_zero,
)
from .remark import KRule, RemarkConfig, RemarkTrend, TrendClass, remark_limit
from .bundle import CheckerBundle, CriterionReport, parse_checker, run_checker, run_checkers
