from .expression import Expression, ExpressionParser, parse_expression
from .thresholds import ThresholdSequence, TransformFamily, TransformKind, parse_transform, thresholds_from_transform
from .engine import (
    RunTerm,
    prob_max_le,
    prob_run,
    prob_no_event,
    prob_staircase,
    run_terms,
    staircase_terms,
    run_ratio,
    ratio_table,
    prob_event_then_fail,
    prob_joint,
    union_window,
    staircase_window,
)
