from .streams import BLOCK_LANES, GENERATOR_VERSION, BlockStream
from .paths import SimulationConfig, TrajectoryBatch, WindowQuery, simulate_paths, transform_trajectory
from .oracle import (
    OracleEstimate,
    mc_event_then_fail,
    mc_joint,
    mc_max_le,
    mc_no_event,
    mc_run_prob,
    mc_staircase_prob,
    mc_window_union,
)
