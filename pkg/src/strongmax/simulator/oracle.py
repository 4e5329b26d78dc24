"""精确概率的蒙特卡洛对照

每个函数直接按事件定义逐条路径计数，不经过任何因子分解公式，
用来核对 events.engine 中的闭式与递推结果。
"""

import math

import numpy as np
from pydantic import BaseModel

from ..distributions import Distribution
from ..events.thresholds import ThresholdSequence
from .paths import SimulationConfig, simulate_paths


class OracleEstimate(BaseModel):
    """二项比例估计

    Attributes:
        point: 命中比例
        reps: 路径数
        successes: 命中次数
        std_err: sqrt(p(1-p)/reps)
    """

    point: float
    reps: int
    successes: int
    std_err: float

    @classmethod
    def from_hits(cls, hits: np.ndarray) -> "OracleEstimate":
        reps = int(hits.size)
        successes = int(np.count_nonzero(hits))
        p = successes / reps
        return cls(point=p, reps=reps, successes=successes, std_err=math.sqrt(p * (1.0 - p) / reps))

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        """|point - value| 不超过 sigmas 个标准误差

        标准误差取观测比例与待检值两者中较大的二项方差，
        避免命中次数为 0 或 reps 时容差退化为 0。
        """
        var = max(self.point * (1.0 - self.point), value * (1.0 - value))
        return abs(self.point - value) <= sigmas * math.sqrt(var / self.reps)


def _running_max(d: Distribution, n: int, stop: int, reps: int, seed: int) -> np.ndarray:
    """时刻 n..stop 上的运行最大值，形状 (reps, stop - n + 1)"""
    config = SimulationConfig(
        distribution=d, n_max=stop, paths=reps, master_seed=seed, record_grid=list(range(n, stop + 1))
    )
    return simulate_paths(config).values


def mc_max_le(d: Distribution, n: int, x: float, reps: int, seed: int) -> OracleEstimate:
    """P(M_n <= x)"""
    m = _running_max(d, n, n, reps, seed)
    return OracleEstimate.from_hits(m[:, 0] <= x)


def mc_run_prob(d: Distribution, thresholds: ThresholdSequence, n: int, k: int, reps: int, seed: int) -> OracleEstimate:
    """P(A_n^c ... A_{n+k-1}^c A_{n+k})，逐个时刻比较 M_j 与 x_j"""
    m = _running_max(d, n, n + k, reps, seed)
    x = thresholds.values(n, n + k)
    hits = np.all(m[:, :k] > x[:k], axis=1) & (m[:, k] <= x[k])
    return OracleEstimate.from_hits(hits)


def mc_staircase_prob(d: Distribution, thresholds: ThresholdSequence, n: int, k: int, reps: int, seed: int) -> OracleEstimate:
    """P(x_{n+j-1} < M_{n+j-1} <= x_{n+j}, j=1..k；M_{n+k} <= x_{n+k})"""
    m = _running_max(d, n, n + k, reps, seed)
    x = thresholds.values(n, n + k)
    steps = np.all((m[:, :k] > x[:k]) & (m[:, :k] <= x[1:k + 1]), axis=1)
    return OracleEstimate.from_hits(steps & (m[:, k] <= x[k]))


def mc_no_event(d: Distribution, thresholds: ThresholdSequence, n: int, K: int, reps: int, seed: int) -> OracleEstimate:
    """P(A_j 在 [n, n+K] 内都不发生)"""
    m = _running_max(d, n, n + K, reps, seed)
    x = thresholds.values(n, n + K)
    return OracleEstimate.from_hits(np.all(m > x, axis=1))


def mc_window_union(d: Distribution, thresholds: ThresholdSequence, n: int, K: int, paths: int, seed: int) -> OracleEstimate:
    """P(∪_{j=n}^{n+K} A_j)"""
    m = _running_max(d, n, n + K, paths, seed)
    x = thresholds.values(n, n + K)
    return OracleEstimate.from_hits(np.any(m <= x, axis=1))


def mc_event_then_fail(d: Distribution, thresholds: ThresholdSequence, n: int, reps: int, seed: int) -> OracleEstimate:
    """P(A_n A_{n+1}^c)"""
    m = _running_max(d, n, n + 1, reps, seed)
    x = thresholds.values(n, n + 1)
    return OracleEstimate.from_hits((m[:, 0] <= x[0]) & (m[:, 1] > x[1]))


def mc_joint(d: Distribution, thresholds: ThresholdSequence, n: int, k: int, reps: int, seed: int) -> OracleEstimate:
    """P(A_n A_{n+k})"""
    m = _running_max(d, n, n + k, reps, seed)
    x = thresholds.values(n, n + k)
    return OracleEstimate.from_hits((m[:, 0] <= x[0]) & (m[:, k] <= x[k]))
