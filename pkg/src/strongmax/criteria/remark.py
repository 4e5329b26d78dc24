"""窗口并集概率 S_n = P(∪_{j=n}^{n+K} A_j) 的趋势

P(A_n i.o.) 等于 S_n 在 K -> ∞ 再 n -> ∞ 下的极限。这里对每个 n 选一个截断窗口 K_n，
用闭式比值的几何尾部认证截断误差，再按 ln S_n 对 ln n 的斜率给出趋势分类。
"""

import logging
import math
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from ..distributions import Distribution
from ..events.engine import ratio_table, staircase_terms, union_window
from ..events.thresholds import ThresholdSequence

logger = logging.getLogger(__name__)


class KRule(BaseModel):
    """截断窗口的选取规则：k_min..k_max 中最小的 K，使 R(n,K)·q/(1-q) <= tail_tol"""

    model_config = ConfigDict(frozen=True)

    k_min: int = Field(default=1, ge=0)
    k_max: int = Field(default=64, ge=1)
    tail_tol: float = Field(default=1e-6, gt=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> "KRule":
        if self.k_max < self.k_min:
            raise ValueError(f"k_max={self.k_max} 小于 k_min={self.k_min}")
        return self


class RemarkConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    slope_tol: float = Field(default=0.02, gt=0.0)
    rel_tol: float = Field(default=1e-3, gt=0.0)


class TrendClass(str, Enum):
    DECAYS_TO_ZERO = "decays_to_zero"
    STABILIZES_AT = "stabilizes_at"
    INCONCLUSIVE = "inconclusive"


class RemarkTrend(BaseModel):
    """S_n 的趋势报告

    certified 为 False 的 n 无法认证截断（q >= 1 或 k_max 内找不到 K），
    对应的 S_n 按 K = k_max 给出，仅作原始数据。
    tail_bounds 是阶梯级数在 K_n 之后的几何上界，staircase_sums 是阶梯项之和（不超过 S_n）。
    """

    criterion_id: str = "remark"
    s_values: list[tuple[int, float]]
    k_values: list[tuple[int, int]]
    q_values: list[tuple[int, Optional[float]]]
    tail_bounds: list[tuple[int, Optional[float]]]
    certified: list[tuple[int, bool]]
    staircase_sums: list[tuple[int, float]] = Field(default_factory=list)
    slope: Optional[float] = None
    classification: TrendClass
    limit: Optional[float] = None
    notes: list[str] = Field(default_factory=list)

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({
            "n": [n for n, _ in self.s_values],
            "K": [k for _, k in self.k_values],
            "S": [s for _, s in self.s_values],
            "q": [q for _, q in self.q_values],
            "tail_bound": [t for _, t in self.tail_bounds],
            "staircase": [v for _, v in self.staircase_sums],
        })


def _window_sum(
    d: Distribution, thresholds: ThresholdSequence, n: int, rule: KRule
) -> tuple[float, int, Optional[float], Optional[float], bool, float]:
    """返回 (S_n, K_n, q, 尾部上界, 是否认证, 阶梯项之和)

    阶梯项相邻之比就是闭式比值，所以 Σ_{k>K} 阶梯项 <= R(n,K)·q/(1-q)。
    K_n 按这个上界选取，S_n 取同一窗口上的精确并集。
    """
    x = thresholds.values(n, n + rule.k_max + 1)
    if np.all(np.asarray(d.cdf(x)) == 0):
        return 0.0, rule.k_min, 0.0, 0.0, True, 0.0

    stairs = np.exp(staircase_terms(d, thresholds, n, rule.k_max))
    closed = ratio_table(d, thresholds, n, rule.k_max)
    raw = union_window(d, thresholds, n, rule.k_max)
    if np.any(np.isnan(closed)):
        return raw, rule.k_max, None, None, False, math.fsum(stairs)

    q = float(np.max(closed))
    if q >= 1.0:
        return raw, rule.k_max, q, None, False, math.fsum(stairs)

    for K in range(rule.k_min, rule.k_max + 1):
        tail = float(stairs[K]) * q / (1.0 - q)
        if tail <= rule.tail_tol:
            return union_window(d, thresholds, n, K), K, q, tail, True, math.fsum(stairs[:K + 1])
    return raw, rule.k_max, q, None, False, math.fsum(stairs)


def remark_limit(
    d: Distribution,
    thresholds: ThresholdSequence,
    n_grid: Sequence[int],
    k_rule: Optional[KRule] = None,
    config: Optional[RemarkConfig] = None,
) -> RemarkTrend:
    """对 n_grid 中每个 n 计算 S_n = union_window(n, K_n) 并分类趋势

    - DecaysToZero: 斜率 < -slope_tol 且末值小于首值；S_n 恒为 0 时也归入此类（极限 0）
    - StabilizesAt(a): 最后三个 S_n 相对差不超过 rel_tol，a 取末值
    - 其余情形以及任一 n 截断无法认证时：Inconclusive
    """
    rule = k_rule or KRule()
    config = config or RemarkConfig()
    grid = [int(n) for n in n_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"n_grid 必须非空且严格递增: {grid}")

    rows = [(n, *_window_sum(d, thresholds, n, rule)) for n in grid]
    s = np.array([r[1] for r in rows])
    notes: list[str] = []
    slope = None
    limit = None

    uncertified = [r[0] for r in rows if not r[5]]
    if uncertified:
        classification = TrendClass.INCONCLUSIVE
        notes.append(f"n={uncertified} 处截断无法认证（q >= 1 或 K 超过 {rule.k_max}），S_n 仅为原始值")
    elif np.all(s == 0):
        classification = TrendClass.DECAYS_TO_ZERO
        limit = 0.0
    elif np.any(s <= 0):
        classification = TrendClass.INCONCLUSIVE
        notes.append("部分 S_n 为 0，无法做对数拟合")
    else:
        if len(grid) >= 2:
            slope = float(stats.linregress(np.log(grid), np.log(s)).slope)
        last = s[-3:]
        if slope is not None and slope < -config.slope_tol and s[-1] < s[0]:
            classification = TrendClass.DECAYS_TO_ZERO
            limit = 0.0
        elif len(s) >= 3 and np.max(last) - np.min(last) <= config.rel_tol * np.max(last):
            classification = TrendClass.STABILIZES_AT
            limit = float(s[-1])
        else:
            classification = TrendClass.INCONCLUSIVE

    logger.debug(f"remark: S={s.tolist()}, 斜率={slope}, 分类={classification.value}")
    return RemarkTrend(
        s_values=[(n, float(v)) for n, v in zip(grid, s)],
        k_values=[(r[0], r[2]) for r in rows],
        q_values=[(r[0], r[3]) for r in rows],
        tail_bounds=[(r[0], r[4]) for r in rows],
        certified=[(r[0], r[5]) for r in rows],
        staircase_sums=[(r[0], r[6]) for r in rows],
        slope=slope,
        classification=classification,
        limit=limit,
        notes=notes,
    )
