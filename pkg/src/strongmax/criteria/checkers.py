"""事件族 A_n = {M_n <= x_n} 上的各个 i.o. 判据

每个判据把概率级数交给 series_verdict 判敛，再按判据自身的条件给出结论。
结论只有一种形式：io_probability = 0.0，即 P(A_n i.o.) = 0；判据无法判定时为 None。
"""

import logging
import math
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator

from ..distributions import Distribution
from ..events.engine import (
    prob_max_le,
    prob_run,
    ratio_table,
    run_terms,
    series_event_then_fail,
    series_joint,
    series_max_le,
    series_run,
    staircase_terms,
)
from ..events.thresholds import ThresholdSequence
from .series import SeriesReport, Verdict, VerdictConfig, series_verdict

logger = logging.getLogger(__name__)

DEFAULT_N_MAX = 100_000
IO_ZERO = "P(A_n i.o.) = 0"


class DecayCheck(BaseModel):
    """侧条件 P(A_n) -> 0 的数值检查结果"""

    satisfied: bool
    last_value: float
    grid: list[tuple[int, float]]


def decays_to_zero(
    d: Distribution, thresholds: ThresholdSequence, n_hi: int, p0_tol: float = 0.5, points: int = 50
) -> DecayCheck:
    """在 [n_hi/10, n_hi] 的对数网格上检查 P(A_n) 严格递减且末值 < p0_tol

    P(A_n) 恒为 0 时视为满足。
    """
    n_lo = max(thresholds.n_min, n_hi // 10)
    grid = np.unique(np.round(np.geomspace(n_lo, n_hi, points)).astype(int))
    x = thresholds.values(n_lo, n_hi)
    p = np.exp(grid * np.asarray(d.log_cdf(x[grid - n_lo])))
    if np.all(p == 0):
        satisfied = True
    else:
        # 下溢为 0 的尾部视为继续下降
        falling = (np.diff(p) < 0) | (p[1:] == 0)
        satisfied = bool(p[-1] < p0_tol and np.all(falling))
    return DecayCheck(
        satisfied=satisfied,
        last_value=float(p[-1]),
        grid=[(int(n), float(v)) for n, v in zip(grid, p)],
    )


def _resolve_range(
    thresholds: ThresholdSequence, n_range: Optional[tuple[int, int]], lookahead: int = 0
) -> tuple[int, int]:
    if n_range is not None:
        n_lo, n_hi = int(n_range[0]), int(n_range[1])
    else:
        n_lo, n_hi = thresholds.n_min, DEFAULT_N_MAX
        if thresholds.n_max is not None:
            n_hi = thresholds.n_max - lookahead
    if n_lo < thresholds.n_min:
        raise ValueError(f"n_range 起点 {n_lo} 小于阈值序列的 n_min={thresholds.n_min}")
    if n_hi <= n_lo:
        raise ValueError(f"n_range 为空: [{n_lo}, {n_hi}]")
    return n_lo, n_hi


def _linear_terms(log_series):
    """把按区间求值的对数级数包装成 series_verdict 需要的 terms(n)"""
    def terms(n: np.ndarray) -> np.ndarray:
        return np.exp(log_series(int(n[0]), int(n[-1])))
    return terms


def _apply_side_condition(report: SeriesReport, side: DecayCheck) -> SeriesReport:
    """级数收敛但侧条件不成立时判据不适用；级数发散时判据本来就无法判定，保留 diverges"""
    report.side_condition = side.satisfied
    if not side.satisfied:
        report.notes.append(f"侧条件 P(A_n) -> 0 不成立（末值 {side.last_value:.4g}），判据不适用")
        if report.series_verdict is Verdict.CONVERGES:
            report.verdict = Verdict.INCONCLUSIVE
    elif report.series_verdict is Verdict.CONVERGES:
        report.io_probability = 0.0
        report.conclusion = IO_ZERO
    return report


def check_bc1(
    d: Distribution,
    thresholds: ThresholdSequence,
    n_range: Optional[tuple[int, int]] = None,
    config: Optional[VerdictConfig] = None,
) -> SeriesReport:
    """Σ P(A_n) 收敛则 P(A_n i.o.) = 0"""
    n_lo, n_hi = _resolve_range(thresholds, n_range)
    report = series_verdict(
        _linear_terms(lambda a, b: series_max_le(d, thresholds, a, b)),
        n_hi, config, n_min=n_lo, criterion_id="bc1",
    )
    if report.verdict is Verdict.CONVERGES:
        report.io_probability = 0.0
        report.conclusion = IO_ZERO
    elif report.verdict is Verdict.DIVERGES:
        report.notes.append("Σ P(A_n) 发散；事件 A_n 相依，独立情形的发散结论不适用，该判据无法判定")
    return report


def check_barndorff(
    d: Distribution,
    thresholds: ThresholdSequence,
    n_range: Optional[tuple[int, int]] = None,
    config: Optional[VerdictConfig] = None,
) -> SeriesReport:
    """P(A_n) -> 0 且 Σ P(A_n A_{n+1}^c) 收敛则 P(A_n i.o.) = 0"""
    config = config or VerdictConfig()
    n_lo, n_hi = _resolve_range(thresholds, n_range, lookahead=1)
    report = series_verdict(
        _linear_terms(lambda a, b: series_event_then_fail(d, thresholds, a, b)),
        n_hi, config, n_min=n_lo, criterion_id="barndorff",
    )
    return _apply_side_condition(report, decays_to_zero(d, thresholds, n_hi, config.p0_tol))


def check_bs(
    d: Distribution,
    thresholds: ThresholdSequence,
    m: int,
    n_range: Optional[tuple[int, int]] = None,
    config: Optional[VerdictConfig] = None,
) -> SeriesReport:
    """固定游程长度 m：P(A_n) -> 0 且 Σ P(A_n^c ... A_{n+m-1}^c A_{n+m}) 收敛则 P(A_n i.o.) = 0

    m = 0 时级数就是 Σ P(A_n)。
    """
    if m < 0:
        raise ValueError(f"游程长度 m 必须 >= 0: {m}")
    config = config or VerdictConfig()
    n_lo, n_hi = _resolve_range(thresholds, n_range, lookahead=m)
    report = series_verdict(
        _linear_terms(lambda a, b: series_run(d, thresholds, a, b, m)),
        n_hi, config, n_min=n_lo, criterion_id=f"bs:{m}",
    )
    return _apply_side_condition(report, decays_to_zero(d, thresholds, n_hi, config.p0_tol))


class StepanovReport(BaseModel):
    """三个级数的联合判据

    sum_prob: Σ P(A_n)，要求发散
    sum_joint: Σ P(A_n A_{n+k})，要求发散
    sum_gap: Σ [P(A_n) - P(A_n A_{n+1})] = Σ P(A_n A_{n+1}^c)，要求收敛
    """

    criterion_id: str
    k: int
    sum_prob: SeriesReport
    sum_joint: SeriesReport
    sum_gap: SeriesReport
    verdict: Verdict
    io_probability: Optional[float] = None
    conclusion: Optional[str] = None
    notes: list[str] = Field(default_factory=list)

    def parts(self) -> dict[str, SeriesReport]:
        return {"prob": self.sum_prob, "joint": self.sum_joint, "gap": self.sum_gap}


STEPANOV_NOTE = (
    "该判据的条件同时要求 Σ P(A_n) 与 Σ P(A_n A_{n+k}) 发散，却得出 P(A_n i.o.) = 0，"
    "条件的表述可能有误；这里按所述条件逐条实现，结论仅供参考"
)


def check_stepanov(
    d: Distribution,
    thresholds: ThresholdSequence,
    k: int,
    n_range: Optional[tuple[int, int]] = None,
    config: Optional[VerdictConfig] = None,
) -> StepanovReport:
    if k < 1:
        raise ValueError(f"k 必须 >= 1: {k}")
    n_lo, n_hi = _resolve_range(thresholds, n_range, lookahead=max(k, 1))
    cid = f"stepanov:{k}"
    sum_prob = series_verdict(
        _linear_terms(lambda a, b: series_max_le(d, thresholds, a, b)),
        n_hi, config, n_min=n_lo, criterion_id=f"{cid}:prob",
    )
    sum_joint = series_verdict(
        _linear_terms(lambda a, b: series_joint(d, thresholds, a, b, k)),
        n_hi, config, n_min=n_lo, criterion_id=f"{cid}:joint",
    )
    sum_gap = series_verdict(
        _linear_terms(lambda a, b: series_event_then_fail(d, thresholds, a, b)),
        n_hi, config, n_min=n_lo, criterion_id=f"{cid}:gap",
    )
    notes = [STEPANOV_NOTE]
    decided = (
        sum_prob.verdict is Verdict.DIVERGES
        and sum_joint.verdict is Verdict.DIVERGES
        and sum_gap.verdict is Verdict.CONVERGES
    )
    if sum_prob.verdict is Verdict.CONVERGES:
        notes.append("Σ P(A_n) 收敛，该判据不适用")
    report = StepanovReport(
        criterion_id=cid,
        k=k,
        sum_prob=sum_prob,
        sum_joint=sum_joint,
        sum_gap=sum_gap,
        verdict=Verdict.CONVERGES if decided else Verdict.INCONCLUSIVE,
        io_probability=0.0 if decided else None,
        conclusion=IO_ZERO if decided else None,
        notes=notes,
    )
    logger.debug(f"{cid}: {sum_prob.verdict.value}/{sum_joint.verdict.value}/{sum_gap.verdict.value}")
    return report


class RatioCheckConfig(BaseModel):
    """比值判据的探测设置

    Attributes:
        epsilon: 余量 ε，须在 (0, 1 - q_hat) 内；None 时取 (1 - q_hat)/10
        k_max: 每个起点探测的游程长度 k = 1..k_max
        n_grid: 起点，严格递增；上界按最大的起点计算
        p0_tol: 侧条件 P(A_n) -> 0 的末值上限
    """

    model_config = ConfigDict(frozen=True)

    epsilon: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    k_max: int = Field(default=8, ge=1)
    n_grid: list[int] = Field(default_factory=lambda: [100, 1000, 10000])
    p0_tol: float = Field(default=0.5, gt=0.0, le=1.0)

    @field_validator("n_grid")
    @classmethod
    def _strictly_increasing(cls, grid: list[int]) -> list[int]:
        if not grid:
            raise ValueError("n_grid 不能为空")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"n_grid 必须严格递增: {grid}")
        if grid[0] < 1:
            raise ValueError(f"n_grid 的起点必须 >= 1: {grid}")
        return grid


class RatioReport(BaseModel):
    """比值判据的报告

    bound_value 是阶梯级数的几何上界 P(A_N) + P(A_N^c A_{N+1}) / (1 - q - ε)；
    displayed_bound_value 是把第 k=1 项本身也乘上 (q+ε) 的写法，只作对照，它并不是上界。
    """

    criterion_id: str = "ratio"
    q_config: RatioCheckConfig
    probe_grid: list[tuple[int, int]]
    q_hat: Optional[float] = None
    row_max: list[tuple[int, Optional[float]]] = Field(default_factory=list)
    epsilon: Optional[float] = None
    bound_n: int
    bound_value: Optional[float] = None
    displayed_bound_value: Optional[float] = None
    exact_q_hat: Optional[float] = None
    staircase_sums: list[float] = Field(default_factory=list)
    side_condition: Optional[bool] = None
    verdict: Verdict
    io_probability: Optional[float] = None
    conclusion: Optional[str] = None
    notes: list[str] = Field(default_factory=list)

    _ratios: list[tuple[int, int, float]] = PrivateAttr(default_factory=list)

    def table(self) -> pd.DataFrame:
        """每个 (n, k) 一行：n, k, ratio（无定义为 nan）"""
        return pd.DataFrame(self._ratios, columns=["n", "k", "ratio"])


def _max_or_none(values: np.ndarray) -> Optional[float]:
    finite = values[np.isfinite(values)]
    return float(np.max(finite)) if finite.size else None


def check_ratio(
    d: Distribution, thresholds: ThresholdSequence, config: Optional[RatioCheckConfig] = None
) -> RatioReport:
    """按闭式比值 run_ratio 估计 q，q + ε < 1 且 P(A_n) -> 0 时 P(A_n i.o.) = 0

    q 取最大起点那一行上 k = 1..k_max 的最大值（对 k 一致的上界）。
    """
    config = config or RatioCheckConfig()
    notes: list[str] = []
    ratios: list[tuple[int, int, float]] = []
    row_max: list[tuple[int, Optional[float]]] = []
    last_row = np.empty(0)
    for n in config.n_grid:
        row = ratio_table(d, thresholds, n, config.k_max)
        ratios.extend((n, k, float(v)) for k, v in enumerate(row, start=1))
        row_max.append((n, _max_or_none(row)))
        last_row = row
    N = config.n_grid[-1]
    probe_grid = [(n, k) for n in config.n_grid for k in range(1, config.k_max + 1)]

    q_hat = _max_or_none(last_row)
    undefined = bool(np.any(np.isnan(last_row)))
    if undefined:
        bad = [k for k, v in enumerate(last_row, start=1) if np.isnan(v)]
        notes.append(f"F(x_{{n+k}}) = 0，n={N} 处 k={bad} 的比值无定义")

    epsilon = config.epsilon
    if epsilon is None and q_hat is not None and q_hat < 1.0:
        epsilon = (1.0 - q_hat) / 10.0

    side = decays_to_zero(d, thresholds, N, config.p0_tol)
    applicable = not undefined and q_hat is not None and epsilon is not None and q_hat + epsilon < 1.0
    if q_hat is not None and epsilon is not None and q_hat + epsilon >= 1.0:
        notes.append(f"q_hat + ε = {q_hat + epsilon:.6g} >= 1，几何上界不成立")

    bound_value = displayed = None
    staircase_sums: list[float] = []
    exact_q_hat = None
    if applicable:
        q = q_hat + epsilon
        p_an = math.exp(prob_max_le(d, N, thresholds(N)))
        first_run = math.exp(prob_run(d, thresholds, N, 1))
        bound_value = p_an + first_run / (1.0 - q)
        displayed = p_an + first_run * q / (1.0 - q)
        staircase_sums = [float(s) for s in np.cumsum(np.exp(staircase_terms(d, thresholds, N, config.k_max)))]

        exact = np.array([t.log_prob for t in run_terms(d, thresholds, N, config.k_max + 1)])
        head, nxt = exact[1:-1], exact[2:]
        with np.errstate(invalid="ignore"):
            exact_ratios = np.where(np.isfinite(head), np.exp(nxt - head), np.nan)
        exact_q_hat = _max_or_none(exact_ratios)
        if exact_q_hat is not None and exact_q_hat + epsilon >= 1.0:
            notes.append(f"精确游程项之比 {exact_q_hat:.6g} 加 ε 后 >= 1，几何上界只覆盖阶梯级数")

    if not side.satisfied:
        notes.append(f"侧条件 P(A_n) -> 0 不成立（末值 {side.last_value:.4g}）")
    decided = applicable and side.satisfied
    report = RatioReport(
        q_config=config,
        probe_grid=probe_grid,
        q_hat=q_hat,
        row_max=row_max,
        epsilon=epsilon,
        bound_n=N,
        bound_value=bound_value,
        displayed_bound_value=displayed,
        exact_q_hat=exact_q_hat,
        staircase_sums=staircase_sums,
        side_condition=side.satisfied,
        verdict=Verdict.CONVERGES if decided else Verdict.INCONCLUSIVE,
        io_probability=0.0 if decided else None,
        conclusion=IO_ZERO if decided else None,
        notes=notes,
    )
    report._ratios = ratios
    logger.debug(f"ratio: q_hat={q_hat}, ε={epsilon}, 上界={bound_value}, 判定={report.verdict.value}")
    return report
