"""概率级数的数值判敛

从有限多项无法判定无穷级数的敛散，这里的规则是明确的启发式，
报告中始终附带原始项与部分和，调用方可以按自己的标准重新判断。
"""

import logging
from enum import Enum
from typing import Callable, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr
from scipy import stats

from ..errors import NegativeTermError

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    CONVERGES = "converges"
    DIVERGES = "diverges"
    INCONCLUSIVE = "inconclusive"


class VerdictConfig(BaseModel):
    """判敛阈值

    Attributes:
        window: 比值窗口 W，最后 W 个相邻项之比
        ratio_threshold: 比值上限 r < 1
        div_tol: 发散判定要求最后十进位段内部分和的最小增长
        minorant_c: 调和下界 c/n 中 c 的最小值
        conv_exponent_margin: 尾部幂指数 p >= 1 + margin 时判为收敛
        div_exponent_margin: 尾部幂指数 p <= 1 + margin 时才考虑发散
        p0_tol: 侧条件 P(A_n) -> 0 要求最后的探测值小于该值
        summary_points: 报告中保留的部分和采样点数（完整数据见 CSV 表）
    """

    model_config = ConfigDict(frozen=True)

    window: int = Field(default=20, ge=2)
    ratio_threshold: float = Field(default=0.999, gt=0.0, lt=1.0)
    div_tol: float = Field(default=0.01, gt=0.0)
    minorant_c: float = Field(default=1e-3, gt=0.0)
    conv_exponent_margin: float = Field(default=0.015, gt=0.0)
    div_exponent_margin: float = Field(default=0.005, ge=0.0)
    p0_tol: float = Field(default=0.5, gt=0.0, le=1.0)
    summary_points: int = Field(default=60, ge=2)


class SeriesReport(BaseModel):
    """单个级数判据的报告

    verdict 是判据层面的结论：侧条件不满足时即使级数收敛也记为 inconclusive，
    series_verdict 保留级数本身的分类。io_probability 为 0.0 表示判据给出 P(A_n i.o.) = 0。
    """

    criterion_id: str
    n_start: int
    terms_computed: int
    partial_sums: list[tuple[int, float]]
    partial_sum: float
    tail_ratio_estimate: Optional[float] = None
    tail_exponent: Optional[float] = None
    minorant: Optional[float] = None
    series_verdict: Verdict
    verdict: Verdict
    upper_bound: Optional[float] = None
    side_condition: Optional[bool] = None
    io_probability: Optional[float] = None
    conclusion: Optional[str] = None
    notes: list[str] = Field(default_factory=list)

    _terms: Optional[np.ndarray] = PrivateAttr(default=None)

    @property
    def terms(self) -> np.ndarray:
        return self._terms

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_start, self.n_start + self.terms_computed)

    def table(self) -> pd.DataFrame:
        """每个 n 一行：n, term, partial_sum"""
        return pd.DataFrame({
            "n": self.indices,
            "term": self._terms,
            "partial_sum": np.cumsum(self._terms),
        })


def _summary_indices(size: int, points: int) -> np.ndarray:
    """对数均匀的采样位置，总包含首末两项"""
    if size <= points:
        return np.arange(size)
    grid = np.unique(np.round(np.logspace(0, np.log10(size), points)).astype(int) - 1)
    return np.unique(np.concatenate([[0], grid, [size - 1]]))


def tail_exponent(n: np.ndarray, terms: np.ndarray, points: int = 200) -> Optional[float]:
    """最后十进位段内 ln t 对 ln n 的最小二乘斜率取负，即 t_n ≍ n^{-p} 中的 p

    在对数均匀的子样本上拟合，正项少于 3 个时返回 None。
    """
    top = n[-1]
    mask = (n >= max(n[0], top / 10.0)) & (terms > 0)
    if mask.sum() < 3:
        return None
    nn, tt = n[mask], terms[mask]
    pick = np.unique(np.searchsorted(nn, np.geomspace(nn[0], nn[-1], points)).clip(0, len(nn) - 1))
    if pick.size < 3:
        return None
    fit = stats.linregress(np.log(nn[pick]), np.log(tt[pick]))
    return float(-fit.slope)


def series_verdict(
    terms: Callable[[np.ndarray], np.ndarray],
    n_max: int,
    config: Optional[VerdictConfig] = None,
    *,
    n_min: int = 1,
    criterion_id: str = "series",
) -> SeriesReport:
    """对非负级数 Σ terms(n)，n = n_min..n_max 做数值判敛

    规则（依次）：
    1. 最后 W 项全为 0：收敛，尾部上界 0
    2. 尾部幂指数 p <= 1 + div_margin，且 n*t_n >= c 覆盖最后 W 项，
       且部分和在最后十进位段增长超过 div_tol：发散（调和下界 c/n）
    3. 最后 W 个相邻比值都 <= r：收敛，尾部上界 t_N * q/(1-q)，q 为观测到的最大比值
    4. p >= 1 + conv_margin：收敛，尾部上界按积分比较取 N*t_N/(p-1)
    5. 其余：不确定

    Raises:
        NegativeTermError: 出现负项或 nan
    """
    config = config or VerdictConfig()
    if n_max < n_min:
        raise ValueError(f"n_max={n_max} 小于 n_min={n_min}")
    n = np.arange(n_min, n_max + 1)
    t = np.asarray(terms(n), dtype=float)
    if t.shape != n.shape:
        raise ValueError(f"级数项数量 {t.shape} 与下标数量 {n.shape} 不一致")
    bad = np.flatnonzero(~(t >= 0))
    if bad.size:
        i = int(bad[0])
        raise NegativeTermError(f"{criterion_id}: 第 n={n[i]} 项为 {t[i]!r}，概率级数的项必须非负")

    partial = np.cumsum(t)
    total = float(partial[-1])
    W = min(config.window, len(t) - 1)
    tail = t[-(W + 1):]
    nf = n.astype(float)

    verdict = Verdict.INCONCLUSIVE
    upper_bound = None
    ratio_hat = None
    minorant = None
    p = tail_exponent(nf, t)

    if W >= 1 and np.all(tail == 0):
        verdict = Verdict.CONVERGES
        upper_bound = total
        ratio_hat = 0.0
    else:
        if p is not None and p <= 1.0 + config.div_exponent_margin:
            c = float(np.min(nf[-W:] * t[-W:])) if W >= 1 else 0.0
            decade_start = int(np.searchsorted(n, max(n_min, n_max // 10)))
            growth = total - float(partial[decade_start])
            if c >= config.minorant_c and growth > config.div_tol:
                verdict = Verdict.DIVERGES
                minorant = c
        if verdict is Verdict.INCONCLUSIVE and W >= 1 and np.all(tail > 0):
            ratios = tail[1:] / tail[:-1]
            q = float(np.max(ratios))
            if q <= config.ratio_threshold:
                verdict = Verdict.CONVERGES
                ratio_hat = q
                upper_bound = total + float(t[-1]) * q / (1.0 - q)
        if verdict is Verdict.INCONCLUSIVE and p is not None and p >= 1.0 + config.conv_exponent_margin:
            verdict = Verdict.CONVERGES
            upper_bound = total + float(t[-1]) * n_max / (p - 1.0)

    logger.debug(f"{criterion_id}: n∈[{n_min},{n_max}], 部分和={total:.6g}, p={p}, 判定={verdict.value}")

    idx = _summary_indices(len(t), config.summary_points)
    report = SeriesReport(
        criterion_id=criterion_id,
        n_start=n_min,
        terms_computed=len(t),
        partial_sums=[(int(n[i]), float(partial[i])) for i in idx],
        partial_sum=total,
        tail_ratio_estimate=ratio_hat,
        tail_exponent=p,
        minorant=minorant,
        series_verdict=verdict,
        verdict=verdict,
        upper_bound=upper_bound,
    )
    report._terms = t
    return report
