"""阈值事件族 A_n = {M_n <= x_n} 的复合事件概率

所有概率以自然对数返回（-inf 表示概率为 0），利用 X_i 独立同分布做因子分解：
- P(M_n <= x) = F(x)^n
- 游程事件 A_n^c ... A_{n+k-1}^c A_{n+k} 按"最大值所在的阈值区间"做前向递推，结果精确
- 阶梯事件 {x_n<M_n<=x_{n+1}, ..., x_{n+k-1}<M_{n+k-1}<=x_{n+k}, M_{n+k}<=x_{n+k}}
  的概率有乘积形式，其相邻项之比就是 run_ratio 的闭式

k <= 1 时游程与阶梯重合；k >= 2 时阶梯只是游程的一部分（最大值可能一步越过多个阈值）。

阈值必须在所用窗口内单调不减，否则抛出 ThresholdMonotonicityError。
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..distributions import Distribution
from ..errors import DomainError, UndefinedRatioError
from .logspace import log1mexp, safe_log
from .thresholds import ThresholdSequence, TransformFamily, thresholds_from_transform

logger = logging.getLogger(__name__)

NEG_INF = -math.inf


@dataclass(frozen=True)
class RunTerm:
    """游程项 P(A_n^c ... A_{n+k-1}^c A_{n+k}) 的对数概率"""
    n: int
    k: int
    log_prob: float

    @property
    def prob(self) -> float:
        return math.exp(self.log_prob)


def _check_index(n: int, k: int = 0, *, k_min: int = 0) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"n 必须是正整数: {n!r}")
    if int(k) != k or k < k_min:
        raise DomainError(f"k 必须是 >= {k_min} 的整数: {k!r}")


def log_increment(d: Distribution, lo, hi):
    """log(F(hi) - F(lo))，lo <= hi

    两点都在上尾时用生存函数之差，避免 1 附近的抵消。
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    s_lo = np.asarray(d.survival(lo))
    s_hi = np.asarray(d.survival(hi))
    gap = np.where(s_lo < 0.5, s_lo - s_hi, np.asarray(d.cdf(hi)) - np.asarray(d.cdf(lo)))
    return safe_log(np.maximum(gap, 0.0))


def log_power_gap(d: Distribution, n, lo, hi):
    """log(F(hi)^n - F(lo)^n)

    写成 F(hi)^n * (1 - exp(-δ))，δ = n*log1p((F(hi)-F(lo))/F(lo))，
    F(lo) = 0 时退化为 F(hi)^n。
    """
    n = np.asarray(n, dtype=float)
    log_hi = n * np.asarray(d.log_cdf(hi))
    f_lo = np.asarray(d.cdf(lo))
    increment = np.exp(log_increment(d, lo, hi))
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = n * np.log1p(increment / f_lo)
    out = np.where(f_lo > 0, log_hi + log1mexp(np.where(f_lo > 0, delta, np.inf)), log_hi)
    out = np.where(np.isneginf(log_hi), NEG_INF, out)
    return out if out.ndim else float(out)


def _windows(thresholds: ThresholdSequence, n_lo: int, n_hi: int, width: int) -> np.ndarray:
    """矩阵 b[i, c] = x_{n_lo + c + i}，i = 0..width"""
    x = thresholds.values(n_lo, n_hi + width)
    count = n_hi - n_lo + 1
    return np.stack([x[i:i + count] for i in range(width + 1)])


def run_recursion(d: Distribution, n: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """游程概率的前向递推

    以 b_0 <= ... <= b_K 为分界，把最大值所在位置分成 K+1 个区间：
    l < K 为 (b_l, b_{l+1}]，l = K 为 (b_K, ∞)。状态 state[l] 是
    "到目前为止所有 A 都未发生且当前最大值在区间 l" 的对数概率。

    Args:
        n: 起始下标，形状 (N,)
        b: 阈值窗口，形状 (K+1, N)

    Returns:
        (runs, no_event): runs[k] = log P(A_n^c...A_{n+k-1}^c A_{n+k})，形状 (K+1, N)；
        no_event = log P(窗口内没有任何 A_j 发生)，形状 (N,)
    """
    n = np.asarray(n, dtype=float)
    K = b.shape[0] - 1
    log_g = np.asarray(d.log_cdf(b), dtype=float)

    # 单个 X 落入区间 l 的概率，以及不超过区间 l 上端的概率
    log_step = np.empty_like(b)
    log_step[:K] = log_increment(d, b[:-1], b[1:])
    log_step[K] = safe_log(d.survival(b[K]))
    log_below = np.zeros_like(b)
    log_below[:K] = log_g[1:]

    # M_n 的初始分布
    state = np.empty_like(b)
    state[:K] = log_power_gap(d, n, b[:-1], b[1:])
    state[K] = log1mexp(-n * log_g[K])

    runs = np.empty_like(b)
    runs[0] = n * log_g[0]
    with np.errstate(invalid="ignore"):
        for j in range(K):
            runs[j + 1] = state[j] + log_g[j + 1]
            prefix = np.logaddexp.accumulate(state, axis=0)
            fresh = np.full_like(state, NEG_INF)
            fresh[j + 1:] = np.logaddexp(
                state[j + 1:] + log_below[j + 1:],
                prefix[j:K] + log_step[j + 1:],
            )
            state = fresh
    return runs, state[K]


def _window(thresholds: ThresholdSequence, n: int, width: int) -> np.ndarray:
    return thresholds.values(n, n + width)


def prob_max_le(d: Distribution, n: int, x: float) -> float:
    """log P(M_n <= x) = n * log F(x)"""
    _check_index(n)
    return float(n * d.log_cdf(x))


def run_terms(d: Distribution, thresholds: ThresholdSequence, n: int, K: int) -> list[RunTerm]:
    """一次递推得到窗口内全部游程项 k = 0..K"""
    _check_index(n, K)
    b = _window(thresholds, n, K).reshape(K + 1, 1)
    runs, _ = run_recursion(d, np.array([float(n)]), b)
    return [RunTerm(n=n, k=k, log_prob=float(runs[k, 0])) for k in range(K + 1)]


def prob_run(d: Distribution, thresholds: ThresholdSequence, n: int, k: int) -> float:
    """log P(A_n^c ... A_{n+k-1}^c A_{n+k})

    k = 0 即 P(A_n)；k = 1 为 [F(x_{n+1})^n - F(x_n)^n] F(x_{n+1})。
    相邻阈值相等时对应的事件为空，返回 -inf。
    """
    return run_terms(d, thresholds, n, k)[k].log_prob


def prob_no_event(d: Distribution, thresholds: ThresholdSequence, n: int, K: int) -> float:
    """log P(A_j 在 [n, n+K] 内都不发生)"""
    _check_index(n, K)
    b = _window(thresholds, n, K).reshape(K + 1, 1)
    _, no_event = run_recursion(d, np.array([float(n)]), b)
    return float(no_event[0])


def staircase_terms(d: Distribution, thresholds: ThresholdSequence, n: int, K: int) -> np.ndarray:
    """阶梯项 k = 0..K 的对数概率

    k = 0: F(x_n)^n
    k >= 1: [F(x_{n+1})^n - F(x_n)^n] * prod_{j=1}^{k-1}[F(x_{n+j+1}) - F(x_{n+j})] * F(x_{n+k})
    """
    _check_index(n, K)
    x = _window(thresholds, n, K)
    log_g = np.atleast_1d(np.asarray(d.log_cdf(x), dtype=float))
    out = np.empty(K + 1)
    out[0] = n * log_g[0]
    if K == 0:
        return out
    first = log_power_gap(d, n, x[0], x[1])
    log_d = log_increment(d, x[1:K], x[2:K + 1]) if K > 1 else np.empty(0)
    middle = np.concatenate([[0.0], np.cumsum(log_d)])
    out[1:] = first + middle + log_g[1:K + 1]
    return out


def prob_staircase(d: Distribution, thresholds: ThresholdSequence, n: int, k: int) -> float:
    """阶梯事件的对数概率，即因子分解形式的游程公式"""
    return float(staircase_terms(d, thresholds, n, k)[k])


def run_ratio(d: Distribution, thresholds: ThresholdSequence, n: int, k: int) -> float:
    """[F(x_{n+k+1}) - F(x_{n+k})] * F(x_{n+k+1}) / F(x_{n+k})

    即相邻阶梯项之比，直接由闭式计算，两项都下溢时仍然有限且准确。

    Raises:
        UndefinedRatioError: F(x_{n+k}) = 0
    """
    _check_index(n, k, k_min=1)
    x = thresholds.values(n, n + k + 1)
    lo, hi = x[k], x[k + 1]
    f_lo = d.cdf(lo)
    if f_lo <= 0.0:
        raise UndefinedRatioError(f"F(x_{n + k}) = 0，游程比值无定义 (n={n}, k={k})")
    return float(np.exp(log_increment(d, lo, hi)) * d.cdf(hi) / f_lo)


def ratio_table(d: Distribution, thresholds: ThresholdSequence, n: int, k_max: int) -> np.ndarray:
    """run_ratio(n, k)，k = 1..k_max；分母为 0 的位置为 nan"""
    _check_index(n, k_max, k_min=1)
    x = thresholds.values(n, n + k_max + 1)
    lo, hi = x[1:k_max + 1], x[2:k_max + 2]
    f_lo = np.asarray(d.cdf(lo))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.exp(log_increment(d, lo, hi)) * np.asarray(d.cdf(hi)) / f_lo
    return np.where(f_lo > 0, ratios, np.nan)


def prob_event_then_fail(d: Distribution, thresholds: ThresholdSequence, n: int) -> float:
    """log P(A_n A_{n+1}^c) = log[F(x_n)^n * (1 - F(x_{n+1}))]

    在 M_n <= x_n <= x_{n+1} 的前提下，A_{n+1}^c 要求 X_{n+1} > x_{n+1}。
    """
    _check_index(n)
    x = thresholds.values(n, n + 1)
    return float(n * d.log_cdf(x[0]) + safe_log(d.survival(x[1])))


def prob_joint(d: Distribution, thresholds: ThresholdSequence, n: int, k: int) -> float:
    """log P(A_n A_{n+k}) = log[F(x_n)^n * F(x_{n+k})^k]"""
    _check_index(n, k, k_min=1)
    x = thresholds.values(n, n + k)
    return float(n * d.log_cdf(x[0]) + k * d.log_cdf(x[k]))


def union_window(d: Distribution, thresholds: ThresholdSequence, n: int, K: int) -> float:
    """P(∪_{j=n}^{n+K} A_j) = Σ_{k=0}^{K} P(A_n^c...A_{n+k-1}^c A_{n+k})

    游程事件按首次发生的位置划分并集，线性空间中做补偿求和。
    """
    terms = run_terms(d, thresholds, n, K)
    return math.fsum(t.prob for t in terms)


def staircase_window(d: Distribution, thresholds: ThresholdSequence, n: int, K: int) -> float:
    """阶梯项之和 Σ_{k=0}^{K}，几何上界针对的就是这个级数"""
    return math.fsum(np.exp(staircase_terms(d, thresholds, n, K)))


# 关于 n 向量化的级数项，供判据模块使用

def series_max_le(d: Distribution, thresholds: ThresholdSequence, n_lo: int, n_hi: int) -> np.ndarray:
    """log P(A_n)，n = n_lo..n_hi"""
    x = thresholds.values(n_lo, n_hi)
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    return n * np.asarray(d.log_cdf(x))


def series_event_then_fail(d: Distribution, thresholds: ThresholdSequence, n_lo: int, n_hi: int) -> np.ndarray:
    """log P(A_n A_{n+1}^c)，n = n_lo..n_hi"""
    x = thresholds.values(n_lo, n_hi + 1)
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    return n * np.asarray(d.log_cdf(x[:-1])) + safe_log(d.survival(x[1:]))


def series_joint(d: Distribution, thresholds: ThresholdSequence, n_lo: int, n_hi: int, k: int) -> np.ndarray:
    """log P(A_n A_{n+k})，n = n_lo..n_hi"""
    if k < 1:
        raise DomainError(f"k 必须 >= 1: {k}")
    x = thresholds.values(n_lo, n_hi + k)
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    return n * np.asarray(d.log_cdf(x[:-k])) + k * np.asarray(d.log_cdf(x[k:]))


def series_run(d: Distribution, thresholds: ThresholdSequence, n_lo: int, n_hi: int, m: int) -> np.ndarray:
    """log P(A_n^c ... A_{n+m-1}^c A_{n+m})，n = n_lo..n_hi，m 固定"""
    if m < 0:
        raise DomainError(f"m 必须 >= 0: {m}")
    if m == 0:
        return series_max_le(d, thresholds, n_lo, n_hi)
    b = _windows(thresholds, n_lo, n_hi, m)
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    runs, _ = run_recursion(d, n, b)
    return runs[m]


__all__ = [
    "RunTerm",
    "TransformFamily",
    "prob_max_le",
    "prob_run",
    "prob_no_event",
    "prob_staircase",
    "run_terms",
    "staircase_terms",
    "run_ratio",
    "ratio_table",
    "prob_event_then_fail",
    "prob_joint",
    "union_window",
    "staircase_window",
    "thresholds_from_transform",
    "series_max_le",
    "series_event_then_fail",
    "series_joint",
    "series_run",
]
