"""对数空间的数值工具"""

import numpy as np

_LOG_HALF = np.log(2.0)


def log1mexp(x):
    """log(1 - exp(-x))，x >= 0

    x 较小时用 log(-expm1(-x))，较大时用 log1p(-exp(-x))，两个分支各自避免抵消误差。
    x = 0 时返回 -inf。
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x < _LOG_HALF, np.log(-np.expm1(-x)), np.log1p(-np.exp(-x)))
    return out if out.ndim else float(out)


def safe_log(p):
    """log(p)，p = 0 时为 -inf 且不告警"""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(p)
    return out if out.ndim else float(out)
