"""变换族与阈值序列

事件族 A_n = {M_n <= x_n} 由阈值序列 x_n 决定。阈值可以显式给出（关于 n 的表达式、
向量化函数或有限表），也可以由变换族 φ_n 与水平 level 导出：
P(φ_n(M_n) <= level) = P(M_n <= x_n)，即 x_n = φ_n^{-1}(level)。
"""

import logging
import threading
from enum import Enum
from typing import Callable, Mapping, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..errors import DomainError, ThresholdMonotonicityError
from .expression import Expression, parse_expression

logger = logging.getLogger(__name__)


class TransformKind(str, Enum):
    IDENTITY = "identity"
    POWER = "power"      # φ_n(m) = m^{n/ln n}
    SCALE = "scale"      # φ_n(m) = a_n * m


class TransformFamily(BaseModel):
    """按 n 变化的单调变换 φ_n

    Attributes:
        kind: 变换类型
        scale: SCALE 类型的系数 a_n（关于 n 的表达式文本）

    Examples:
        TransformFamily.power()
        TransformFamily.scale_by("ln(n)/n")
    """

    model_config = ConfigDict(frozen=True)

    kind: TransformKind = TransformKind.IDENTITY
    scale: Optional[str] = None

    @classmethod
    def identity(cls) -> "TransformFamily":
        return cls(kind=TransformKind.IDENTITY)

    @classmethod
    def power(cls) -> "TransformFamily":
        return cls(kind=TransformKind.POWER)

    @classmethod
    def scale_by(cls, expression: str) -> "TransformFamily":
        parse_expression(expression)
        return cls(kind=TransformKind.SCALE, scale=expression)

    @property
    def spec(self) -> str:
        """场景文件中的写法：identity | power | scale:<a_n>"""
        if self.kind is TransformKind.SCALE:
            return f"scale:{parse_expression(self.scale)}"
        return self.kind.value

    @property
    def min_index(self) -> int:
        """φ_n 有定义的最小 n"""
        return 2 if self.kind is TransformKind.POWER else 1

    @property
    def default_n_min(self) -> int:
        # ln(n)/n 在 n=e 处取最大值，因此 Power 导出的阈值从 n=3 起才单调
        return 3 if self.kind is TransformKind.POWER else 1

    def _check_index(self, n: np.ndarray) -> None:
        if np.any(n < self.min_index):
            raise DomainError(f"变换 {self.spec} 要求 n >= {self.min_index}，实际最小 n={int(np.min(n))}")

    def coefficients(self, n) -> np.ndarray:
        """SCALE 的系数 a_n，必须为正"""
        a = np.asarray(parse_expression(self.scale)(np.asarray(n, dtype=float)), dtype=float)
        if np.any(a <= 0):
            bad = np.asarray(n)[a <= 0] if np.ndim(n) else n
            raise DomainError(f"缩放系数 a_n 必须为正: a_n={self.scale} 在 n={np.ravel(bad)[0]} 处不为正")
        return a

    def apply(self, n, m):
        """φ_n(m)"""
        na = np.asarray(n, dtype=float)
        ma = np.asarray(m, dtype=float)
        self._check_index(na)
        if self.kind is TransformKind.IDENTITY:
            out = ma
        elif self.kind is TransformKind.POWER:
            with np.errstate(divide="ignore"):
                out = np.power(ma, na / np.log(na))
        else:
            out = self.coefficients(na) * ma
        return float(out) if np.ndim(out) == 0 else out

    def inverse(self, n, level):
        """φ_n^{-1}(level)

        Raises:
            DomainError: level 不在 φ_n 的值域内（Power 要求 level ∈ (0,1]）
        """
        na = np.asarray(n, dtype=float)
        self._check_index(na)
        if self.kind is TransformKind.IDENTITY:
            out = np.broadcast_to(np.asarray(level, dtype=float), na.shape)
        elif self.kind is TransformKind.POWER:
            if not 0.0 < level <= 1.0:
                raise DomainError(f"Power 变换的水平必须在 (0,1] 内: {level!r}")
            out = np.exp(np.log(level) * np.log(na) / na)
        else:
            if not level > 0:
                raise DomainError(f"Scale 变换的水平必须为正: {level!r}")
            out = level / self.coefficients(na)
        return float(out) if np.ndim(out) == 0 else np.array(out)


def parse_transform(spec: str) -> TransformFamily:
    """解析 identity | power | scale:<a_n 表达式>"""
    text = spec.strip()
    head, _, tail = text.partition(":")
    head = head.strip().lower()
    if head == TransformKind.IDENTITY.value and not tail:
        return TransformFamily.identity()
    if head == TransformKind.POWER.value and not tail:
        return TransformFamily.power()
    if head == TransformKind.SCALE.value and tail.strip():
        return TransformFamily.scale_by(tail.strip())
    raise DomainError(f"未知的变换族: '{spec}'")


def thresholds_from_transform(family: TransformFamily, level: float, n: int) -> float:
    """x_n = φ_n^{-1}(level)"""
    return family.inverse(n, level)


class ThresholdSequence:
    """阈值序列 x_n，定义在 [n_min, ∞) 上

    求值是惰性的：首次请求某个窗口时计算并缓存从 n_min 到窗口末端的连续数组，
    每次求值都检查窗口内的单调性。缓存由锁保护，数值是确定的，并发读取不会得到错误值。

    Examples:
        # 关于 n 的表达式
        seq = ThresholdSequence.explicit("1 - 1/n")
        seq.values(10, 12)                       # array([0.9, 0.909..., 0.916...])

        # 有限表
        seq = ThresholdSequence.from_table({2: 0.5, 3: 0.6, 4: 0.7})

        # 由变换族导出
        seq = ThresholdSequence.from_transform(TransformFamily.power(), level=0.9)
    """

    _GROWTH = 2

    def __init__(
        self,
        generator: Callable[[np.ndarray], np.ndarray],
        *,
        n_min: int = 1,
        n_max: Optional[int] = None,
        label: str = "",
        expression: Optional[Expression] = None,
        family: Optional[TransformFamily] = None,
        level: Optional[float] = None,
    ):
        if n_min < 1:
            raise DomainError(f"n_min 必须 >= 1: {n_min}")
        self._generator = generator
        self.n_min = int(n_min)
        self.n_max = n_max
        self.label = label
        self.expression = expression
        self.family = family
        self.level = level
        self._cache = np.empty(0)
        self._lock = threading.Lock()
        self._logger = logging.getLogger(__name__)

    @classmethod
    def explicit(cls, expression: Union[str, Expression, Callable], *, n_min: int = 1) -> "ThresholdSequence":
        if callable(expression) and not isinstance(expression, Expression):
            return cls(expression, n_min=n_min, label=getattr(expression, "__name__", "callable"))
        expr = parse_expression(expression) if isinstance(expression, str) else expression
        return cls(expr.evaluate, n_min=n_min, label=str(expr), expression=expr)

    @classmethod
    def constant(cls, value: float, *, n_min: int = 1) -> "ThresholdSequence":
        return cls(lambda n: np.full(np.shape(n), float(value)), n_min=n_min, label=repr(float(value)))

    @classmethod
    def from_table(cls, table: Mapping[int, float]) -> "ThresholdSequence":
        """有限表 {n: x_n}，下标必须连续"""
        keys = sorted(int(k) for k in table)
        if keys != list(range(keys[0], keys[-1] + 1)):
            raise DomainError(f"阈值表的下标必须连续: {keys}")
        values = np.array([float(table[k]) for k in keys])
        first = keys[0]

        def lookup(n: np.ndarray) -> np.ndarray:
            return values[np.asarray(n, dtype=int) - first]

        label = ", ".join(f"x_{k}={table[k]!r}" for k in keys)
        return cls(lookup, n_min=first, n_max=keys[-1], label=label)

    @classmethod
    def from_transform(
        cls, family: TransformFamily, level: float, *, n_min: Optional[int] = None
    ) -> "ThresholdSequence":
        n_min = family.default_n_min if n_min is None else n_min
        if n_min < family.min_index:
            raise DomainError(f"变换 {family.spec} 要求 n_min >= {family.min_index}")
        # 构造时即检查水平是否在值域内
        family.inverse(n_min, level)
        return cls(
            lambda n: family.inverse(n, level),
            n_min=n_min,
            label=f"{family.spec} @ level={level!r}",
            family=family,
            level=level,
        )

    def _extend(self, n_stop: int) -> None:
        have = self.n_min + len(self._cache) - 1
        if n_stop <= have:
            return
        target = max(n_stop, self.n_min + self._GROWTH * len(self._cache))
        if self.n_max is not None:
            target = min(max(target, n_stop), self.n_max)
        n = np.arange(have + 1, target + 1, dtype=float)
        fresh = np.asarray(self._generator(n), dtype=float)
        if fresh.shape != n.shape or np.any(np.isnan(fresh)):
            raise DomainError(f"阈值序列 {self.label} 在 n∈[{have + 1}, {target}] 上求值失败")
        self._cache = np.concatenate([self._cache, fresh])
        self._logger.debug(f"阈值缓存扩展到 n={target}: {self.label}")

    def values(self, n_start: int, n_stop: int, *, check: bool = True) -> np.ndarray:
        """返回 [x_{n_start}, ..., x_{n_stop}]（两端包含）

        Raises:
            DomainError: 窗口超出定义域
            ThresholdMonotonicityError: 窗口内阈值下降
        """
        n_start, n_stop = int(n_start), int(n_stop)
        if n_start < self.n_min:
            raise DomainError(f"n={n_start} 小于阈值序列的 n_min={self.n_min}")
        if self.n_max is not None and n_stop > self.n_max:
            raise DomainError(f"n={n_stop} 超出阈值表的范围 (最大 {self.n_max})")
        with self._lock:
            self._extend(n_stop)
            window = self._cache[n_start - self.n_min:n_stop - self.n_min + 1].copy()
        if check:
            drops = np.flatnonzero(np.diff(window) < 0)
            if drops.size:
                i = int(drops[0])
                raise ThresholdMonotonicityError(n_start + i, float(window[i]), float(window[i + 1]))
        return window

    def __call__(self, n: int) -> float:
        return float(self.values(n, n, check=False)[0])

    def __repr__(self) -> str:
        return f"ThresholdSequence({self.label}, n_min={self.n_min})"
