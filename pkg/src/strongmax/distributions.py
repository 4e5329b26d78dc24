"""分布契约与内置分布族

每个分布提供 CDF、稳定的生存函数、对数 CDF、分位数、逆生存函数与抽样。
所有运算既接受标量也接受 numpy 数组，标量输入返回 float。

内置分布族：
- Uniform01: 单位均匀分布，r_F = 1
- Pareto1: F(x) = 1 - 1/x (x >= 1)，r_F = +inf
- Exponential(rate): F(x) = 1 - exp(-rate * x)，r_F = +inf

在场景文件中分别写作 `uniform01`、`pareto1`、`exponential:<rate>`。
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Annotated, Any, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _finish(x: Any, result: np.ndarray) -> ArrayLike:
    """标量输入返回 float，数组输入保持形状"""
    if np.ndim(x) == 0:
        return float(result)
    return result


class RngStream:
    """单一所有者的随机数流

    基于计数器型的 Philox 生成器，由 (seed, spawn_key...) 唯一确定。
    流只能派生，不能共享：每个逻辑工作单元持有自己的流。

    Examples:
        rng = RngStream.from_seed(42)
        v = rng.next_upper_uniform()        # (0, 1] 内的均匀数
        children = rng.spawn(4)             # 派生 4 条独立子流
    """

    def __init__(self, generator: np.random.Generator):
        self.generator = generator

    @classmethod
    def from_seed(cls, seed: int, *spawn_key: int) -> "RngStream":
        seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key))
        return cls(np.random.Generator(np.random.Philox(seq)))

    def upper_uniforms(self, size=None) -> ArrayLike:
        """返回 (0, 1] 内的均匀数 v = 1 - u，u 取自 [0, 1)

        用 v 做逆生存变换不会把接近 1 的 u 舍入成 1。
        """
        return 1.0 - self.generator.random(size)

    def next_upper_uniform(self) -> float:
        return float(self.upper_uniforms())

    def spawn(self, count: int) -> list["RngStream"]:
        return [RngStream(g) for g in self.generator.spawn(count)]


class Distribution(BaseModel, ABC):
    """分布契约

    子类只需给出生存函数、逆生存函数与支撑区间，CDF 与对数 CDF 由此导出：
    - cdf 在支撑以下为 0，在 r_F 及以上恰为 1
    - log_cdf 在生存概率较小时走 log1p(-s) 路径，避免计算 1 - F(x)
    """

    model_config = ConfigDict(frozen=True)

    @property
    @abstractmethod
    def left_edge(self) -> float:
        raise NotImplementedError

    @property
    @abstractmethod
    def right_endpoint(self) -> float:
        """r_F = sup{x: F(x) < 1}，可能为 +inf"""
        raise NotImplementedError

    @property
    @abstractmethod
    def spec(self) -> str:
        """场景文件中的名称"""
        raise NotImplementedError

    @abstractmethod
    def _survival(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def _isf(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        return 1.0 - self._survival(x)

    def survival(self, x: ArrayLike) -> ArrayLike:
        xa = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            s = self._survival(xa)
        return _finish(x, np.clip(s, 0.0, 1.0))

    def cdf(self, x: ArrayLike) -> ArrayLike:
        xa = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            c = self._cdf(xa)
        c = np.where(xa >= self.right_endpoint, 1.0, c)
        return _finish(x, np.clip(c, 0.0, 1.0))

    def log_cdf(self, x: ArrayLike) -> ArrayLike:
        xa = np.asarray(x, dtype=float)
        s = np.asarray(self.survival(xa), dtype=float)
        c = np.asarray(self.cdf(xa), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(s < 0.5, np.log1p(-s), np.log(c))
        out = np.where(xa >= self.right_endpoint, 0.0, out)
        return _finish(x, out)

    def quantile(self, u: ArrayLike) -> ArrayLike:
        """F^{-1}(u)，u 必须在开区间 (0, 1) 内"""
        ua = np.asarray(u, dtype=float)
        if np.any(~((ua > 0.0) & (ua < 1.0))):
            raise DomainError(f"分位数参数必须在 (0,1) 内: {u!r}")
        return _finish(u, self._quantile(ua))

    def _quantile(self, u: np.ndarray) -> np.ndarray:
        return self._isf(1.0 - u)

    def isf(self, v: ArrayLike) -> ArrayLike:
        """逆生存函数 S^{-1}(v)，v 在 (0, 1] 内"""
        va = np.asarray(v, dtype=float)
        if np.any(~((va > 0.0) & (va <= 1.0))):
            raise DomainError(f"逆生存函数参数必须在 (0,1] 内: {v!r}")
        with np.errstate(divide="ignore"):
            return _finish(v, self._isf(va))

    def sample(self, rng: RngStream, size=None) -> ArrayLike:
        """逆变换抽样：返回 quantile(u)，以 isf(1 - u) 的形式计算"""
        return self.isf(rng.upper_uniforms(size))


class Uniform01(Distribution):
    kind: Literal["uniform01"] = "uniform01"

    @property
    def left_edge(self) -> float:
        return 0.0

    @property
    def right_endpoint(self) -> float:
        return 1.0

    @property
    def spec(self) -> str:
        return "uniform01"

    def _survival(self, x):
        return np.clip(1.0 - x, 0.0, 1.0)

    def _cdf(self, x):
        return np.clip(x, 0.0, 1.0)

    def _quantile(self, u):
        return u

    def _isf(self, v):
        return 1.0 - v


class Pareto1(Distribution):
    kind: Literal["pareto1"] = "pareto1"

    @property
    def left_edge(self) -> float:
        return 1.0

    @property
    def right_endpoint(self) -> float:
        return math.inf

    @property
    def spec(self) -> str:
        return "pareto1"

    def _survival(self, x):
        return np.where(x <= 1.0, 1.0, 1.0 / x)

    def _cdf(self, x):
        return np.where(x <= 1.0, 0.0, 1.0 - 1.0 / x)

    def _quantile(self, u):
        return 1.0 / (1.0 - u)

    def _isf(self, v):
        return 1.0 / v


class Exponential(Distribution):
    kind: Literal["exponential"] = "exponential"
    rate: float = Field(default=1.0, gt=0.0)

    def __init__(self, rate: float = 1.0, **data):
        # 退化参数在构造时拒绝，而不是等到调用时
        if not (isinstance(rate, (int, float)) and math.isfinite(rate) and rate > 0):
            raise DomainError(f"指数分布的 rate 必须为正数: {rate!r}")
        super().__init__(rate=rate, **data)

    @property
    def left_edge(self) -> float:
        return 0.0

    @property
    def right_endpoint(self) -> float:
        return math.inf

    @property
    def spec(self) -> str:
        return f"exponential:{self.rate!r}"

    def _survival(self, x):
        return np.where(x <= 0.0, 1.0, np.exp(-self.rate * np.maximum(x, 0.0)))

    def _cdf(self, x):
        return np.where(x <= 0.0, 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)))

    def _quantile(self, u):
        return -np.log1p(-u) / self.rate

    def _isf(self, v):
        return -np.log(v) / self.rate


AnyDistribution = Annotated[Union[Uniform01, Pareto1, Exponential], Field(discriminator="kind")]


def parse_distribution(spec: str) -> Distribution:
    """根据场景文件中的名称构造分布

    Examples:
        >>> parse_distribution("pareto1")
        Pareto1(kind='pareto1')
        >>> parse_distribution("exponential:2.5").rate
        2.5
    """
    text = spec.strip().lower()
    if text == "uniform01":
        return Uniform01()
    if text == "pareto1":
        return Pareto1()
    if text.startswith("exponential"):
        _, _, rate = text.partition(":")
        try:
            value = float(rate) if rate else 1.0
        except ValueError:
            raise DomainError(f"无法解析指数分布的 rate: '{rate}'")
        return Exponential(rate=value)
    logger.error(f"未知的分布名称: {spec}")
    raise DomainError(f"未知的分布名称: '{spec}'")


# 函数式接口

def cdf(d: Distribution, x: ArrayLike) -> ArrayLike:
    return d.cdf(x)


def log_cdf(d: Distribution, x: ArrayLike) -> ArrayLike:
    return d.log_cdf(x)


def survival(d: Distribution, x: ArrayLike) -> ArrayLike:
    return d.survival(x)


def quantile(d: Distribution, u: ArrayLike) -> ArrayLike:
    return d.quantile(u)


def sample(d: Distribution, rng: RngStream, size: Optional[Union[int, Sequence[int]]] = None) -> ArrayLike:
    return d.sample(rng, size)
