"""运行最大值轨迹的蒙特卡洛模拟"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..distributions import AnyDistribution
from ..events.thresholds import ThresholdSequence, TransformFamily
from .streams import BLOCK_LANES, GENERATOR_VERSION, BlockStream, block_count, block_lanes

if TYPE_CHECKING:
    from ..store import ResultStore

logger = logging.getLogger(__name__)

SUMMARY_QUANTILES = (0.05, 0.5, 0.95)


class WindowQuery(BaseModel):
    """查询窗口 [n, n+K]：记录每条路径是否有 A_j 发生"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    K: int = Field(ge=0)

    @property
    def stop(self) -> int:
        return self.n + self.K


class SimulationConfig(BaseModel):
    """模拟设置

    Attributes:
        distribution: 观测的分布
        n_max: 每条路径的长度
        paths: 路径数
        master_seed: 主种子，无符号 64 位整数
        record_grid: 记录运行最大值的时刻，严格递增
        workers: 并发处理块的线程数，不影响结果
        windows: 需要记录事件标记的窗口，要求同时给出阈值序列
        chunk: 每次抽取的时刻数，只影响内存，不影响结果
    """

    model_config = ConfigDict(frozen=True)

    distribution: AnyDistribution
    n_max: int = Field(ge=1)
    paths: int = Field(ge=1)
    master_seed: int = Field(ge=0, lt=2**64)
    record_grid: list[int] = Field(default_factory=list)
    workers: int = Field(default=1, ge=1)
    windows: list[WindowQuery] = Field(default_factory=list)
    chunk: int = Field(default=1024, ge=1)

    @model_validator(mode="after")
    def _consistent(self) -> "SimulationConfig":
        grid = self.record_grid
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"record_grid 必须严格递增: {grid}")
        if grid and grid[0] < 1:
            raise ValueError(f"record_grid 的时刻必须 >= 1: {grid}")
        if grid and grid[-1] > self.n_max:
            raise ValueError(f"n_max={self.n_max} 小于 record_grid 的最大值 {grid[-1]}")
        for w in self.windows:
            if w.stop > self.n_max:
                raise ValueError(f"窗口 [{w.n}, {w.stop}] 超出 n_max={self.n_max}")
        return self

    def fingerprint(self, thresholds: Optional[ThresholdSequence] = None) -> str:
        """结果的内容指纹；workers 与 chunk 不影响结果，不计入"""
        payload = self.model_dump_json(exclude={"workers", "chunk"})
        parts = [GENERATOR_VERSION, payload]
        if self.windows and thresholds is not None:
            parts.append(thresholds.label)
        return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()


class TrajectoryBatch(BaseModel):
    """一批路径在记录时刻上的运行最大值

    values 的形状为 (paths, len(record_grid))，window_flags 的形状为 (paths, len(windows))。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    record_grid: list[int]
    paths: int
    master_seed: int
    distribution: str
    generator_version: str = GENERATOR_VERSION
    windows: list[WindowQuery] = Field(default_factory=list)
    transformed_by: Optional[str] = None
    values: np.ndarray
    window_flags: np.ndarray

    def summary(self) -> pd.DataFrame:
        """每个记录时刻一行：n, mean, q05, q50, q95"""
        table = pd.DataFrame({"n": self.record_grid, "mean": self.values.mean(axis=0)})
        for q in SUMMARY_QUANTILES:
            table[f"q{int(round(q * 100)):02d}"] = np.quantile(self.values, q, axis=0)
        return table

    def window_frequencies(self) -> list[float]:
        """各窗口中 A_j 至少发生一次的路径比例"""
        return [float(v) for v in self.window_flags.mean(axis=0)] if self.windows else []

    def metadata(self) -> dict:
        return self.model_dump(exclude={"values", "window_flags"}, mode="json")

    def to_record(self) -> dict:
        """写入存储的形式"""
        return {"meta": self.metadata(), "values": self.values, "window_flags": self.window_flags}

    @classmethod
    def from_record(cls, record: dict) -> "TrajectoryBatch":
        return cls(**record["meta"], values=record["values"], window_flags=record["window_flags"])


def _simulate_block(
    config: SimulationConfig, block: int, window_x: list[np.ndarray]
) -> tuple[int, np.ndarray, np.ndarray]:
    lanes = block_lanes(config.paths, block)
    stream = BlockStream(config.distribution, config.master_seed, block)
    grid = np.asarray(config.record_grid, dtype=int)
    values = np.empty((lanes, len(grid)))
    flags = np.zeros((lanes, len(config.windows)), dtype=bool)
    running = np.full(BLOCK_LANES, -np.inf)

    t = 0
    while t < config.n_max:
        steps = min(config.chunk, config.n_max - t)
        m = np.maximum.accumulate(stream.next_rows(steps), axis=0)
        np.maximum(m, running, out=m)

        # 本段覆盖时刻 t+1 .. t+steps
        hit = (grid > t) & (grid <= t + steps)
        if hit.any():
            values[:, hit] = m[grid[hit] - t - 1, :lanes].T
        for i, w in enumerate(config.windows):
            lo, hi = max(w.n, t + 1), min(w.stop, t + steps)
            if lo > hi:
                continue
            rows = m[lo - t - 1:hi - t, :lanes]
            x = window_x[i][lo - w.n:hi - w.n + 1, None]
            flags[:, i] |= np.any(rows <= x, axis=0)

        running = m[-1].copy()
        t += steps
    return block, values, flags


def simulate_paths(
    config: SimulationConfig,
    thresholds: Optional[ThresholdSequence] = None,
    store: Optional["ResultStore"] = None,
) -> TrajectoryBatch:
    """模拟 config.paths 条路径的运行最大值

    块之间相互独立，按 workers 分配到线程，结果按块序号合并。
    给出 store 时先按指纹查找已有结果，未命中则模拟后写入。

    Raises:
        ValueError: 给出了查询窗口却没有阈值序列
    """
    if config.windows and thresholds is None:
        raise ValueError("模拟设置包含查询窗口时必须提供阈值序列")

    key = None
    if store is not None:
        key = store.batch_key(config.fingerprint(thresholds))
        cached = store.get_batch(key)
        if cached is not None:
            logger.info(f"使用已缓存的模拟结果: {key}")
            return cached

    window_x = [thresholds.values(w.n, w.stop) for w in config.windows] if config.windows else []
    blocks = range(block_count(config.paths))
    logger.debug(f"模拟 {config.paths} 条路径 x {config.n_max} 步，{len(blocks)} 个块，{config.workers} 个线程")
    if config.workers == 1:
        results = [_simulate_block(config, b, window_x) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(lambda b: _simulate_block(config, b, window_x), blocks))
    results.sort(key=lambda r: r[0])

    batch = TrajectoryBatch(
        record_grid=list(config.record_grid),
        paths=config.paths,
        master_seed=config.master_seed,
        distribution=config.distribution.spec,
        windows=list(config.windows),
        values=np.concatenate([r[1] for r in results], axis=0),
        window_flags=np.concatenate([r[2] for r in results], axis=0),
    )
    if store is not None:
        store.put_batch(key, batch)
    return batch


def transform_trajectory(batch: TrajectoryBatch, family: TransformFamily) -> TrajectoryBatch:
    """逐点应用 φ_n；Power 在记录时刻包含 n = 1 时抛出 DomainError"""
    grid = np.asarray(batch.record_grid, dtype=float)
    values = np.asarray(family.apply(grid[None, :], batch.values))
    return batch.model_copy(update={"values": values, "transformed_by": family.spec})
