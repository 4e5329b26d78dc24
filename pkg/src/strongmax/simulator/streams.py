"""按块划分的 Philox 随机流

路径按 1024 条一组划分为块，块 b 使用 Philox(SeedSequence(master_seed, spawn_key=(b,)))。
路径 p 的第 t 个观测取块流中位置 (t-1)*1024 + (p mod 1024) 的均匀数，
因此任一路径的取值只由 (master_seed, p, t) 决定，与路径总数、n_max、分块和线程数无关。
"""

import numpy as np

from ..distributions import Distribution, RngStream

GENERATOR_VERSION = "philox4x64-block1024-v1"
BLOCK_LANES = 1024


def block_count(paths: int) -> int:
    return -(-paths // BLOCK_LANES)


def block_lanes(paths: int, block: int) -> int:
    """块 block 中实际使用的路径数"""
    return min(BLOCK_LANES, paths - block * BLOCK_LANES)


class BlockStream:
    """一个块的观测流，每次按整行（全部 1024 条通道）抽取

    即使块内只用到部分路径也抽满整行，流中的位置才与路径数无关。
    """

    def __init__(self, d: Distribution, master_seed: int, block: int):
        self.distribution = d
        self.block = block
        self._rng = RngStream.from_seed(master_seed, block)
        self.position = 0

    def next_rows(self, steps: int) -> np.ndarray:
        """接下来 steps 个时刻的观测，形状 (steps, 1024)"""
        v = self._rng.upper_uniforms((steps, BLOCK_LANES))
        self.position += steps
        return np.asarray(self.distribution.isf(v), dtype=float)
