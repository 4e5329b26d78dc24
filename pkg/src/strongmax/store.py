import logging
import os
from itertools import islice
from typing import Any, Iterator, Optional, Tuple

from rocksdict import Options, ReadOptions, Rdict

from .simulator.paths import TrajectoryBatch


class ResultStore:
    """基于 RocksDB 的结果存储

    保存模拟结果与场景报告，内存字典缓存放在数据库前面，重复读取同一键时不再反序列化。
    键的约定：
    - batch:{指纹}          模拟结果，指纹见 SimulationConfig.fingerprint
    - report:{场景名}:{指纹}  场景报告的 JSON 文本

    Examples:
        with ResultStore("path/to/cache") as store:
            batch = simulate_paths(config, store=store)    # 第二次调用直接命中缓存
            store.put_report("example3_1", fp, report.to_json())
            store.history()                                 # ['report:example3_1:...']
    """

    BATCH_PREFIX = "batch:"
    REPORT_PREFIX = "report:"

    def __init__(self, path: str, *, create: bool = True, options: Optional[Options] = None):
        """初始化 ResultStore

        Args:
            path: 数据库目录
            create: 目录不存在时是否创建；为 False 时目录不存在抛出 FileNotFoundError
            options: 可选的 RocksDB 配置
        """
        self.path = path
        if not os.path.exists(self.path):
            if not create:
                raise FileNotFoundError(f"数据库路径不存在: {self.path}")
            os.makedirs(self.path, exist_ok=True)

        self._db = Rdict(self.path, options or Options())
        self._cache: dict = {}
        self._logger = logging.getLogger(__name__)

    @classmethod
    def batch_key(cls, fingerprint: str) -> str:
        return f"{cls.BATCH_PREFIX}{fingerprint}"

    @classmethod
    def report_key(cls, name: str, fingerprint: str) -> str:
        return f"{cls.REPORT_PREFIX}{name}:{fingerprint}"

    def get(self, key: str, default: Any = None) -> Any:
        """先查内存缓存，未命中时从 RocksDB 加载"""
        if key in self._cache:
            return self._cache[key]
        try:
            value = self._db.get(key)
        except KeyError:
            value = None
        if value is None:
            self._logger.debug(f"未找到数据: {key}")
            return default
        self._cache[key] = value
        return value

    def put(self, key: str, value: Any) -> None:
        self._cache[key] = value
        self._db.put(key, value)
        self._logger.debug(f"put: {key}")

    def delete(self, key: str) -> None:
        self._cache.pop(key, None)
        del self._db[key]
        self._logger.debug(f"delete: {key}")

    def clear_cache(self) -> None:
        """清空内存缓存（不清理 RocksDB）"""
        self._cache.clear()

    def iter(self, *, prefix: Optional[str] = None) -> Iterator[Tuple[str, Any]]:
        """按键的字典序遍历，可限定前缀"""
        it = self._db.iter(ReadOptions())
        if prefix:
            it.seek(prefix)
        else:
            it.seek_to_first()
        while it.valid():
            key = it.key()
            if prefix and not key.startswith(prefix):
                break
            yield key, it.value()
            it.next()

    def keys(self, *, prefix: Optional[str] = None, limit: Optional[int] = None) -> list[str]:
        iterator = (k for k, _ in self.iter(prefix=prefix))
        if limit is not None:
            return list(islice(iterator, limit))
        return list(iterator)

    def get_batch(self, key: str) -> Optional[TrajectoryBatch]:
        record = self.get(key)
        if record is None:
            return None
        return TrajectoryBatch.from_record(record)

    def put_batch(self, key: str, batch: TrajectoryBatch) -> None:
        self.put(key, batch.to_record())

    def put_report(self, name: str, fingerprint: str, report_json: str) -> str:
        key = self.report_key(name, fingerprint)
        self.put(key, report_json)
        return key

    def get_report(self, name: str, fingerprint: str) -> Optional[str]:
        return self.get(self.report_key(name, fingerprint))

    def history(self, name: Optional[str] = None) -> list[str]:
        """已保存的报告键，可按场景名过滤"""
        prefix = self.REPORT_PREFIX if name is None else f"{self.REPORT_PREFIX}{name}:"
        return self.keys(prefix=prefix)

    def close(self) -> None:
        """关闭数据库"""
        self._db.close()

    @classmethod
    def destroy(cls, path: str, options: Optional[Options] = None) -> None:
        """删除数据库"""
        Rdict.destroy(path, options or Options())

    def __enter__(self) -> "ResultStore":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()
