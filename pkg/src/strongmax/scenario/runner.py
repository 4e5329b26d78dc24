"""运行场景并输出报告"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Optional, Union

import pandas as pd
from pydantic import BaseModel, Field, PrivateAttr

from ..criteria import CriterionReport, RatioReport, RemarkTrend, SeriesReport, StepanovReport, run_checkers
from ..events.thresholds import parse_transform
from ..simulator import GENERATOR_VERSION, simulate_paths, transform_trajectory
from ..store import ResultStore
from .config import ScenarioConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"


class SimulationSummary(BaseModel):
    """模拟部分的报告：每个记录时刻的均值与分位数，以及窗口事件的频率"""

    paths: int
    n_max: int
    master_seed: int
    generator_version: str
    fingerprint: str
    transformed_by: Optional[str] = None
    summary: list[dict]
    windows: list[tuple[int, int, float]] = Field(default_factory=list)


class Report(BaseModel):
    """场景报告

    criteria 按场景中判据的顺序排列，键为判据名称（如 bc1、bs:1、stepanov:1）。
    """

    schema_version: str = SCHEMA_VERSION
    scenario: str
    description: str = ""
    distribution: str
    thresholds: str
    n_min: int
    fingerprint: str
    config: str
    criteria: dict[str, Union[StepanovReport, RatioReport, RemarkTrend, SeriesReport]] = Field(default_factory=dict)
    simulation: Optional[SimulationSummary] = None

    _tables: dict = PrivateAttr(default_factory=dict)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def tables(self) -> dict[str, pd.DataFrame]:
        """CSV 表：{文件名主干: DataFrame}"""
        return dict(self._tables)

    def write(self, out_dir: Union[str, Path], fmt: str = "json") -> list[Path]:
        """写出 report.json 和/或各判据的 CSV 表，返回写出的文件"""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt in ("json", "both"):
            path = out / "report.json"
            path.write_text(self.to_json(), encoding="utf-8")
            written.append(path)
        if fmt in ("csv", "both"):
            for stem, table in self._tables.items():
                path = out / f"{stem}.csv"
                table.to_csv(path, index=False, lineterminator="\n")
                written.append(path)
        logger.info(f"报告已写出到 {out}: {[p.name for p in written]}")
        return written


def _stem(name: str) -> str:
    return name.replace(":", "_")


def _collect_tables(criteria: dict[str, CriterionReport]) -> dict:
    tables = {}
    for name, report in criteria.items():
        if isinstance(report, StepanovReport):
            for part, sub in report.parts().items():
                tables[f"{_stem(name)}_{part}"] = sub.table()
        else:
            tables[_stem(name)] = report.table()
    return tables


def scenario_fingerprint(config: ScenarioConfig) -> str:
    text = f"{GENERATOR_VERSION}\n{config.serialize()}"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_scenario(
    config: ScenarioConfig,
    *,
    out_dir: Optional[Union[str, Path]] = None,
    fmt: Optional[str] = None,
    store: Optional[ResultStore] = None,
) -> Report:
    """运行场景中的判据与模拟

    Args:
        config: 场景
        out_dir: 输出目录，默认取场景 [output] 中的 dir，两者都没有时不写文件
        fmt: json | csv | both，默认取场景中的设置
        store: 可选的结果存储，模拟结果与报告都会写入
    """
    d = config.dist
    thresholds = config.checked_thresholds()
    fingerprint = scenario_fingerprint(config)
    logger.info(f"运行场景 {config.name}: {d.spec}, 阈值 {thresholds.label}")

    criteria = {}
    if config.checkers is not None:
        criteria = run_checkers(d, thresholds, config.checkers.bundle())

    simulation = None
    tables = _collect_tables(criteria)
    if config.simulation is not None:
        section = config.simulation
        sim_config = section.to_config(d)
        batch = simulate_paths(sim_config, thresholds if sim_config.windows else None, store)
        if section.transform is not None:
            batch = transform_trajectory(batch, parse_transform(section.transform))
        summary = batch.summary()
        simulation = SimulationSummary(
            paths=batch.paths,
            n_max=sim_config.n_max,
            master_seed=batch.master_seed,
            generator_version=batch.generator_version,
            fingerprint=sim_config.fingerprint(thresholds),
            transformed_by=batch.transformed_by,
            summary=json.loads(summary.to_json(orient="records")),
            windows=[(w.n, w.K, f) for w, f in zip(batch.windows, batch.window_frequencies())],
        )
        tables["trajectory_summary"] = summary

    report = Report(
        scenario=config.name,
        description=config.description,
        distribution=d.spec,
        thresholds=thresholds.label,
        n_min=thresholds.n_min,
        fingerprint=fingerprint,
        config=config.serialize(),
        criteria=criteria,
        simulation=simulation,
    )
    report._tables = tables

    if store is not None:
        key = store.put_report(config.name, fingerprint, report.to_json())
        logger.info(f"报告已保存: {key}")
    out_dir = out_dir if out_dir is not None else config.output.dir
    if out_dir is not None:
        report.write(out_dir, fmt or config.output.format)
    return report
