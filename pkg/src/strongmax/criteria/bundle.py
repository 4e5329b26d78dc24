"""场景的判据集合与调度"""

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from typing import Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..distributions import Distribution
from ..events.thresholds import ThresholdSequence
from .checkers import (
    DEFAULT_N_MAX,
    RatioCheckConfig,
    RatioReport,
    SeriesReport,
    StepanovReport,
    check_barndorff,
    check_bc1,
    check_bs,
    check_ratio,
    check_stepanov,
)
from .remark import KRule, RemarkConfig, RemarkTrend, remark_limit
from .series import VerdictConfig

logger = logging.getLogger(__name__)

CriterionReport = Union[SeriesReport, StepanovReport, RatioReport, RemarkTrend]

CHECKER_PATTERN = re.compile(r"^(bc1|barndorff|ratio|remark)$|^(bs):(\d+)$|^(stepanov):(\d+)$")


def parse_checker(name: str) -> tuple[str, int]:
    """'bs:2' -> ('bs', 2)；不带参数的判据参数为 0

    Raises:
        ValueError: 未知的判据名称，或 stepanov 的 k < 1
    """
    text = name.strip().lower()
    match = CHECKER_PATTERN.match(text)
    if not match:
        raise ValueError(f"未知的判据: '{name}'（可选 bc1, barndorff, bs:<m>, stepanov:<k>, ratio, remark）")
    if match.group(1):
        return match.group(1), 0
    if match.group(2):
        return "bs", int(match.group(3))
    k = int(match.group(5))
    if k < 1:
        raise ValueError(f"stepanov 的 k 必须 >= 1: '{name}'")
    return "stepanov", k


class CheckerBundle(BaseModel):
    """一个场景要运行的判据及其参数

    Attributes:
        selection: 判据名称，按给出的顺序运行与输出
        n_max: 级数判据计算到的最大 n
        workers: 并发运行判据的线程数
    """

    model_config = ConfigDict(frozen=True)

    selection: list[str]
    n_max: int = Field(default=DEFAULT_N_MAX, ge=2)
    verdict: VerdictConfig = Field(default_factory=VerdictConfig)
    ratio: RatioCheckConfig = Field(default_factory=RatioCheckConfig)
    remark_grid: list[int] = Field(default_factory=lambda: [1000, 10000, 100000])
    k_rule: KRule = Field(default_factory=KRule)
    remark: RemarkConfig = Field(default_factory=RemarkConfig)
    workers: int = Field(default=1, ge=1)

    @field_validator("selection")
    @classmethod
    def _known(cls, selection: list[str]) -> list[str]:
        names = [name.strip().lower() for name in selection]
        for name in names:
            parse_checker(name)
        if len(set(names)) != len(names):
            raise ValueError(f"判据重复: {names}")
        return names


def run_checker(
    name: str, d: Distribution, thresholds: ThresholdSequence, bundle: CheckerBundle
) -> CriterionReport:
    kind, arg = parse_checker(name)
    n_range = (thresholds.n_min, bundle.n_max)
    if kind == "bc1":
        return check_bc1(d, thresholds, n_range, bundle.verdict)
    if kind == "barndorff":
        return check_barndorff(d, thresholds, n_range, bundle.verdict)
    if kind == "bs":
        return check_bs(d, thresholds, arg, n_range, bundle.verdict)
    if kind == "stepanov":
        return check_stepanov(d, thresholds, arg, n_range, bundle.verdict)
    if kind == "ratio":
        return check_ratio(d, thresholds, bundle.ratio)
    return remark_limit(d, thresholds, bundle.remark_grid, bundle.k_rule, bundle.remark)


def run_checkers(
    d: Distribution, thresholds: ThresholdSequence, bundle: CheckerBundle
) -> dict[str, CriterionReport]:
    """按 selection 的顺序返回 {判据名称: 报告}

    判据之间互不依赖，workers > 1 时并发运行，共享阈值序列的缓存。
    """
    if bundle.workers == 1 or len(bundle.selection) == 1:
        return {name: run_checker(name, d, thresholds, bundle) for name in bundle.selection}
    with ThreadPoolExecutor(max_workers=bundle.workers) as pool:
        futures = {name: pool.submit(run_checker, name, d, thresholds, bundle) for name in bundle.selection}
        return {name: futures[name].result() for name in bundle.selection}
