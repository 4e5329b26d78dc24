"""场景文件

场景是分节的 INI 文本，节与键都是固定的：

    [scenario]
    name = example3_1
    description = 均匀分布，Power 变换，水平 0.9

    [distribution]
    spec = uniform01

    [events]
    transform = power
    level = 0.9

    [checkers]
    run = bc1, barndorff, bs:1, stepanov:1, ratio, remark
    n_max = 1000000

    [simulation]
    paths = 2000
    n_max = 10000
    seed = 20240601
    record_grid = 10, 100, 1000, 10000

    [output]
    dir = out
    format = both

[events] 中 thresholds（关于 n 的表达式）与 transform + level 二选一。
[checkers] 与 [simulation] 至少出现一个。
"""

import configparser
import logging
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..criteria import CheckerBundle, KRule, RatioCheckConfig, VerdictConfig, parse_checker
from ..criteria.checkers import DEFAULT_N_MAX
from ..distributions import Distribution, parse_distribution
from ..errors import ScenarioConfigError, StrongMaxError, ThresholdMonotonicityError
from ..events.expression import parse_expression
from ..events.thresholds import ThresholdSequence, parse_transform
from ..simulator import SimulationConfig, WindowQuery

logger = logging.getLogger(__name__)


def _canonical(parse, text: str) -> str:
    try:
        return parse(text)
    except StrongMaxError as e:
        raise ValueError(str(e))


class EventsSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    thresholds: Optional[str] = None
    transform: Optional[str] = None
    level: Optional[float] = None
    n_min: Optional[int] = Field(default=None, ge=1)

    @field_validator("thresholds")
    @classmethod
    def _expression(cls, text: Optional[str]) -> Optional[str]:
        return None if text is None else _canonical(lambda t: str(parse_expression(t)), text)

    @field_validator("transform")
    @classmethod
    def _transform(cls, text: Optional[str]) -> Optional[str]:
        return None if text is None else _canonical(lambda t: parse_transform(t).spec, text)

    @model_validator(mode="after")
    def _one_source(self) -> "EventsSection":
        if (self.thresholds is None) == (self.transform is None):
            raise ValueError("thresholds 与 transform 必须且只能给出一个")
        if self.transform is not None and self.level is None:
            raise ValueError("使用 transform 时必须给出 level")
        if self.thresholds is not None and self.level is not None:
            raise ValueError("level 只能与 transform 一起使用")
        return self

    def build(self) -> ThresholdSequence:
        if self.thresholds is not None:
            return ThresholdSequence.explicit(self.thresholds, n_min=self.n_min or 1)
        return ThresholdSequence.from_transform(parse_transform(self.transform), self.level, n_min=self.n_min)


class CheckersSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    run: list[str]
    n_max: int = Field(default=DEFAULT_N_MAX, ge=2)
    ratio_n_grid: list[int] = Field(default_factory=lambda: [100, 1000, 10000])
    ratio_k_max: int = Field(default=8, ge=1)
    ratio_epsilon: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    remark_n_grid: list[int] = Field(default_factory=lambda: [1000, 10000, 100000])
    remark_k_max: int = Field(default=64, ge=1)
    remark_tail_tol: float = Field(default=1e-6, gt=0.0)
    workers: int = Field(default=1, ge=1)

    @field_validator("run")
    @classmethod
    def _known(cls, run: list[str]) -> list[str]:
        parsed = [parse_checker(name) for name in run]
        if len(set(parsed)) != len(parsed):
            raise ValueError(f"判据重复: {run}")
        return run

    def bundle(self, verdict: Optional[VerdictConfig] = None) -> CheckerBundle:
        return CheckerBundle(
            selection=self.run,
            n_max=self.n_max,
            verdict=verdict or VerdictConfig(),
            ratio=RatioCheckConfig(epsilon=self.ratio_epsilon, k_max=self.ratio_k_max, n_grid=self.ratio_n_grid),
            remark_grid=self.remark_n_grid,
            k_rule=KRule(k_max=self.remark_k_max, tail_tol=self.remark_tail_tol),
            workers=self.workers,
        )

    @model_validator(mode="after")
    def _valid_bundle(self) -> "CheckersSection":
        self.bundle()
        return self


class SimulationSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    paths: int = Field(default=1000, ge=1)
    n_max: int = Field(default=10000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    record_grid: list[int] = Field(default_factory=lambda: [10, 100, 1000, 10000])
    workers: int = Field(default=1, ge=1)
    transform: Optional[str] = None
    windows: list[WindowQuery] = Field(default_factory=list)

    @field_validator("transform")
    @classmethod
    def _transform(cls, text: Optional[str]) -> Optional[str]:
        return None if text is None else _canonical(lambda t: parse_transform(t).spec, text)

    def to_config(self, d: Distribution) -> SimulationConfig:
        return SimulationConfig(
            distribution=d,
            n_max=self.n_max,
            paths=self.paths,
            master_seed=self.seed,
            record_grid=self.record_grid,
            workers=self.workers,
            windows=self.windows,
        )


class OutputSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dir: Optional[str] = None
    format: Literal["json", "csv", "both"] = "json"


class ScenarioConfig(BaseModel):
    """一个完整的场景

    Examples:
        config = ScenarioConfig.parse(text)
        config == ScenarioConfig.parse(config.serialize())   # True
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    description: str = ""
    distribution: str
    events: EventsSection
    checkers: Optional[CheckersSection] = None
    simulation: Optional[SimulationSection] = None
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("distribution")
    @classmethod
    def _distribution(cls, text: str) -> str:
        return _canonical(lambda t: parse_distribution(t).spec, text)

    @model_validator(mode="after")
    def _has_work(self) -> "ScenarioConfig":
        if self.checkers is None and self.simulation is None:
            raise ValueError("场景至少需要 [checkers] 或 [simulation] 之一")
        if self.simulation is not None:
            self.simulation.to_config(self.dist)
            if self.simulation.windows:
                stop = max(w.stop for w in self.simulation.windows)
                self.events.build().values(min(w.n for w in self.simulation.windows), stop, check=False)
        return self

    @property
    def dist(self) -> Distribution:
        return parse_distribution(self.distribution)

    def thresholds(self) -> ThresholdSequence:
        return self.events.build()

    def horizon(self) -> int:
        """判据与模拟会用到的最大下标"""
        stops = []
        if self.checkers is not None:
            c = self.checkers
            parsed = [parse_checker(name) for name in c.run]
            stops.append(c.n_max + max((arg for _, arg in parsed), default=0) + 2)
            kinds = {kind for kind, _ in parsed}
            if "ratio" in kinds:
                stops.append(max(c.ratio_n_grid, default=0) + c.ratio_k_max + 1)
            if "remark" in kinds:
                stops.append(max(c.remark_n_grid, default=0) + c.remark_k_max + 1)
        if self.simulation is not None:
            stops.append(self.simulation.n_max)
        return max(stops)

    def checked_thresholds(self) -> ThresholdSequence:
        """构造阈值序列，并在 [n_min, horizon()] 上检查单调性

        Raises:
            ScenarioConfigError: 阈值在该范围内下降
        """
        thresholds = self.thresholds()
        stop = self.horizon()
        if thresholds.n_max is not None:
            stop = min(stop, thresholds.n_max)
        try:
            thresholds.values(thresholds.n_min, stop)
        except ThresholdMonotonicityError as e:
            location = "events.thresholds" if self.events.thresholds is not None else "events.transform"
            logger.error(f"场景 {self.name} 的阈值不单调: {e}")
            raise ScenarioConfigError(f"{e}（检查范围 n ∈ [{thresholds.n_min}, {stop}]）", location=location) from e
        return thresholds

    @classmethod
    def parse(cls, text: str, source: str = "<string>") -> "ScenarioConfig":
        """解析 INI 文本

        Raises:
            ScenarioConfigError: 语法错误、未知的节或键、取值不合法
        """
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as e:
            logger.error(f"场景文件语法错误: {source}: {e}")
            raise ScenarioConfigError(f"场景文件语法错误: {e}")

        unknown = [s for s in parser.sections() if s not in _SECTION_KEYS]
        if unknown:
            raise ScenarioConfigError(f"未知的节: {unknown}", location=unknown[0])
        raw: dict = {}
        for section in parser.sections():
            allowed = _SECTION_KEYS[section]
            values = {}
            for key, value in parser.items(section):
                if key not in allowed:
                    raise ScenarioConfigError(f"未知的键: {key}", location=f"{section}.{key}")
                values[key] = _split(section, key, value)
            raw[section] = values
        return cls._from_sections(raw)

    @classmethod
    def from_file(cls, path: str) -> "ScenarioConfig":
        file = Path(path)
        if not file.is_file():
            raise FileNotFoundError(f"场景文件不存在: {path}")
        return cls.parse(file.read_text(encoding="utf-8"), source=str(file))

    @classmethod
    def _from_sections(cls, raw: dict) -> "ScenarioConfig":
        for required in ("scenario", "distribution", "events"):
            if required not in raw:
                raise ScenarioConfigError(f"缺少 [{required}] 节", location=required)
        data = {
            **raw["scenario"],
            "distribution": raw["distribution"].get("spec"),
            "events": raw["events"],
        }
        for section in ("checkers", "simulation", "output"):
            if section in raw:
                data[section] = raw[section]
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            location = _location(first["loc"])
            logger.error(f"场景取值不合法: {location}: {first['msg']}")
            raise ScenarioConfigError(first["msg"], location=location)

    def serialize(self) -> str:
        """规范化的 INI 文本：节与键按固定顺序，省略未设置的可选项"""
        lines = [
            "[scenario]",
            f"name = {self.name}",
        ]
        if self.description:
            lines.append(f"description = {self.description}")
        lines += ["", "[distribution]", f"spec = {self.distribution}", "", "[events]"]
        lines += _section_lines(self.events)
        for section in ("checkers", "simulation", "output"):
            model = getattr(self, section)
            if model is None:
                continue
            lines += ["", f"[{section}]"] + _section_lines(model)
        return "\n".join(lines) + "\n"


_SECTION_KEYS = {
    "scenario": ("name", "description"),
    "distribution": ("spec",),
    "events": tuple(EventsSection.model_fields),
    "checkers": tuple(CheckersSection.model_fields),
    "simulation": tuple(SimulationSection.model_fields),
    "output": tuple(OutputSection.model_fields),
}

_LIST_KEYS = {
    ("checkers", "run"),
    ("checkers", "ratio_n_grid"),
    ("checkers", "remark_n_grid"),
    ("simulation", "record_grid"),
    ("simulation", "windows"),
}


def _split(section: str, key: str, value: str):
    if (section, key) not in _LIST_KEYS:
        return value.strip()
    items = [item.strip() for item in value.split(",") if item.strip()]
    if key == "windows":
        windows = []
        for item in items:
            n, sep, k = item.partition(":")
            if not sep:
                raise ScenarioConfigError(f"窗口应写作 n:K，实际为 '{item}'", location=f"{section}.{key}")
            windows.append({"n": n.strip(), "K": k.strip()})
        return windows
    return items


def _location(loc: tuple) -> str:
    parts = [str(p) for p in loc if not isinstance(p, int)]
    if not parts:
        return "scenario"
    if parts[0] in ("events", "checkers", "simulation", "output"):
        if len(parts) > 1 and parts[1] in _SECTION_KEYS[parts[0]]:
            return f"{parts[0]}.{parts[1]}"
        return parts[0]
    if parts[0] == "distribution":
        return "distribution.spec"
    return f"scenario.{parts[0]}"


def _format(value) -> str:
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, WindowQuery):
        return f"{value.n}:{value.K}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _section_lines(model: BaseModel) -> list[str]:
    lines = []
    for key in type(model).model_fields:
        value = getattr(model, key)
        if value is None or value == []:
            continue
        lines.append(f"{key} = {_format(value)}")
    return lines
