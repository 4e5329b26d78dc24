"""内置场景目录"""

from pydantic import BaseModel, ConfigDict

from ..errors import ScenarioConfigError
from .config import ScenarioConfig


class BuiltinScenario(BaseModel):
    """目录条目

    Attributes:
        name: 场景名
        description: 一句话说明
        anchor: 该场景复现的结论
        transform: 阈值的来源（变换族或显式表达式）
        text: 场景文件文本
    """

    model_config = ConfigDict(frozen=True)

    name: str
    description: str
    anchor: str
    transform: str
    text: str

    def config(self) -> ScenarioConfig:
        return ScenarioConfig.parse(self.text, source=f"<builtin:{self.name}>")


_EXAMPLE_3_1 = """\
[scenario]
name = example3_1
description = 均匀分布，Power 变换，水平 0.9：x_n = 0.9^(ln n / n)

[distribution]
spec = uniform01

[events]
transform = power
level = 0.9

[checkers]
run = bc1, barndorff, bs:1, stepanov:1, ratio, remark
n_max = 1000000
ratio_n_grid = 100, 1000, 10000
ratio_k_max = 8
remark_n_grid = 1000, 10000, 100000

[simulation]
paths = 2000
n_max = 10000
seed = 20240601
record_grid = 10, 100, 1000, 10000
transform = power
"""

_EXAMPLE_3_2 = """\
[scenario]
name = example3_2
description = Pareto(1) 分布，缩放 a_n = ln n / n，水平 2：x_n = 2n / ln n

[distribution]
spec = pareto1

[events]
transform = scale:ln(n)/n
level = 2
n_min = 3

[checkers]
run = bc1, barndorff, bs:1, ratio, remark
n_max = 100000
ratio_n_grid = 100, 1000, 10000
ratio_k_max = 8
remark_n_grid = 1000, 10000, 100000
"""

_EXAMPLE_3_2_STRONG = """\
[scenario]
name = example3_2_strong
description = Pareto(1) 分布，缩放 a_n = (ln n)^2 / n，水平 2：Σ P(A_n) 收敛

[distribution]
spec = pareto1

[events]
transform = scale:ln(n)^2/n
level = 2
n_min = 8

[checkers]
run = bc1, barndorff, ratio
n_max = 100000
"""

_UNIFORM_HARMONIC = """\
[scenario]
name = uniform_harmonic
description = 均匀分布，x_n = 1 - 1/n：P(A_n) 趋于 1/e 而不趋于 0

[distribution]
spec = uniform01

[events]
thresholds = 1 - 1/n

[checkers]
run = bc1, barndorff, bs:1, ratio, remark
n_max = 100000

[simulation]
paths = 4096
n_max = 1000
seed = 7
record_grid = 10, 100, 1000
windows = 100:5, 500:5
"""

_CATALOG = (
    BuiltinScenario(
        name="example3_1",
        description="均匀分布，Power 变换，水平 0.9",
        anchor="Σ P(A_n) 发散，但比值判据与 Σ P(A_n A_{n+1}^c) 都给出 P(A_n i.o.) = 0；P(A_n) = 0.9^(ln n)",
        transform="power",
        text=_EXAMPLE_3_1,
    ),
    BuiltinScenario(
        name="example3_2",
        description="Pareto(1)，缩放 a_n = ln n / n，水平 2",
        anchor="Σ P(A_n) 发散（项 ≍ n^(-1/2)），比值判据仍给出 P(A_n i.o.) = 0",
        transform="scale:ln(n)/n",
        text=_EXAMPLE_3_2,
    ),
    BuiltinScenario(
        name="example3_2_strong",
        description="Pareto(1)，缩放 a_n = (ln n)^2 / n，水平 2",
        anchor="Σ P(A_n) 收敛（项 ≍ n^(-ln n / 2)），第一判据直接给出 P(A_n i.o.) = 0",
        transform="scale:ln(n)^2/n",
        text=_EXAMPLE_3_2_STRONG,
    ),
    BuiltinScenario(
        name="uniform_harmonic",
        description="均匀分布，x_n = 1 - 1/n",
        anchor="P(A_n) -> 1/e，侧条件不成立，各判据均无法判定，S_n 稳定在 1/e 附近",
        transform="identity (thresholds = 1 - 1/n)",
        text=_UNIFORM_HARMONIC,
    ),
)


def list_builtins() -> list[BuiltinScenario]:
    """按固定顺序返回内置场景"""
    return list(_CATALOG)


def get_builtin(name: str) -> BuiltinScenario:
    for entry in _CATALOG:
        if entry.name == name:
            return entry
    known = ", ".join(e.name for e in _CATALOG)
    raise ScenarioConfigError(f"未知的内置场景: '{name}'（可选 {known}）", location="builtin")
