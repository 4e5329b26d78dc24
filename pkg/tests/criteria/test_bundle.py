import logging

import pytest
from pydantic import ValidationError

from strongmax.criteria import (
    CheckerBundle,
    KRule,
    RatioCheckConfig,
    RatioReport,
    RemarkTrend,
    SeriesReport,
    StepanovReport,
    Verdict,
    parse_checker,
    run_checker,
    run_checkers,
)
from strongmax.distributions import Pareto1
from strongmax.events import ThresholdSequence, TransformFamily

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@pytest.fixture
def scale_ln():
    return ThresholdSequence.from_transform(TransformFamily.scale_by("ln(n)/n"), 2.0, n_min=3)


@pytest.fixture
def small_bundle():
    return CheckerBundle(
        selection=["remark", "bc1", "bs:1", "stepanov:1", "ratio", "barndorff"],
        n_max=20_000,
        ratio=RatioCheckConfig(n_grid=[100, 1000], k_max=4),
        remark_grid=[100, 1000, 10000],
        k_rule=KRule(k_max=16),
    )


class TestParseChecker:
    """测试判据名称"""

    @pytest.mark.parametrize("name, expected", [
        ("bc1", ("bc1", 0)),
        (" Barndorff ", ("barndorff", 0)),
        ("bs:0", ("bs", 0)),
        ("bs:12", ("bs", 12)),
        ("stepanov:3", ("stepanov", 3)),
        ("ratio", ("ratio", 0)),
        ("remark", ("remark", 0)),
    ])
    def test_known(self, name, expected):
        assert parse_checker(name) == expected

    @pytest.mark.parametrize("name", ["bc2", "bs", "bs:-1", "stepanov:0", "ratio:1", ""])
    def test_unknown(self, name):
        with pytest.raises(ValueError):
            parse_checker(name)


class TestCheckerBundle:
    """测试判据集合"""

    def test_selection_is_normalized(self):
        bundle = CheckerBundle(selection=[" BC1", "Ratio"])
        assert bundle.selection == ["bc1", "ratio"]

    def test_duplicates(self):
        with pytest.raises(ValidationError):
            CheckerBundle(selection=["bc1", "BC1"])

    def test_unknown(self):
        with pytest.raises(ValidationError):
            CheckerBundle(selection=["bc1", "nope"])

    def test_report_types(self, scale_ln, small_bundle):
        d = Pareto1()
        assert isinstance(run_checker("bc1", d, scale_ln, small_bundle), SeriesReport)
        assert isinstance(run_checker("stepanov:1", d, scale_ln, small_bundle), StepanovReport)
        assert isinstance(run_checker("ratio", d, scale_ln, small_bundle), RatioReport)
        assert isinstance(run_checker("remark", d, scale_ln, small_bundle), RemarkTrend)

    def test_order_and_verdicts(self, scale_ln, small_bundle):
        reports = run_checkers(Pareto1(), scale_ln, small_bundle)
        assert list(reports) == small_bundle.selection
        assert reports["bc1"].verdict is Verdict.DIVERGES
        assert reports["ratio"].verdict is Verdict.CONVERGES
        assert reports["bc1"].indices[-1] == 20_000

    def test_workers_do_not_change_results(self, scale_ln, small_bundle):
        serial = run_checkers(Pareto1(), scale_ln, small_bundle)
        parallel = run_checkers(Pareto1(), scale_ln, small_bundle.model_copy(update={"workers": 4}))
        assert list(parallel) == list(serial)
        for name in serial:
            assert parallel[name].model_dump_json() == serial[name].model_dump_json(), f"{name}: 并发结果不一致"
