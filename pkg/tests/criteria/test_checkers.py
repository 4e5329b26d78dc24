import math
import logging

import numpy as np
import pytest
from pydantic import ValidationError

from strongmax.criteria import (
    IO_ZERO,
    RatioCheckConfig,
    Verdict,
    check_barndorff,
    check_bc1,
    check_bs,
    check_ratio,
    check_stepanov,
    decays_to_zero,
)
from strongmax.criteria.checkers import STEPANOV_NOTE
from strongmax.distributions import Pareto1, Uniform01
from strongmax.events import ThresholdSequence, TransformFamily, prob_max_le, staircase_window
from strongmax.events.engine import series_event_then_fail, series_joint, series_max_le

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@pytest.fixture
def power_09():
    """均匀分布 + Power 变换，水平 0.9"""
    return ThresholdSequence.from_transform(TransformFamily.power(), 0.9)


@pytest.fixture
def scale_ln():
    """Pareto1 + 缩放 a_n = ln n / n，水平 2"""
    return ThresholdSequence.from_transform(TransformFamily.scale_by("ln(n)/n"), 2.0, n_min=3)


@pytest.fixture
def scale_ln2():
    """Pareto1 + 缩放 a_n = (ln n)^2 / n，水平 2"""
    return ThresholdSequence.from_transform(TransformFamily.scale_by("ln(n)^2/n"), 2.0, n_min=8)


@pytest.fixture
def harmonic():
    return ThresholdSequence.explicit("1 - 1/n")


class TestDecay:
    """测试侧条件 P(A_n) -> 0"""

    def test_slow_decay_is_accepted(self, power_09):
        check = decays_to_zero(Uniform01(), power_09, 10**4)
        assert check.satisfied
        assert check.last_value == pytest.approx(0.9 ** math.log(10**4), rel=1e-9)

    def test_limit_above_zero(self, harmonic):
        check = decays_to_zero(Uniform01(), harmonic, 10**4)
        assert not check.satisfied, "P(A_n) -> 1/e，不应视为趋于 0"
        assert check.last_value == pytest.approx(math.exp(-1), rel=1e-3)

    def test_identically_zero(self):
        assert decays_to_zero(Pareto1(), ThresholdSequence.constant(0.5), 1000).satisfied

    def test_underflow_counts_as_falling(self):
        check = decays_to_zero(Uniform01(), ThresholdSequence.constant(0.5), 5000)
        assert check.satisfied
        assert check.last_value == 0.0

    def test_tolerance(self, power_09):
        assert not decays_to_zero(Uniform01(), power_09, 10**4, p0_tol=0.1).satisfied


class TestBC1:
    """测试 Σ P(A_n) 判据"""

    def test_pareto_scale_diverges(self, scale_ln):
        report = check_bc1(Pareto1(), scale_ln, (3, 10**5))
        assert report.verdict is Verdict.DIVERGES
        assert report.io_probability is None
        assert report.tail_exponent == pytest.approx(0.5, abs=0.05)
        assert any("无法判定" in note for note in report.notes)

    def test_pareto_strong_scale_converges(self, scale_ln2):
        report = check_bc1(Pareto1(), scale_ln2, (8, 10**4))
        assert report.verdict is Verdict.CONVERGES
        assert report.io_probability == 0.0
        assert report.conclusion == IO_ZERO
        assert report.upper_bound >= report.partial_sum

    def test_below_support(self):
        report = check_bc1(Pareto1(), ThresholdSequence.constant(0.5), (1, 1000))
        assert report.verdict is Verdict.CONVERGES
        assert report.partial_sum == 0.0
        assert report.io_probability == 0.0

    def test_terms(self, scale_ln):
        report = check_bc1(Pareto1(), scale_ln, (3, 2000))
        assert np.allclose(report.terms, np.exp(series_max_le(Pareto1(), scale_ln, 3, 2000)), rtol=1e-14)
        # e^{-n a_n / 2} = n^{-1/2}
        assert report.terms[-1] == pytest.approx(2000 ** -0.5, rel=0.01)

    def test_default_range(self, power_09):
        report = check_bc1(Uniform01(), power_09)
        assert report.n_start == 3
        assert report.indices[-1] == 100_000

    def test_bad_range(self, power_09):
        with pytest.raises(ValueError):
            check_bc1(Uniform01(), power_09, (1, 100))
        with pytest.raises(ValueError):
            check_bc1(Uniform01(), power_09, (50, 50))


class TestBarndorff:
    """测试 P(A_n) -> 0 且 Σ P(A_n A_{n+1}^c) 收敛的判据"""

    @pytest.mark.slow
    def test_power_converges(self, power_09):
        report = check_barndorff(Uniform01(), power_09, (3, 10**6))
        logger.info(f"barndorff: p={report.tail_exponent}, 部分和={report.partial_sum}")
        assert report.verdict is Verdict.CONVERGES
        assert report.side_condition is True
        assert report.io_probability == 0.0
        assert report.conclusion == IO_ZERO

    def test_harmonic_side_condition_fails(self, harmonic):
        report = check_barndorff(Uniform01(), harmonic, (2, 10**4))
        assert report.side_condition is False
        assert report.series_verdict is Verdict.DIVERGES
        assert report.verdict is Verdict.DIVERGES
        assert report.io_probability is None

    def test_converging_series_without_side_condition(self):
        """x_n = 1：级数项全为 0，但 P(A_n) = 1，判据不适用"""
        report = check_barndorff(Uniform01(), ThresholdSequence.constant(1.0), (1, 1000))
        assert report.series_verdict is Verdict.CONVERGES
        assert report.verdict is Verdict.INCONCLUSIVE
        assert report.io_probability is None
        assert any("侧条件" in note for note in report.notes)

    def test_terms(self, harmonic):
        report = check_barndorff(Uniform01(), harmonic, (2, 500))
        assert np.allclose(report.terms, np.exp(series_event_then_fail(Uniform01(), harmonic, 2, 500)), rtol=1e-14)
        assert report.terms[10 - 2] == pytest.approx(0.9**10 / 11, rel=1e-12)


class TestBS:
    """测试固定游程长度的判据"""

    def test_m0_matches_bc1(self, scale_ln, harmonic, power_09):
        for d, seq, n_range in [
            (Pareto1(), scale_ln, (3, 5000)),
            (Uniform01(), harmonic, (2, 5000)),
            (Uniform01(), power_09, (3, 5000)),
        ]:
            bs = check_bs(d, seq, 0, n_range)
            bc1 = check_bc1(d, seq, n_range)
            assert np.array_equal(bs.terms, bc1.terms)
            assert bs.series_verdict is bc1.series_verdict
            assert bs.criterion_id == "bs:0"

    def test_longer_runs_are_smaller(self, harmonic):
        m0 = check_bs(Uniform01(), harmonic, 0, (3, 2000))
        m1 = check_bs(Uniform01(), harmonic, 1, (3, 2000))
        assert np.all(m1.terms < m0.terms)

    def test_pareto_scale_m1_converges(self, scale_ln):
        report = check_bs(Pareto1(), scale_ln, 1, (3, 10**5))
        assert report.verdict is Verdict.CONVERGES
        assert report.side_condition is True
        assert report.io_probability == 0.0

    @pytest.mark.slow
    def test_power_m1_converges(self, power_09):
        report = check_bs(Uniform01(), power_09, 1, (3, 10**6))
        logger.info(f"bs:1: p={report.tail_exponent}")
        assert report.verdict is Verdict.CONVERGES
        assert report.io_probability == 0.0

    def test_negative_m(self, harmonic):
        with pytest.raises(ValueError):
            check_bs(Uniform01(), harmonic, -1, (2, 100))


class TestStepanov:
    """测试三个级数的联合判据"""

    @pytest.mark.slow
    def test_power(self, power_09):
        report = check_stepanov(Uniform01(), power_09, 1, (3, 10**6))
        assert report.sum_prob.verdict is Verdict.DIVERGES
        assert report.sum_joint.verdict is Verdict.DIVERGES
        assert report.sum_gap.verdict is Verdict.CONVERGES
        assert report.verdict is Verdict.CONVERGES
        assert report.io_probability == 0.0
        assert STEPANOV_NOTE in report.notes

    def test_below_support(self):
        report = check_stepanov(Pareto1(), ThresholdSequence.constant(0.5), 1, (1, 1000))
        assert report.verdict is Verdict.INCONCLUSIVE
        assert report.io_probability is None
        assert STEPANOV_NOTE in report.notes

    def test_term_identity(self, power_09):
        """P(A_n) - P(A_n A_{n+1}) = P(A_n A_{n+1}^c)"""
        d = Uniform01()
        report = check_stepanov(d, power_09, 1, (3, 3000))
        gap = report.sum_prob.terms - report.sum_joint.terms
        assert np.allclose(gap, report.sum_gap.terms, rtol=1e-9, atol=0)

    def test_joint_terms(self, power_09):
        report = check_stepanov(Uniform01(), power_09, 2, (3, 500))
        assert np.allclose(report.sum_joint.terms, np.exp(series_joint(Uniform01(), power_09, 3, 500, 2)))
        assert set(report.parts()) == {"prob", "joint", "gap"}
        assert report.criterion_id == "stepanov:2"

    def test_k_must_be_positive(self, power_09):
        with pytest.raises(ValueError):
            check_stepanov(Uniform01(), power_09, 0, (3, 100))


class TestRatioCheck:
    """测试比值判据"""

    def test_power(self, power_09):
        report = check_ratio(Uniform01(), power_09)
        assert report.q_hat is not None and 0.0 <= report.q_hat < 0.01
        row = [q for _, q in report.row_max]
        assert row[0] > row[1] > row[2], "各行的最大比值应随 n 减小"
        assert report.verdict is Verdict.CONVERGES
        assert report.io_probability == 0.0
        assert report.epsilon == pytest.approx((1 - report.q_hat) / 10)
        assert report.bound_n == 10_000
        assert len(report.probe_grid) == 3 * 8

    def test_bound_covers_staircase(self, power_09):
        d = Uniform01()
        report = check_ratio(d, power_09)
        for K in range(0, 9):
            assert report.bound_value >= staircase_window(d, power_09, report.bound_n, K)
        assert report.staircase_sums[-1] == pytest.approx(staircase_window(d, power_09, report.bound_n, 8))
        p_an = math.exp(prob_max_le(d, report.bound_n, power_09(report.bound_n)))
        assert report.bound_value >= report.displayed_bound_value >= p_an

    def test_pareto_scale(self, scale_ln):
        report = check_ratio(Pareto1(), scale_ln)
        assert report.q_hat < 1.0
        assert report.verdict is Verdict.CONVERGES
        assert report.conclusion == IO_ZERO

    def test_constant_thresholds(self):
        config = RatioCheckConfig(n_grid=[10, 20, 50], k_max=4)
        report = check_ratio(Uniform01(), ThresholdSequence.constant(0.5), config)
        assert report.q_hat == 0.0
        assert report.verdict is Verdict.CONVERGES

    def test_undefined_ratio(self):
        config = RatioCheckConfig(n_grid=[10, 20], k_max=2)
        report = check_ratio(Pareto1(), ThresholdSequence.constant(0.5), config)
        assert report.verdict is Verdict.INCONCLUSIVE
        assert report.q_hat is None
        assert report.table()["ratio"].isna().all()

    def test_explicit_epsilon_too_large(self, power_09):
        """ε 必须落在 (0, 1 - q_hat) 内"""
        report = check_ratio(Uniform01(), power_09, RatioCheckConfig(epsilon=1 - 1e-12))
        assert report.q_hat > 1e-12
        assert report.verdict is Verdict.INCONCLUSIVE
        assert report.bound_value is None
        assert any("q_hat + ε" in note for note in report.notes)

    def test_explicit_epsilon_just_below_limit(self, power_09):
        """q_hat 约为 1e-8 时 ε = 0.999999 仍在 (0, 1 - q_hat) 内"""
        report = check_ratio(Uniform01(), power_09, RatioCheckConfig(epsilon=0.999999))
        assert report.q_hat + report.epsilon < 1.0
        assert report.verdict is Verdict.CONVERGES

    def test_side_condition(self, harmonic):
        report = check_ratio(Uniform01(), harmonic)
        assert report.side_condition is False
        assert report.verdict is Verdict.INCONCLUSIVE

    def test_table(self, power_09):
        report = check_ratio(Uniform01(), power_09, RatioCheckConfig(n_grid=[100, 1000], k_max=3))
        table = report.table()
        assert list(table.columns) == ["n", "k", "ratio"]
        assert len(table) == 6
        assert table["k"].tolist() == [1, 2, 3, 1, 2, 3]

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            RatioCheckConfig(n_grid=[100, 100])
        with pytest.raises(ValidationError):
            RatioCheckConfig(n_grid=[])
        with pytest.raises(ValidationError):
            RatioCheckConfig(epsilon=0.0)
