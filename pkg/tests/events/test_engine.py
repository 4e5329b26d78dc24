import math
import logging

import numpy as np
import pytest

from strongmax.distributions import Exponential, Pareto1, Uniform01
from strongmax.errors import DomainError, ThresholdMonotonicityError, UndefinedRatioError
from strongmax.events import (
    ThresholdSequence,
    TransformFamily,
    prob_event_then_fail,
    prob_joint,
    prob_max_le,
    prob_no_event,
    prob_run,
    prob_staircase,
    ratio_table,
    run_ratio,
    run_terms,
    staircase_terms,
    staircase_window,
    union_window,
)
from strongmax.events.engine import series_event_then_fail, series_joint, series_max_le, series_run
from strongmax.events.logspace import log1mexp

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@pytest.fixture
def table():
    """x_2, x_3, x_4 = 0.5, 0.6, 0.7"""
    return ThresholdSequence.from_table({2: 0.5, 3: 0.6, 4: 0.7})


@pytest.fixture
def harmonic():
    return ThresholdSequence.explicit("1 - 1/n")


@pytest.fixture
def power_09():
    return ThresholdSequence.from_transform(TransformFamily.power(), 0.9)


@pytest.fixture
def scale_ln():
    return ThresholdSequence.from_transform(TransformFamily.scale_by("ln(n)/n"), 2.0, n_min=3)


class TestLogSpace:
    """测试对数空间工具"""

    def test_log1mexp(self):
        assert log1mexp(0.0) == -math.inf
        assert log1mexp(1e-20) == pytest.approx(math.log(1e-20), rel=1e-12)
        assert log1mexp(50.0) == pytest.approx(-math.exp(-50.0), rel=1e-12)


class TestMaxLe:
    """测试 P(M_n <= x)"""

    def test_uniform(self):
        assert prob_max_le(Uniform01(), 5, 0.9) == pytest.approx(math.log(0.59049), rel=1e-14)

    def test_power_closed_form(self, power_09):
        """Uniform01 + Power：P(M_n <= x_n) = level^{ln n}"""
        for level in (0.5, 0.9, 0.99):
            seq = ThresholdSequence.from_transform(TransformFamily.power(), level)
            for n in (10, 100, 1000):
                got = math.exp(prob_max_le(Uniform01(), n, seq(n)))
                assert got == pytest.approx(level ** math.log(n), rel=1e-12), f"level={level}, n={n}"
        expected = math.exp(math.log(0.9) * math.log(100))
        assert math.exp(prob_max_le(Uniform01(), 100, power_09(100))) == pytest.approx(expected, rel=1e-12)
        assert abs(expected - 0.615572) < 1e-6

    def test_pareto_scale(self, scale_ln):
        """Pareto1, a_n = ln n / n, 水平 2：n=100 时 (1 - a_n/2)^100"""
        a = math.log(100) / 100
        got = prob_max_le(Pareto1(), 100, scale_ln(100))
        assert got == pytest.approx(100 * math.log1p(-a / 2), rel=1e-12)
        assert abs(math.exp(got) - 0.0973) < 1e-4

    @pytest.mark.parametrize("scale", ["ln(n)/n", "ln(n)^2/n"])
    @pytest.mark.parametrize("level", [1.0, 2.0, 5.0])
    def test_transform_consistency_scale(self, scale, level):
        """P(a_n M_n <= level) 与 Pareto 的直接公式 (1 - a_n/level)^n 一致"""
        seq = ThresholdSequence.from_transform(TransformFamily.scale_by(scale), level, n_min=8)
        for n in (10, 100, 1000):
            a = math.log(n) ** (2 if "^2" in scale else 1) / n
            direct = n * math.log1p(-a / level)
            assert prob_max_le(Pareto1(), n, seq(n)) == pytest.approx(direct, rel=1e-12), f"n={n}"

    def test_transform_consistency_exponential(self):
        """a_n = 1/n，水平 2：P(M_n <= 2n) = (1 - e^{-2n r})^n"""
        seq = ThresholdSequence.from_transform(TransformFamily.scale_by("1/n"), 2.0)
        d = Exponential(0.01)
        for n in (10, 100, 1000):
            direct = n * math.log1p(-math.exp(-0.01 * 2 * n))
            assert prob_max_le(d, n, seq(n)) == pytest.approx(direct, rel=1e-12), f"n={n}"

    def test_below_support(self):
        assert prob_max_le(Pareto1(), 10, 0.5) == -math.inf

    def test_far_tail_does_not_round_to_one(self):
        value = prob_max_le(Pareto1(), 1000, 1e12)
        assert value == pytest.approx(1000 * -1e-12, rel=1e-9)
        assert value < 0

    @pytest.mark.parametrize("n", [0, -1, 2.5])
    def test_bad_index(self, n):
        with pytest.raises(DomainError):
            prob_max_le(Uniform01(), n, 0.5)


class TestRun:
    """测试游程概率"""

    def test_table_values(self, table):
        d = Uniform01()
        assert math.exp(prob_run(d, table, 2, 0)) == pytest.approx(0.25)
        assert math.exp(prob_run(d, table, 2, 1)) == pytest.approx(0.066)
        assert math.exp(prob_run(d, table, 2, 2)) == pytest.approx(0.0714)

    def test_staircase_value(self, table):
        assert math.exp(prob_staircase(Uniform01(), table, 2, 2)) == pytest.approx(0.0077)

    def test_union_window(self, table):
        d = Uniform01()
        assert union_window(d, table, 2, 2) == pytest.approx(0.3874)
        assert staircase_window(d, table, 2, 2) == pytest.approx(0.3237)
        assert union_window(d, table, 2, 0) == pytest.approx(0.25)

    def test_run_terms_agree_with_prob_run(self, harmonic):
        d = Uniform01()
        terms = run_terms(d, harmonic, 10, 5)
        assert [t.k for t in terms] == list(range(6))
        for t in terms:
            assert t.log_prob == pytest.approx(prob_run(d, harmonic, 10, t.k), rel=1e-13)

    def test_power_k1_closed_form(self, power_09):
        """k=1: x_{n+1}^{n+1} - x_n^n x_{n+1}"""
        d = Uniform01()
        for n in (3, 10, 57, 400, 1000):
            x0, x1 = power_09(n), power_09(n + 1)
            closed = x1 ** (n + 1) - x0 ** n * x1
            assert math.exp(prob_run(d, power_09, n, 1)) == pytest.approx(closed, rel=1e-10), f"n={n}"

    def test_staircase_below_run(self, harmonic):
        """k <= 1 时阶梯与游程相同，k >= 2 时阶梯不超过游程"""
        for d, seq, n in [(Uniform01(), harmonic, 5), (Uniform01(), harmonic, 50), (Exponential(1.0), ThresholdSequence.explicit("ln(n)"), 20)]:
            runs = [t.log_prob for t in run_terms(d, seq, n, 6)]
            stairs = staircase_terms(d, seq, n, 6)
            assert runs[0] == pytest.approx(stairs[0], rel=1e-13)
            assert runs[1] == pytest.approx(stairs[1], rel=1e-13)
            assert np.all(stairs[2:] <= np.array(runs[2:]) + 1e-12)

    def test_partition_identity(self, harmonic):
        """Σ_k P(首次发生在 n+k) + P(都不发生) = 1"""
        for d, seq, n in [(Uniform01(), harmonic, 5), (Pareto1(), ThresholdSequence.explicit("2*n/ln(n)", n_min=3), 10)]:
            for K in (0, 2, 5):
                total = sum(t.prob for t in run_terms(d, seq, n, K)) + math.exp(prob_no_event(d, seq, n, K))
                assert total == pytest.approx(1.0, abs=1e-12), f"n={n}, K={K}"

    def test_disjoint_sum_bounded(self, harmonic):
        assert union_window(Uniform01(), harmonic, 10, 40) <= 1.0 + 1e-12

    def test_equal_thresholds_give_empty_event(self):
        seq = ThresholdSequence.constant(0.5)
        assert prob_run(Uniform01(), seq, 5, 1) == -math.inf
        assert prob_run(Uniform01(), seq, 5, 3) == -math.inf
        assert union_window(Uniform01(), seq, 5, 3) == pytest.approx(0.5 ** 5)

    def test_monotonicity_violation(self):
        with pytest.raises(ThresholdMonotonicityError):
            prob_run(Uniform01(), ThresholdSequence.explicit("1/n"), 2, 2)

    def test_negative_k(self, harmonic):
        with pytest.raises(DomainError):
            prob_run(Uniform01(), harmonic, 5, -1)


class TestRatio:
    """测试闭式游程比值"""

    def test_harmonic_value(self, harmonic):
        assert run_ratio(Uniform01(), harmonic, 10, 1) == pytest.approx(121 / 15840, rel=1e-12)

    def test_matches_staircase_quotient(self, harmonic, power_09, scale_ln):
        for d, seq, n in [(Uniform01(), harmonic, 10), (Uniform01(), power_09, 100), (Pareto1(), scale_ln, 1000)]:
            stairs = staircase_terms(d, seq, n, 6)
            for k in range(1, 6):
                quotient = math.exp(stairs[k + 1] - stairs[k])
                assert run_ratio(d, seq, n, k) == pytest.approx(quotient, rel=1e-9), f"{d.spec} n={n} k={k}"

    def test_finite_when_terms_underflow(self):
        """阶梯项在线性空间下溢为 0 时，比值仍然有限且与对数差一致"""
        d = Uniform01()
        seq = ThresholdSequence.explicit("0.5 - 1/n", n_min=3)
        stairs = staircase_terms(d, seq, 5000, 3)
        assert np.all(np.exp(stairs) == 0.0)
        assert np.all(np.isfinite(stairs))
        ratio = run_ratio(d, seq, 5000, 2)
        assert 0.0 < ratio < 1e-6
        assert ratio == pytest.approx(math.exp(stairs[3] - stairs[2]), rel=1e-9)

    def test_undefined(self):
        seq = ThresholdSequence.constant(0.5)
        with pytest.raises(UndefinedRatioError):
            run_ratio(Pareto1(), seq, 10, 1)
        assert np.all(np.isnan(ratio_table(Pareto1(), seq, 10, 3)))

    def test_table_matches_scalar(self, harmonic):
        row = ratio_table(Uniform01(), harmonic, 20, 5)
        assert row.shape == (5,)
        for k in range(1, 6):
            assert row[k - 1] == pytest.approx(run_ratio(Uniform01(), harmonic, 20, k), rel=1e-14)

    def test_k_must_be_positive(self, harmonic):
        with pytest.raises(DomainError):
            run_ratio(Uniform01(), harmonic, 10, 0)


class TestPairs:
    """测试 P(A_n A_{n+1}^c) 与 P(A_n A_{n+k})"""

    def test_event_then_fail(self, harmonic):
        got = math.exp(prob_event_then_fail(Uniform01(), harmonic, 10))
        assert got == pytest.approx(0.9**10 / 11, rel=1e-12)
        assert abs(got - 0.0316980) < 1e-7

    def test_event_then_fail_at_right_endpoint(self):
        seq = ThresholdSequence.from_table({1: 0.5, 2: 1.0})
        assert prob_event_then_fail(Uniform01(), seq, 1) == -math.inf

    def test_joint(self, table):
        assert math.exp(prob_joint(Uniform01(), table, 2, 2)) == pytest.approx(0.1225)
        assert math.exp(prob_joint(Uniform01(), table, 2, 1)) == pytest.approx(0.25 * 0.6)

    def test_term_identity(self, harmonic, power_09):
        """P(A_n) - P(A_n A_{n+1}) = P(A_n A_{n+1}^c)"""
        for d, seq, n in [(Uniform01(), harmonic, 7), (Uniform01(), power_09, 500)]:
            lhs = math.exp(prob_max_le(d, n, seq(n))) - math.exp(prob_joint(d, seq, n, 1))
            rhs = math.exp(prob_event_then_fail(d, seq, n))
            assert lhs == pytest.approx(rhs, rel=1e-9)


class TestSeries:
    """测试关于 n 向量化的级数项"""

    def test_scalar_agreement(self, power_09):
        d = Uniform01()
        n = np.arange(3, 204)
        cases = [
            (series_max_le(d, power_09, 3, 203), [prob_max_le(d, int(i), power_09(int(i))) for i in n]),
            (series_event_then_fail(d, power_09, 3, 203), [prob_event_then_fail(d, power_09, int(i)) for i in n]),
            (series_joint(d, power_09, 3, 203, 2), [prob_joint(d, power_09, int(i), 2) for i in n]),
            (series_run(d, power_09, 3, 203, 3), [prob_run(d, power_09, int(i), 3) for i in n]),
        ]
        for vector, scalar in cases:
            assert np.allclose(vector, scalar, rtol=1e-12)

    def test_run_zero_is_max_le(self, harmonic):
        d = Uniform01()
        assert np.array_equal(series_run(d, harmonic, 2, 500, 0), series_max_le(d, harmonic, 2, 500))

    def test_bad_arguments(self, harmonic):
        with pytest.raises(DomainError):
            series_joint(Uniform01(), harmonic, 2, 10, 0)
        with pytest.raises(DomainError):
            series_run(Uniform01(), harmonic, 2, 10, -1)
