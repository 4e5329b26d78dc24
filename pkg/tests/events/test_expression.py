import math
import logging

import numpy as np
import pytest

from strongmax.errors import ExpressionError
from strongmax.events.expression import ExpressionParser, NodeType, parse_expression

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@pytest.fixture
def parser():
    return ExpressionParser()


class TestTokenize:
    """测试记号切分"""

    def test_basic_tokens(self, parser):
        tokens = parser.tokenize("ln(n)/n")
        kinds = [t.kind for t in tokens]
        assert kinds == ["name", "op", "name", "op", "op", "name", "end"]
        assert tokens[-1].position == len("ln(n)/n")

    def test_numbers(self, parser):
        texts = [t.text for t in parser.tokenize("2.5e-3 + .5 + 10") if t.kind == "number"]
        assert texts == ["2.5e-3", ".5", "10"]

    def test_unknown_name(self, parser):
        with pytest.raises(ExpressionError) as exc:
            parser.tokenize("n + x")
        assert exc.value.position == 4

    def test_illegal_character(self, parser):
        with pytest.raises(ExpressionError) as exc:
            parser.tokenize("n $ 2")
        assert exc.value.position == 2
        assert "位置 2" in str(exc.value)


class TestParse:
    """测试语法与求值"""

    def test_log_ratio(self, parser):
        expr = parser.parse("ln(n)/n")
        assert expr(100) == pytest.approx(math.log(100) / 100)

    def test_ln_binds_tighter_than_power(self, parser):
        """ln n^2 表示 (ln n)^2"""
        assert parser.parse("ln n^2")(100) == pytest.approx(math.log(100) ** 2)
        assert parser.parse("ln n^2") == parser.parse("(ln(n))^2")

    def test_power_is_right_associative(self, parser):
        assert parser.parse("2^3^2")(1) == 512.0

    def test_unary_minus(self, parser):
        assert parser.parse("-n^2")(3) == -9.0
        assert parser.parse("2^-1")(1) == 0.5

    def test_precedence(self, parser):
        assert parser.parse("1 - 1/n")(4) == 0.75
        assert parser.parse("2 * n / ln n")(math.e) == pytest.approx(2 * math.e)

    def test_constants(self, parser):
        assert parser.parse("e")(1) == pytest.approx(math.e)
        assert parser.parse("pi * n")(2) == pytest.approx(2 * math.pi)

    def test_alternate_spellings(self, parser):
        assert parser.parse("n**2") == parser.parse("n^2")
        assert parser.parse("2·n − 1")(3) == 5.0
        assert parser.parse("log(n)") == parser.parse("ln(n)")

    def test_vectorized(self, parser):
        out = parser.parse("n^2")(np.array([1, 2, 3]))
        assert isinstance(out, np.ndarray)
        assert out.tolist() == [1.0, 4.0, 9.0]

    def test_scalar_result_is_float(self, parser):
        assert isinstance(parser.parse("3")(10), float)
        assert parser.parse("3")(np.arange(4)).shape == (4,)

    def test_tree_shape(self, parser):
        root = parser.parse("ln(n)^2/n").root
        assert root.type is NodeType.DIV
        assert root.children[0].type is NodeType.POW
        assert root.children[0].children[0].type is NodeType.LN


class TestParseErrors:
    """测试语法错误的位置"""

    @pytest.mark.parametrize("text, position", [
        ("ln(n", 4),
        ("n 2", 2),
        ("", 0),
        ("   ", 0),
        ("n +", 3),
        (")", 0),
    ])
    def test_positions(self, parser, text, position):
        with pytest.raises(ExpressionError) as exc:
            parser.parse(text)
        assert exc.value.position == position, f"{text!r}: 位置应为 {position}"

    def test_nonfinite_evaluation(self, parser):
        with pytest.raises(ExpressionError):
            parser.parse("ln(n)")(0)
        with pytest.raises(ExpressionError):
            parser.parse("1/(n-1)")(np.array([2.0, 1.0]))

    def test_no_code_execution(self, parser):
        with pytest.raises(ExpressionError):
            parser.parse("__import__('os')")


class TestRender:
    """测试规范文本"""

    @pytest.mark.parametrize("text, canonical", [
        ("ln(n)^2/n", "ln(n)^2 / n"),
        ("1-1/n", "1 - 1 / n"),
        ("ln n / n", "ln(n) / n"),
        ("(2^3)^2", "(2^3)^2"),
        ("2^3^2", "2^3^2"),
        ("n - (1 - n)", "n - (1 - n)"),
        ("0.5 * n", "0.5 * n"),
        ("-(n + 1)", "-(n + 1)"),
    ])
    def test_canonical_text(self, text, canonical):
        assert str(parse_expression(text)) == canonical

    @pytest.mark.parametrize("text", ["ln(n)^2/n", "2*n/ln(n)", "1 - 1/n", "(ln n)^2/n", "n^-0.5", "e^(-n/pi)"])
    def test_reparse_gives_same_tree(self, text):
        expr = parse_expression(text)
        again = parse_expression(str(expr))
        assert again == expr, f"{text!r} 规范化后语义发生变化: {expr} -> {again}"
        assert again(7.0) == pytest.approx(expr(7.0))
