from functools import lru_cache
from dataclasses import dataclass
from enum import Enum, auto
from typing import Tuple, Union
import math
import re
import logging

import numpy as np

from ..errors import ExpressionError

logger = logging.getLogger(__name__)

# 表达式语法关键字
EXPRESSION_SYNTAX = {
    'VARIABLE': 'n',               # 唯一的自变量
    'FUNCTIONS': ('ln', 'log'),    # 自然对数（log 为别名）
    'CONSTANTS': {'e': math.e, 'pi': math.pi},
    'OPERATORS': '+-*/^()',
}

# 输入中允许的替代写法（规范化为 ASCII 运算符）
ALTERNATE_SPELLINGS = {
    '**': '^',
    '·': '*',
    '×': '*',
    '−': '-',
}


class NodeType(Enum):
    """语法树节点类型

    - NUMBER: 数值常量，如 2、0.5、1e-3、e、pi
    - VARIABLE: 自变量 n
    - NEGATE: 一元负号
    - ADD/SUB/MUL/DIV/POW: 二元运算
    - LN: 自然对数
    """
    NUMBER = auto()
    VARIABLE = auto()
    NEGATE = auto()
    ADD = auto()
    SUB = auto()
    MUL = auto()
    DIV = auto()
    POW = auto()
    LN = auto()


BINARY_SYMBOLS = {
    NodeType.ADD: '+',
    NodeType.SUB: '-',
    NodeType.MUL: '*',
    NodeType.DIV: '/',
    NodeType.POW: '^',
}

# 渲染时用于决定是否加括号的优先级
PRECEDENCE = {
    NodeType.ADD: 1,
    NodeType.SUB: 1,
    NodeType.MUL: 2,
    NodeType.DIV: 2,
    NodeType.NEGATE: 3,
    NodeType.POW: 4,
    NodeType.LN: 5,
    NodeType.NUMBER: 6,
    NodeType.VARIABLE: 6,
}


@dataclass(frozen=True)
class Node:
    """语法树节点

    Attributes:
        type: 节点类型
        value: NUMBER 节点的数值，或常量名（e、pi）；其余节点为 None
        children: 子节点
    """
    type: NodeType
    value: Union[float, str, None] = None
    children: Tuple["Node", ...] = ()


@dataclass(frozen=True)
class Token:
    kind: str      # 'number' | 'name' | 'op' | 'end'
    text: str
    position: int


class Expression:
    """已解析的关于 n 的算术表达式，可对标量或数组求值

    Examples:
        >>> expr = ExpressionParser().parse("ln(n)/n")
        >>> round(expr(100), 6)
        0.046052
        >>> str(expr)
        'ln(n) / n'
    """

    def __init__(self, text: str, root: Node):
        self.text = text
        self.root = root

    def evaluate(self, n):
        na = np.asarray(n, dtype=float)
        with np.errstate(all="ignore"):
            result = np.asarray(_evaluate(self.root, na), dtype=float)
        result = np.broadcast_to(result, na.shape)
        if not np.all(np.isfinite(result)):
            bad = na[~np.isfinite(result)] if na.ndim else na
            logger.error(f"表达式求值出现非有限值: '{self.text}' at n={np.ravel(bad)[:3]}")
            raise ExpressionError(f"表达式 '{self.text}' 在 n={np.ravel(bad)[0]:g} 处无定义")
        if np.ndim(n) == 0:
            return float(result)
        return np.array(result)

    __call__ = evaluate

    def __str__(self) -> str:
        return render(self.root)

    def __repr__(self) -> str:
        return f"Expression('{render(self.root)}')"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self) -> int:
        return hash(self.root)


def _evaluate(node: Node, n: np.ndarray):
    t = node.type
    if t is NodeType.NUMBER:
        if isinstance(node.value, str):
            return EXPRESSION_SYNTAX['CONSTANTS'][node.value]
        return node.value
    if t is NodeType.VARIABLE:
        return n
    if t is NodeType.NEGATE:
        return -_evaluate(node.children[0], n)
    if t is NodeType.LN:
        return np.log(_evaluate(node.children[0], n))
    left = _evaluate(node.children[0], n)
    right = _evaluate(node.children[1], n)
    if t is NodeType.ADD:
        return left + right
    if t is NodeType.SUB:
        return left - right
    if t is NodeType.MUL:
        return left * right
    if t is NodeType.DIV:
        return np.divide(left, right)
    return np.power(left, right)


def render(node: Node) -> str:
    """把语法树渲染为规范文本（用于场景文件的往返序列化）"""
    t = node.type
    if t is NodeType.NUMBER:
        if isinstance(node.value, str):
            return node.value
        if node.value.is_integer() and abs(node.value) < 1e15:
            return str(int(node.value))
        return repr(node.value)
    if t is NodeType.VARIABLE:
        return 'n'
    if t is NodeType.LN:
        return f"ln({render(node.children[0])})"
    if t is NodeType.NEGATE:
        return f"-{_wrap(node.children[0], PRECEDENCE[t], right=False)}"
    left, right = node.children
    symbol = BINARY_SYMBOLS[t]
    prec = PRECEDENCE[t]
    if t is NodeType.POW:
        # 乘方右结合：左侧同级需要括号
        return f"{_wrap(left, prec, right=True)}^{_wrap(right, prec - 1, right=False)}"
    return f"{_wrap(left, prec, right=False)} {symbol} {_wrap(right, prec, right=True)}"


def _wrap(node: Node, parent_prec: int, right: bool) -> str:
    prec = PRECEDENCE[node.type]
    text = render(node)
    if prec < parent_prec or (right and prec == parent_prec):
        return f"({text})"
    return text


class ExpressionParser:
    """递归下降的算术表达式解析器

    支持的语法（不执行任何通用代码）：
        expr    := term (('+' | '-') term)*
        term    := unary (('*' | '/') unary)*
        unary   := '-' unary | power
        power   := call ('^' unary)?
        call    := ('ln' | 'log') call | primary
        primary := number | 'n' | 'e' | 'pi' | '(' expr ')'

    例如：
        ln(n)/n
        ln(n)^2 / n
        2 * n / ln n
        1 - 1/n

    注意事项：
    - '**' 视同 '^'，乘方右结合
    - ln 的参数是一个 call（ln n^2 表示 (ln n)^2）
    """

    def __init__(self):
        """初始化解析器，编译正则表达式模式"""
        self.NUMBER_PATTERN = re.compile(r'(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?')
        self.NAME_PATTERN = re.compile(r'[a-zA-Z_][a-zA-Z0-9_]*')
        self.SPACE_PATTERN = re.compile(r'\s+')

    def _normalize(self, text: str) -> str:
        for alt, canonical in ALTERNATE_SPELLINGS.items():
            text = text.replace(alt, canonical)
        return text

    def tokenize(self, text: str) -> Tuple[Token, ...]:
        """把表达式切分为记号序列

        Raises:
            ExpressionError: 遇到非法字符或未知名称时
        """
        tokens = []
        pos = 0
        while pos < len(text):
            if match := self.SPACE_PATTERN.match(text, pos):
                pos = match.end()
                continue
            if match := self.NUMBER_PATTERN.match(text, pos):
                tokens.append(Token('number', match.group(0), pos))
                pos = match.end()
                continue
            if match := self.NAME_PATTERN.match(text, pos):
                name = match.group(0)
                if (name != EXPRESSION_SYNTAX['VARIABLE']
                        and name not in EXPRESSION_SYNTAX['FUNCTIONS']
                        and name not in EXPRESSION_SYNTAX['CONSTANTS']):
                    raise ExpressionError(f"未知的名称 '{name}'", text, pos)
                tokens.append(Token('name', name, pos))
                pos = match.end()
                continue
            if text[pos] in EXPRESSION_SYNTAX['OPERATORS']:
                tokens.append(Token('op', text[pos], pos))
                pos += 1
                continue
            raise ExpressionError(f"非法字符 '{text[pos]}'", text, pos)
        tokens.append(Token('end', '', len(text)))
        return tuple(tokens)

    @lru_cache(maxsize=256)
    def parse(self, text: str) -> Expression:
        """解析表达式字符串

        Raises:
            ExpressionError: 语法错误，附带出错位置

        Example:
            >>> ExpressionParser().parse("(ln n)^2/n")(100)  # doctest: +ELLIPSIS
            0.2120...
        """
        try:
            normalized = self._normalize(text)
            if not normalized.strip():
                raise ExpressionError("空表达式", text, 0)
            cursor = _Cursor(normalized, self.tokenize(normalized))
            root = cursor.expr()
            if cursor.peek().kind != 'end':
                tok = cursor.peek()
                raise ExpressionError(f"多余的记号 '{tok.text}'", normalized, tok.position)
            return Expression(text.strip(), root)
        except ExpressionError as e:
            logger.error(f"表达式解析失败: {str(e)}")
            raise


class _Cursor:
    """记号游标，每个语法规则对应一个方法"""

    def __init__(self, text: str, tokens: Tuple[Token, ...]):
        self.text = text
        self.tokens = tokens
        self.index = 0

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def accept(self, *ops: str) -> Union[Token, None]:
        tok = self.peek()
        if tok.kind == 'op' and tok.text in ops:
            return self.advance()
        return None

    def expect(self, op: str) -> Token:
        tok = self.accept(op)
        if tok is None:
            found = self.peek()
            what = f"'{found.text}'" if found.kind != 'end' else "表达式结尾"
            raise ExpressionError(f"期望 '{op}'，实际为 {what}", self.text, found.position)
        return tok

    def expr(self) -> Node:
        node = self.term()
        while tok := self.accept('+', '-'):
            kind = NodeType.ADD if tok.text == '+' else NodeType.SUB
            node = Node(kind, children=(node, self.term()))
        return node

    def term(self) -> Node:
        node = self.unary()
        while tok := self.accept('*', '/'):
            kind = NodeType.MUL if tok.text == '*' else NodeType.DIV
            node = Node(kind, children=(node, self.unary()))
        return node

    def unary(self) -> Node:
        if self.accept('-'):
            return Node(NodeType.NEGATE, children=(self.unary(),))
        return self.power()

    def power(self) -> Node:
        base = self.call()
        if self.accept('^'):
            return Node(NodeType.POW, children=(base, self.unary()))
        return base

    def call(self) -> Node:
        tok = self.peek()
        if tok.kind == 'name' and tok.text in EXPRESSION_SYNTAX['FUNCTIONS']:
            self.advance()
            return Node(NodeType.LN, children=(self.call(),))
        return self.primary()

    def primary(self) -> Node:
        tok = self.advance()
        if tok.kind == 'number':
            return Node(NodeType.NUMBER, value=float(tok.text))
        if tok.kind == 'name':
            if tok.text == EXPRESSION_SYNTAX['VARIABLE']:
                return Node(NodeType.VARIABLE)
            if tok.text in EXPRESSION_SYNTAX['CONSTANTS']:
                return Node(NodeType.NUMBER, value=tok.text)
        if tok.kind == 'op' and tok.text == '(':
            node = self.expr()
            self.expect(')')
            return node
        what = f"'{tok.text}'" if tok.kind != 'end' else "表达式结尾"
        raise ExpressionError(f"意外的记号 {what}", self.text, tok.position)


_default_parser = ExpressionParser()


def parse_expression(text: str) -> Expression:
    """使用共享解析器解析表达式"""
    return _default_parser.parse(text)
