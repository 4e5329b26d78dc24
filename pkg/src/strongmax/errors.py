from typing import Optional


class StrongMaxError(ValueError):
    """strongmax 所有错误的基类"""


class DomainError(StrongMaxError):
    """参数超出运算定义域，如 quantile 的 u 不在 (0,1) 内"""


class ThresholdMonotonicityError(StrongMaxError):
    """阈值序列在求值窗口内出现下降

    Attributes:
        n: 第一个违反单调性的下标（x_n > x_{n+1}）
        left: x_n
        right: x_{n+1}
    """

    def __init__(self, n: int, left: float, right: float):
        self.n = n
        self.left = left
        self.right = right
        super().__init__(f"阈值序列不单调: x_{n}={left!r} > x_{n + 1}={right!r}")


class UndefinedRatioError(StrongMaxError):
    """游程比值的分母 F(x_{n+k}) 为 0"""


class NegativeTermError(StrongMaxError):
    """级数项为负，违反概率级数的约定"""


class ExpressionError(StrongMaxError):
    """关于 n 的表达式无法解析或求值

    Attributes:
        position: 出错字符在表达式中的位置（从 0 开始）
    """

    def __init__(self, message: str, expression: str = "", position: Optional[int] = None):
        self.expression = expression
        self.position = position
        if position is not None:
            message = f"{message} (位置 {position}: '{expression}')"
        super().__init__(message)


class ScenarioConfigError(StrongMaxError):
    """场景配置错误

    Attributes:
        location: 出错的位置，形如 "events.transform"
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        prefix = f"[{location}] " if location else ""
        super().__init__(f"{prefix}{message}")
