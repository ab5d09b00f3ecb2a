"""
博弈、公式和命令参数不合法时抛出的异常
"""

from typing import Optional


class GameError(ValueError):
    """非法博弈输入的基类"""


class GameFormatError(GameError):
    """博弈文本格式错误（语法、维度或缺项）"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column or 0})"
        super().__init__(message)


class TiesViolationError(GameError):
    """博弈不满足求解所需的无平局条件"""

    def __init__(self, report):
        self.report = report
        super().__init__(f"game violates the no-ties condition: {report.summary()}")


class NotSymmetricError(GameError):
    """不是对称的两人博弈"""


class UsageError(ValueError):
    """玩家、策略或策略组合越界"""


class FormulaSyntaxError(ValueError):
    """公式或世界字面量无法解析"""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at position {position}")
