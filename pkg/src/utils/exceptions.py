"""
异常定义

数值核心、配置校验与命令行共用的异常层次
"""


class InverterMpcError(Exception):
    """项目异常基类"""


class ParameterDomainError(InverterMpcError, ValueError):
    """参数超出定义域

    如非正的负载电阻、零分母、非法的预测步数或PWM配置
    """


class ConfigValidationError(InverterMpcError, ValueError):
    """场景配置校验失败，仿真开始前抛出"""


class NumericError(InverterMpcError, ArithmeticError):
    """数值计算失败

    如矩阵指数结果非有限值、RLS增益分母非正
    """
