"""
单相电路模型

保存单相解耦后的电气参数，按开关模式生成仿射动力学 ẋ = A·x + b，
并计算输出电压、负载电压与输出电流
"""

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..utils.exceptions import ParameterDomainError
from ..utils.logger import get_logger


logger = get_logger(__name__)

ArrayLike = Union[float, np.ndarray]


class CircuitParams(BaseModel):
    """单相电路参数（国际单位制）"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    r_line: float = Field(0.5, gt=0, description="线路电阻 (Ω)")
    l_line: float = Field(0.0015, gt=0, description="线路电感 (H)")
    l1: float = Field(0.009, gt=0, description="LCL滤波器逆变侧电感 (H)")
    l2: float = Field(0.003, gt=0, description="LCL滤波器网侧电感 (H)")
    c: float = Field(60e-6, gt=0, description="滤波电容 (F)")
    r_load_nominal: float = Field(100.0, gt=0, description="额定负载电阻 (Ω)")
    u_dc: float = Field(800.0, gt=0, description="直流源电压 (V)")

    @model_validator(mode="after")
    def _check_finite(self) -> "CircuitParams":
        for name, value in self.model_dump().items():
            if not math.isfinite(value):
                raise ValueError(f"电路参数 {name} 不是有限值: {value}")
        return self

    @property
    def l_out(self) -> float:
        """输出支路总电感 L2 + L_line"""
        return self.l2 + self.l_line


class PhaseId(str, Enum):
    """相别"""

    A = "A"
    B = "B"
    C = "C"


class SwitchMode(IntEnum):
    """单相桥臂开关模式

    m1: (S_up on, S_down off)；m2: (S_up off, S_down on)；m3: 两管均关断。
    两管同时导通会造成直流侧短路，不存在对应的枚举值。
    """

    M1 = 1
    M2 = 2
    M3 = 3

    @property
    def switch_pair(self) -> Tuple[int, int]:
        """(S_up, S_down) 开关状态"""
        return _SWITCH_PAIRS[self]


_SWITCH_PAIRS = {
    SwitchMode.M1: (1, 0),
    SwitchMode.M2: (0, 1),
    SwitchMode.M3: (0, 0),
}


@dataclass(frozen=True)
class PhaseState:
    """单相连续状态 (i1, i2, v1) 及当前离散模式"""

    x1: float
    x2: float
    x3: float
    mode: SwitchMode = SwitchMode.M3

    def __post_init__(self):
        if self.mode is SwitchMode.M3 and self.x1 != 0.0:
            raise ParameterDomainError(f"模式 m3 下 x1 必须为 0，实际为 {self.x1}")

    def as_vector(self) -> np.ndarray:
        """返回连续状态向量 (x1, x2, x3)"""
        return np.array([self.x1, self.x2, self.x3], dtype=float)

    @classmethod
    def from_vector(cls, vector: np.ndarray, mode: SwitchMode) -> "PhaseState":
        """由状态向量构造

        Args:
            vector: 长度为3的状态向量
            mode: 当前模式

        Returns:
            相状态
        """
        return cls(float(vector[0]), float(vector[1]), float(vector[2]), SwitchMode(mode))


@dataclass(frozen=True)
class AffineDynamics:
    """某一模式下的仿射动力学 ẋ = a·x + b"""

    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class OutputSignals:
    """输出信号"""

    v_o: float
    v_load: float
    i_o: float


def check_load(r_load_effective: float) -> float:
    """校验等效负载电阻

    Args:
        r_load_effective: 额定负载加扰动后的等效电阻 (Ω)

    Returns:
        转换为 float 的电阻值

    Raises:
        ParameterDomainError: 电阻非正或非有限值
    """
    value = float(r_load_effective)
    if not math.isfinite(value) or value <= 0.0:
        logger.error(f"等效负载电阻非法: {value}")
        raise ParameterDomainError(f"等效负载电阻必须为正有限值，实际为 {value}")
    return value


def dynamics_for_mode(params: CircuitParams, mode: SwitchMode, r_load_effective: float) -> AffineDynamics:
    """生成指定模式的仿射动力学

    m1 与 m2 共用矩阵 A，输入项符号相反；m3 的 A 第一行与 b 全为零。
    第二、三行对三种模式完全相同。

    Args:
        params: 电路参数
        mode: 开关模式
        r_load_effective: 等效负载电阻 (Ω)

    Returns:
        仿射动力学 (A, b)

    Raises:
        ParameterDomainError: 负载电阻非正或分母为零
    """
    r_load = check_load(r_load_effective)
    l_out = params.l_out
    if l_out <= 0.0 or params.l1 <= 0.0 or params.c <= 0.0:
        raise ParameterDomainError(f"电感或电容分母为零: l_out={l_out}, l1={params.l1}, c={params.c}")

    mode = SwitchMode(mode)
    a = np.zeros((3, 3))
    a[1, 1] = -(params.r_line + r_load) / l_out
    a[1, 2] = 1.0 / l_out
    a[2, 0] = 1.0 / params.c
    a[2, 1] = -1.0 / params.c

    b = np.zeros(3)
    if mode is not SwitchMode.M3:
        a[0, 2] = -1.0 / params.l1
        drive = params.u_dc / params.l1
        b[0] = drive if mode is SwitchMode.M1 else -drive

    a.setflags(write=False)
    b.setflags(write=False)
    return AffineDynamics(a=a, b=b)


def output_arrays(
    params: CircuitParams, states: np.ndarray, r_load_effective: ArrayLike
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """批量计算输出信号

    Args:
        params: 电路参数
        states: 形状为 (..., 3) 的状态数组
        r_load_effective: 等效负载电阻，标量或可与 states[..., 0] 广播的数组

    Returns:
        (v_o, v_load, i_o) 三个数组
    """
    x2 = states[..., 1]
    x3 = states[..., 2]
    l_out = params.l_out

    # 共享的 Q 第二行给出 di2/dt
    dx2 = (-(params.r_line + r_load_effective) * x2 + x3) / l_out
    v_o = x3 - params.l2 * dx2
    v_load = x3 - l_out * dx2 - params.r_line * x2
    i_o = np.array(x2, dtype=float, copy=True)
    return v_o, v_load, i_o


def outputs(params: CircuitParams, state: PhaseState, r_load_effective: float) -> OutputSignals:
    """计算单个状态的输出信号

    Args:
        params: 电路参数
        state: 相状态
        r_load_effective: 等效负载电阻 (Ω)

    Returns:
        输出电压、负载电压与输出电流
    """
    r_load = check_load(r_load_effective)
    v_o, v_load, i_o = output_arrays(params, state.as_vector(), r_load)
    return OutputSignals(v_o=float(v_o), v_load=float(v_load), i_o=float(i_o))
