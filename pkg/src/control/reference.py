"""
正弦参考电压

三相参考相角依次相差 120°
"""

import math
from typing import Dict

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..circuit.circuit_model import PhaseId


_PHASE_OFFSET_DEG: Dict[PhaseId, float] = {
    PhaseId.A: 0.0,
    PhaseId.B: 120.0,
    PhaseId.C: 240.0,
}


class ReferenceSpec(BaseModel):
    """参考电压描述

    v_ref_P(t) = amplitude · sin(2π·frequency·t + phase_angle_P)
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    amplitude: float = Field(380.0, ge=0, description="峰值 (V)")
    frequency: float = Field(50.0, gt=0, description="频率 (Hz)")
    phase_a_deg: float = Field(30.0, description="A相初相角 (°)")

    def phase_angle(self, phase: PhaseId) -> float:
        """某相初相角 (rad)"""
        return math.radians(self.phase_a_deg + _PHASE_OFFSET_DEG[PhaseId(phase)])

    def values(self, phase: PhaseId, times: np.ndarray) -> np.ndarray:
        """在给定时刻序列上求参考值

        Args:
            phase: 相别
            times: 时刻数组 (s)

        Returns:
            参考电压数组 (V)
        """
        times = np.asarray(times, dtype=float)
        return self.amplitude * np.sin(2.0 * math.pi * self.frequency * times + self.phase_angle(phase))

    def value_at(self, phase: PhaseId, t: float) -> float:
        """单一时刻的参考值 (V)"""
        return float(self.values(phase, np.array([t]))[0])


def reference_samples(spec: ReferenceSpec, phase: PhaseId, t_k: float, count: int, dt_sol: float) -> np.ndarray:
    """从 t_k 之后第一个求解步开始取 count 个参考采样

    Args:
        spec: 参考电压描述
        phase: 相别
        t_k: 当前控制时刻 (s)
        count: 采样个数
        dt_sol: 求解器步长 (s)

    Returns:
        t_k + dt_sol, ..., t_k + count·dt_sol 处的参考值
    """
    times = t_k + np.arange(1, count + 1) * dt_sol
    return spec.values(phase, times)
