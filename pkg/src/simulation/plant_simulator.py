"""
被控对象仿真器

按当前模式的仿射动力学精确推进单相真实系统，并注入真实的负载扰动曲线
"""

import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..circuit.circuit_model import AffineDynamics, CircuitParams, PhaseState
from ..utils.exceptions import NumericError, ParameterDomainError
from ..utils.logger import get_logger
from .discretization import DiscretizationCache, default_cache, discretize, propagate


logger = get_logger(__name__)


class SolverConfig(BaseModel):
    """数值求解器配置"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    f_sol: int = Field(100_000, gt=0, description="求解器频率 (Hz)")

    @property
    def dt_sol(self) -> float:
        """求解器步长 (s)"""
        return 1.0 / self.f_sol


class DisturbanceInterval(BaseModel):
    """一段负载阶跃扰动，区间左闭右开"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    t_start: float = Field(ge=0)
    t_end: float
    delta_r: float

    @model_validator(mode="after")
    def _check_order(self) -> "DisturbanceInterval":
        if not self.t_end > self.t_start:
            raise ValueError(f"扰动区间结束时间必须大于开始时间: [{self.t_start}, {self.t_end})")
        if not math.isfinite(self.delta_r):
            raise ValueError(f"扰动幅值不是有限值: {self.delta_r}")
        return self


class DisturbanceProfile(BaseModel):
    """负载扰动曲线，区间外取 0"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    intervals: Tuple[DisturbanceInterval, ...] = ()

    @model_validator(mode="after")
    def _check_disjoint(self) -> "DisturbanceProfile":
        for previous, current in zip(self.intervals, self.intervals[1:]):
            if current.t_start < previous.t_end:
                raise ValueError(
                    f"扰动区间必须有序且不相交: [{previous.t_start}, {previous.t_end}) 与 "
                    f"[{current.t_start}, {current.t_end})"
                )
        return self

    @classmethod
    def load_shift_steps(cls, r_load_nominal: float) -> "DisturbanceProfile":
        """±50% 额定负载的两段阶跃扰动"""
        return cls(intervals=(
            DisturbanceInterval(t_start=0.02, t_end=0.05, delta_r=0.5 * r_load_nominal),
            DisturbanceInterval(t_start=0.05, t_end=0.08, delta_r=-0.5 * r_load_nominal),
        ))

    def value_at(self, t: float) -> float:
        """t 时刻的负载电阻偏移 (Ω)"""
        for interval in self.intervals:
            if interval.t_start <= t < interval.t_end:
                return interval.delta_r
        return 0.0

    def edges(self) -> List[float]:
        """扰动发生跳变的时刻，升序去重"""
        times = set()
        for interval in self.intervals:
            times.add(interval.t_start)
            times.add(interval.t_end)
        return sorted(times)

    def min_delta(self) -> float:
        """最小偏移量（含区间外的 0）"""
        return min([0.0] + [interval.delta_r for interval in self.intervals])


def exact_step(dyn: AffineDynamics, x: np.ndarray, dt: float) -> np.ndarray:
    """从 x 出发精确推进 dt

    Args:
        dyn: 仿射动力学
        x: 初始状态向量
        dt: 步长 (s)

    Returns:
        x(t + dt)

    Raises:
        NumericError: 结果非有限值
    """
    discrete = discretize(dyn, dt)
    result = propagate(discrete.phi, discrete.gamma, np.asarray(x, dtype=float))
    if not np.all(np.isfinite(result)):
        raise NumericError(f"状态推进结果非有限值: {result}")
    return result


def plant_advance(
    params: CircuitParams,
    state: PhaseState,
    profile: DisturbanceProfile,
    t: float,
    dt: float,
    cache: Optional[DiscretizationCache] = None,
) -> PhaseState:
    """推进真实系统一个求解步

    扰动在步首采样并在步内保持；模式在步内不变。

    Args:
        params: 电路参数
        state: 当前相状态
        profile: 真实扰动曲线
        t: 步首时刻 (s)
        dt: 步长 (s)
        cache: 离散化缓存，默认使用进程级缓存

    Returns:
        步末相状态
    """
    if not dt > 0.0:
        raise ParameterDomainError(f"步长必须为正，实际为 {dt}")

    cache = cache if cache is not None else default_cache()
    r_load = params.r_load_nominal + profile.value_at(t)
    discrete = cache.get(params, state.mode, r_load, dt)
    vector = propagate(discrete.phi, discrete.gamma, state.as_vector())
    if not np.all(np.isfinite(vector)):
        logger.error(f"真实系统状态非有限值 t={t}: {vector}")
        raise NumericError(f"真实系统状态非有限值 t={t}")
    return PhaseState.from_vector(vector, state.mode)
