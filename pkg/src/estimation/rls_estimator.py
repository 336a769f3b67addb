"""
负载扰动估计

由实测状态与无扰动模型预测状态之差采样负载电阻偏移，
再用递推最小二乘 (RLS) 对扰动时间序列做 n_e 步预测
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..automaton.hybrid_automaton import ControlSymbol, apply_transition
from ..circuit.circuit_model import CircuitParams, OutputSignals, PhaseState, outputs
from ..simulation.discretization import DiscretizationCache, default_cache, propagate
from ..utils.exceptions import NumericError, ParameterDomainError
from ..utils.logger import get_logger


logger = get_logger(__name__)


class RlsConfig(BaseModel):
    """RLS 估计器配置"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    forgetting_factor: float = Field(1.0, gt=0, le=1, description="遗忘因子 λ")
    m: int = Field(10, ge=1, description="历史样本长度")
    n_e: int = Field(5, ge=1, description="预测输出长度")
    delta: float = Field(1e-3, gt=0, description="P 的初始尺度 δ，P(0) = δ·I")
    epsilon: float = Field(0.1, gt=0, description="过零保持带宽 (A)")
    f_e: int = Field(20_000, gt=0, description="采样频率 (Hz)")
    min_load_fraction: float = Field(0.05, gt=0, lt=1, description="预测负载相对额定值的下限")

    @model_validator(mode="after")
    def _check_lengths(self) -> "RlsConfig":
        if self.m < self.n_e:
            raise ValueError(f"历史长度 m={self.m} 不能小于预测长度 n_e={self.n_e}")
        return self


@dataclass
class RlsState:
    """RLS 递推状态

    history 依时间先后存放最近 m + n_e 个扰动样本，t < 0 的样本为 0。
    """

    r: np.ndarray
    p: np.ndarray
    history: np.ndarray
    last_effective_sample: float = 0.0
    samples_seen: int = 0
    forecast: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def initial(cls, cfg: RlsConfig) -> "RlsState":
        """按配置初始化：r = 0，P = δ·I"""
        return cls(
            r=np.zeros((cfg.n_e, cfg.m)),
            p=cfg.delta * np.eye(cfg.m),
            history=np.zeros(cfg.m + cfg.n_e),
            forecast=np.zeros(cfg.n_e),
        )


def _sample_with_status(
    measured: OutputSignals, predicted: OutputSignals, last_effective: float, epsilon: float
) -> Tuple[float, str]:
    if abs(measured.i_o) <= epsilon:
        return last_effective, "hold"
    if predicted.i_o == 0.0:
        return last_effective, "degenerate"
    value = measured.v_load / measured.i_o - predicted.v_load / predicted.i_o
    if not np.isfinite(value):
        return last_effective, "degenerate"
    return float(value), "effective"


def sample_disturbance(
    measured: OutputSignals, predicted: OutputSignals, last_effective: float, epsilon: float
) -> float:
    """采样负载电阻偏移

    负载电流落在 [-ε, ε] 内时保持上一个有效样本；预测电流为零时同样保持。

    Args:
        measured: 实测输出信号
        predicted: 无扰动模型预测的输出信号
        last_effective: 上一个有效样本 (Ω)
        epsilon: 过零保持带宽 (A)

    Returns:
        v_load/i_load − v̂_load/î_load (Ω)
    """
    value, status = _sample_with_status(measured, predicted, last_effective, epsilon)
    if status == "degenerate":
        logger.debug(f"扰动采样退化，保持上一个有效样本 {last_effective}")
    return value


def rls_update(state: RlsState, new_sample: float, cfg: RlsConfig) -> Tuple[RlsState, np.ndarray]:
    """追加一个样本并执行一次 RLS 递推

    Args:
        state: 估计器状态（原地更新）
        new_sample: 新扰动样本 (Ω)
        cfg: 估计器配置

    Returns:
        (更新后的状态, 长度为 n_e 的扰动预测)

    Raises:
        NumericError: 增益分母 γ 非正
    """
    m, n_e, lam = cfg.m, cfg.n_e, cfg.forgetting_factor

    state.history = np.roll(state.history, -1)
    state.history[-1] = float(new_sample)
    state.samples_seen += 1

    if state.samples_seen < m + n_e:
        state.forecast = np.zeros(n_e)
        return state, state.forecast.copy()

    u = state.history[:m]
    d = state.history[m:]
    u_e = state.history[n_e:]

    pi = u @ state.p
    gamma = lam + pi @ u
    if not gamma > 0.0:
        logger.error(f"RLS 增益分母非正: γ={gamma}")
        raise NumericError(f"RLS 增益分母非正: γ={gamma}")

    k = pi / gamma
    alpha = d - state.r @ u
    state.r = state.r + np.outer(alpha, k)
    p = (state.p - np.outer(k, pi)) / lam
    # P 保持对称
    state.p = 0.5 * (p + p.T)

    state.forecast = state.r @ u_e
    return state, state.forecast.copy()


def forecast_for_controller(state: RlsState, n: int, cfg: RlsConfig) -> np.ndarray:
    """取最新预测的前 n 个值

    Args:
        state: 估计器状态
        n: 需要的长度，不大于 n_e
        cfg: 估计器配置

    Returns:
        长度为 n 的扰动预测 (Ω)，预热结束前为零
    """
    if not 1 <= n <= cfg.n_e:
        raise ParameterDomainError(f"预测长度 {n} 超出 [1, {cfg.n_e}]")
    if len(state.forecast) < n:
        return np.zeros(n)
    return np.array(state.forecast[:n], dtype=float)


def predict_state(
    params: CircuitParams,
    x0: PhaseState,
    sigma: ControlSymbol,
    dt_sol: float,
    steps: int,
    cache: Optional[DiscretizationCache] = None,
) -> PhaseState:
    """按无扰动模型预测一个控制节拍后的状态

    Args:
        params: 电路参数
        x0: 节拍开始时的实测状态
        sigma: 本节拍执行的控制符号
        dt_sol: 求解器步长 (s)
        steps: 每节拍的求解步数
        cache: 离散化缓存

    Returns:
        节拍结束时的预测状态
    """
    cache = cache if cache is not None else default_cache()
    state = apply_transition(x0, sigma)
    discrete = cache.get(params, state.mode, params.r_load_nominal, dt_sol)
    vector = state.as_vector()
    for _ in range(steps):
        vector = propagate(discrete.phi, discrete.gamma, vector)
    return PhaseState.from_vector(vector, state.mode)


class DisturbanceEstimator:
    """单相扰动估计器

    每个控制节拍结束时采样一次扰动并更新 RLS；各相各持一个实例，互不共享状态。
    """

    def __init__(self, params: CircuitParams, cfg: RlsConfig, cache: Optional[DiscretizationCache] = None):
        """初始化估计器

        Args:
            params: 电路参数
            cfg: 估计器配置
            cache: 离散化缓存
        """
        self.params = params
        self.cfg = cfg
        self.cache = cache if cache is not None else default_cache()
        self.state = RlsState.initial(cfg)
        self.hold_count = 0
        self.degenerate_count = 0

    def observe(
        self,
        previous: PhaseState,
        sigma: ControlSymbol,
        measured: PhaseState,
        r_load_measured: float,
        dt_sol: float,
        steps: int,
    ) -> float:
        """用一个节拍的实测结果采样扰动并递推

        Args:
            previous: 节拍开始时的实测状态
            sigma: 本节拍执行的控制符号
            measured: 节拍结束时的实测状态
            r_load_measured: 实测负载电阻，用于计算实测负载电压 (Ω)
            dt_sol: 求解器步长 (s)
            steps: 每节拍的求解步数

        Returns:
            本次扰动样本 (Ω)
        """
        predicted_state = predict_state(self.params, previous, sigma, dt_sol, steps, self.cache)
        measured_out = outputs(self.params, measured, r_load_measured)
        predicted_out = outputs(self.params, predicted_state, self.params.r_load_nominal)

        value, status = _sample_with_status(
            measured_out, predicted_out, self.state.last_effective_sample, self.cfg.epsilon
        )
        if status == "hold":
            self.hold_count += 1
        elif status == "degenerate":
            self.degenerate_count += 1
            logger.debug(f"扰动采样退化，保持上一个有效样本 {value}")
        else:
            self.state.last_effective_sample = value

        rls_update(self.state, value, self.cfg)
        return value

    def forecast(self, n: Optional[int] = None) -> np.ndarray:
        """最新扰动预测的前 n 个值，默认取全部 n_e 个"""
        return forecast_for_controller(self.state, n or self.cfg.n_e, self.cfg)
