"""
最优PWM控制模式 (OPCM)

在 ODCM 的滚动优化上附加PWM约束：每个PWM周期内按 m1 → m2 → m3 的固定顺序
执行，占空比量化为控制节拍的整数倍
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..automaton.hybrid_automaton import ControlSymbol
from ..circuit.circuit_model import CircuitParams, PhaseId, PhaseState
from ..simulation.discretization import DiscretizationCache
from ..utils.exceptions import ParameterDomainError
from .reference import ReferenceSpec, reference_samples
from .rollout import ControlDecision, PredictiveController, rollout_batch, trajectory_cost


class PwmConfig(BaseModel):
    """PWM约束配置

    f_c 与 cost_samples_per_beat 与预测时域配置保持一致，由场景构建时写入。
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    f_pwm: int = Field(4_000, gt=0, description="PWM频率 (Hz)")
    n_periods: int = Field(1, ge=1, description="预测PWM周期数 N_PWM")
    f_c: int = Field(20_000, gt=0, description="控制频率 (Hz)")
    cost_samples_per_beat: int = Field(5, ge=1, description="每节拍代价采样数")

    @model_validator(mode="after")
    def _check_multiple(self) -> "PwmConfig":
        if self.f_c % self.f_pwm != 0:
            raise ValueError(f"控制频率 {self.f_c} 必须是PWM频率 {self.f_pwm} 的整数倍")
        return self

    @property
    def t_pwm(self) -> float:
        """PWM周期 (s)"""
        return 1.0 / self.f_pwm

    @property
    def beats_per_period(self) -> int:
        """每个PWM周期的控制节拍数"""
        return self.f_c // self.f_pwm

    @property
    def dt_sol(self) -> float:
        """求解器步长 (s)"""
        return 1.0 / (self.f_c * self.cost_samples_per_beat)

    @property
    def samples_per_period(self) -> int:
        """每个PWM周期的代价采样数"""
        return self.beats_per_period * self.cost_samples_per_beat


@dataclass(frozen=True)
class DutyTriple:
    """量化占空比 (d1, d2, d3)

    d_i = n_di · Δt_c / T_PWM，d3 为剩余节拍所占比例。
    """

    n_d1: int
    n_d2: int
    beats_per_period: int

    def __post_init__(self):
        if not (0 <= self.n_d1 <= self.beats_per_period and 0 <= self.n_d2 <= self.beats_per_period - self.n_d1):
            raise ParameterDomainError(
                f"占空比节拍数越界: n_d1={self.n_d1}, n_d2={self.n_d2}, B={self.beats_per_period}"
            )

    @property
    def n_d3(self) -> int:
        return self.beats_per_period - self.n_d1 - self.n_d2

    @property
    def d1(self) -> float:
        return self.n_d1 / self.beats_per_period

    @property
    def d2(self) -> float:
        return self.n_d2 / self.beats_per_period

    @property
    def d3(self) -> float:
        return self.n_d3 / self.beats_per_period

    def fractions(self) -> Tuple[float, float, float]:
        return (self.d1, self.d2, self.d3)


def enumerate_duty_candidates(cfg: PwmConfig) -> List[DutyTriple]:
    """列出单个PWM周期内全部可行的量化占空比

    n_d1 升序，其次 n_d2 升序。

    Args:
        cfg: PWM配置

    Returns:
        候选占空比列表，共 Σ(B + 1 − n_d1) 个
    """
    beats = cfg.beats_per_period
    return [
        DutyTriple(n_d1, n_d2, beats)
        for n_d1 in range(beats + 1)
        for n_d2 in range(beats - n_d1 + 1)
    ]


def expand_duty_to_beats(duty: DutyTriple, cfg: PwmConfig) -> List[ControlSymbol]:
    """把占空比展开为逐节拍的控制符号

    Args:
        duty: 量化占空比
        cfg: PWM配置

    Returns:
        n_d1 个 1，n_d2 个 2，其余为 3
    """
    if duty.beats_per_period != cfg.beats_per_period:
        raise ParameterDomainError(f"占空比节拍数 {duty.beats_per_period} 与配置 {cfg.beats_per_period} 不一致")
    return (
        [ControlSymbol.TO_M1] * duty.n_d1
        + [ControlSymbol.TO_M2] * duty.n_d2
        + [ControlSymbol.TO_M3] * duty.n_d3
    )


@lru_cache(maxsize=8)
def _candidate_table(cfg: PwmConfig) -> Tuple[Tuple[Tuple[DutyTriple, ...], ...], np.ndarray]:
    """全部 N_PWM 周期组合及其逐节拍模式矩阵"""
    singles = enumerate_duty_candidates(cfg)
    combos = list(product(singles, repeat=cfg.n_periods))
    modes = np.array(
        [[int(s) for duty in combo for s in expand_duty_to_beats(duty, cfg)] for combo in combos],
        dtype=int,
    )
    modes.setflags(write=False)
    return tuple(combos), modes


def _period_loads(params: CircuitParams, w_hat: Sequence[float], cfg: PwmConfig, n_periods: int) -> np.ndarray:
    w_hat = np.asarray(w_hat, dtype=float)
    if w_hat.shape != (n_periods,):
        raise ParameterDomainError(f"扰动估计长度必须为 {n_periods}，实际为 {w_hat.shape}")
    return np.repeat(params.r_load_nominal + w_hat, cfg.beats_per_period)


def predict_pwm_period(
    params: CircuitParams,
    x0: PhaseState,
    duty: DutyTriple,
    w_hat: float,
    cfg: PwmConfig,
    cache: Optional[DiscretizationCache] = None,
) -> np.ndarray:
    """预测一个PWM周期内的输出电压

    三个子区间的边界落在节拍边界上，按 m1 → m2 → m3 依次推进，进入 m3 时 x1 置零。

    Args:
        params: 电路参数
        x0: 当前相状态
        duty: 量化占空比
        w_hat: 本周期的负载扰动估计 (Ω)
        cfg: PWM配置
        cache: 离散化缓存

    Returns:
        T_PWM/Δt_sol 个预测的 v_o
    """
    loads = _period_loads(params, [w_hat], cfg, 1)
    modes = np.array([[int(s) for s in expand_duty_to_beats(duty, cfg)]], dtype=int)
    return rollout_batch(params, x0.as_vector(), modes, loads, cfg.cost_samples_per_beat, cfg.dt_sol, cache)[0]


@dataclass(frozen=True)
class DutySearchResult:
    """一次占空比搜索的结果"""

    duty: DutyTriple
    schedule: Tuple[DutyTriple, ...]
    cost: float
    candidates: int


def search_duty(
    params: CircuitParams,
    x0: PhaseState,
    spec: ReferenceSpec,
    phase: PhaseId,
    t_k: float,
    w_hat: Sequence[float],
    cfg: PwmConfig,
    cache: Optional[DiscretizationCache] = None,
) -> DutySearchResult:
    """穷举 N_PWM 个周期的全部占空比组合

    Args:
        params: 电路参数
        x0: 当前相状态
        spec: 参考电压描述
        phase: 相别
        t_k: 控制时刻 (s)
        w_hat: 每个PWM周期一个负载扰动估计 (Ω)
        cfg: PWM配置
        cache: 离散化缓存

    Returns:
        首周期最优占空比、完整最优组合、代价与候选数
    """
    combos, modes = _candidate_table(cfg)
    loads = _period_loads(params, w_hat, cfg, cfg.n_periods)
    predictions = rollout_batch(
        params, x0.as_vector(), modes, loads, cfg.cost_samples_per_beat, cfg.dt_sol, cache
    )
    reference = reference_samples(spec, phase, t_k, cfg.n_periods * cfg.samples_per_period, cfg.dt_sol)
    costs = trajectory_cost(predictions, reference)

    best = int(np.argmin(costs))
    return DutySearchResult(
        duty=combos[best][0],
        schedule=combos[best],
        cost=float(costs[best]),
        candidates=len(combos),
    )


def select_duty(
    params: CircuitParams,
    x0: PhaseState,
    spec: ReferenceSpec,
    phase: PhaseId,
    t_k: float,
    w_hat: Sequence[float],
    cfg: PwmConfig,
    cache: Optional[DiscretizationCache] = None,
) -> DutyTriple:
    """返回首个PWM周期的最优占空比"""
    return search_duty(params, x0, spec, phase, t_k, w_hat, cfg, cache).duty


class OpcmController(PredictiveController):
    """OPCM 控制器：每个PWM周期决策一次"""

    name = "opcm"

    def __init__(
        self,
        params: CircuitParams,
        reference: ReferenceSpec,
        pwm: PwmConfig,
        cache: Optional[DiscretizationCache] = None,
    ):
        super().__init__(params, reference, cache)
        self.pwm = pwm

    @property
    def decision_beats(self) -> int:
        return self.pwm.beats_per_period

    def w_hat_from_forecast(self, forecast: np.ndarray) -> np.ndarray:
        """把逐节拍预测按PWM周期分块取均值

        预测长度不足时用最后一个值补齐。
        """
        beats = self.pwm.beats_per_period
        needed = beats * self.pwm.n_periods
        forecast = np.asarray(forecast, dtype=float)
        if len(forecast) == 0:
            return np.zeros(self.pwm.n_periods)
        if len(forecast) < needed:
            forecast = np.concatenate([forecast, np.full(needed - len(forecast), forecast[-1])])
        return forecast[:needed].reshape(self.pwm.n_periods, beats).mean(axis=1)

    def decide(self, state: PhaseState, phase: PhaseId, t_k: float, w_hat: np.ndarray) -> ControlDecision:
        result = search_duty(self.params, state, self.reference, phase, t_k, w_hat, self.pwm, self.cache)
        self.logger.debug(
            f"{phase.name}相 t={t_k:.6f}s: 候选 {result.candidates} 个, 最优占空比 {result.duty}, 代价 {result.cost:.6g}"
        )
        return ControlDecision(
            beats=tuple(expand_duty_to_beats(result.duty, self.pwm)),
            cost=result.cost,
            candidates=result.candidates,
            duty=result.duty,
        )
