"""
最优离散控制模式 (ODCM)

每个控制节拍遍历全部 3^N 条 N 步模式序列，选出跟踪代价最小者并执行其首个符号
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..automaton.hybrid_automaton import ControlSymbol
from ..circuit.circuit_model import CircuitParams, PhaseId, PhaseState
from ..simulation.discretization import DiscretizationCache
from ..utils.exceptions import ParameterDomainError
from .reference import ReferenceSpec, reference_samples
from .rollout import ControlDecision, PredictiveController, rollout_batch, trajectory_cost


class HorizonConfig(BaseModel):
    """预测时域配置"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_steps: int = Field(5, ge=1, description="预测步数 N")
    f_c: int = Field(20_000, gt=0, description="控制频率 (Hz)")
    cost_samples_per_beat: int = Field(5, ge=1, description="每节拍代价采样数 f_sol/f_c")

    @property
    def dt_c(self) -> float:
        """控制周期 (s)"""
        return 1.0 / self.f_c

    @property
    def f_sol(self) -> int:
        """求解器频率 (Hz)"""
        return self.f_c * self.cost_samples_per_beat

    @property
    def dt_sol(self) -> float:
        """求解器步长 (s)"""
        return 1.0 / self.f_sol

    @property
    def window_length(self) -> int:
        """一次优化使用的代价采样总数"""
        return self.n_steps * self.cost_samples_per_beat


@dataclass(frozen=True)
class ControlSequence:
    """N 步控制符号序列"""

    symbols: Tuple[ControlSymbol, ...]

    @classmethod
    def of(cls, values: Sequence[int]) -> "ControlSequence":
        return cls(tuple(ControlSymbol(v) for v in values))

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class HorizonSearchResult:
    """一次穷举搜索的结果"""

    symbol: ControlSymbol
    sequence: ControlSequence
    cost: float
    candidates: int


@lru_cache(maxsize=8)
def enumerate_sequences(n_steps: int) -> np.ndarray:
    """按里程表顺序列出全部控制序列

    最后一个符号变化最快，符号顺序 1 < 2 < 3。

    Args:
        n_steps: 序列长度

    Returns:
        形状 (3^N, N) 的只读整数矩阵
    """
    table = np.array(list(product((1, 2, 3), repeat=n_steps)), dtype=int).reshape(-1, n_steps)
    table.setflags(write=False)
    return table


def reference_window(spec: ReferenceSpec, phase: PhaseId, t_k: float, cfg: HorizonConfig) -> np.ndarray:
    """ODCM 一次优化的参考采样集合

    Args:
        spec: 参考电压描述
        phase: 相别
        t_k: 控制时刻 (s)
        cfg: 预测时域配置

    Returns:
        N·(f_sol/f_c) 个参考值
    """
    return reference_samples(spec, phase, t_k, cfg.window_length, cfg.dt_sol)


def _horizon_loads(params: CircuitParams, w_hat: Sequence[float], n_steps: int) -> np.ndarray:
    w_hat = np.asarray(w_hat, dtype=float)
    if w_hat.shape != (n_steps,):
        raise ParameterDomainError(f"扰动估计长度必须为 {n_steps}，实际为 {w_hat.shape}")
    return params.r_load_nominal + w_hat


def predict_trajectory(
    params: CircuitParams,
    x0: PhaseState,
    seq: ControlSequence,
    w_hat: Sequence[float],
    cfg: HorizonConfig,
    cache: Optional[DiscretizationCache] = None,
) -> np.ndarray:
    """预测一条控制序列下的输出电压

    Args:
        params: 电路参数
        x0: 当前相状态
        seq: N 步控制序列
        w_hat: 每个预测步的负载扰动估计 (Ω)
        cfg: 预测时域配置
        cache: 离散化缓存

    Returns:
        N·(f_sol/f_c) 个预测的 v_o
    """
    loads = _horizon_loads(params, w_hat, len(seq))
    modes = np.array([[int(s) for s in seq.symbols]], dtype=int)
    return rollout_batch(params, x0.as_vector(), modes, loads, cfg.cost_samples_per_beat, cfg.dt_sol, cache)[0]


def search_horizon(
    params: CircuitParams,
    x0: PhaseState,
    spec: ReferenceSpec,
    phase: PhaseId,
    t_k: float,
    w_hat: Sequence[float],
    cfg: HorizonConfig,
    cache: Optional[DiscretizationCache] = None,
) -> HorizonSearchResult:
    """穷举全部 3^N 条序列

    argmin 返回首个最小值，等价于按枚举顺序只在严格更小时更新最优解。

    Args:
        params: 电路参数
        x0: 当前相状态
        spec: 参考电压描述
        phase: 相别
        t_k: 控制时刻 (s)
        w_hat: 每个预测步的负载扰动估计 (Ω)
        cfg: 预测时域配置
        cache: 离散化缓存

    Returns:
        最优序列、首个符号、代价与候选数
    """
    loads = _horizon_loads(params, w_hat, cfg.n_steps)
    sequences = enumerate_sequences(cfg.n_steps)
    predictions = rollout_batch(
        params, x0.as_vector(), sequences, loads, cfg.cost_samples_per_beat, cfg.dt_sol, cache
    )
    costs = trajectory_cost(predictions, reference_window(spec, phase, t_k, cfg))

    best = int(np.argmin(costs))
    sequence = ControlSequence.of(sequences[best])
    return HorizonSearchResult(
        symbol=sequence.symbols[0],
        sequence=sequence,
        cost=float(costs[best]),
        candidates=len(sequences),
    )


def select_control(
    params: CircuitParams,
    x0: PhaseState,
    spec: ReferenceSpec,
    phase: PhaseId,
    t_k: float,
    w_hat: Sequence[float],
    cfg: HorizonConfig,
    cache: Optional[DiscretizationCache] = None,
) -> ControlSymbol:
    """返回最优序列的首个控制符号"""
    return search_horizon(params, x0, spec, phase, t_k, w_hat, cfg, cache).symbol


class OdcmController(PredictiveController):
    """ODCM 控制器：每个节拍决策一次"""

    name = "odcm"

    def __init__(
        self,
        params: CircuitParams,
        reference: ReferenceSpec,
        horizon: HorizonConfig,
        cache: Optional[DiscretizationCache] = None,
    ):
        super().__init__(params, reference, cache)
        self.horizon = horizon

    @property
    def decision_beats(self) -> int:
        return 1

    def w_hat_from_forecast(self, forecast: np.ndarray) -> np.ndarray:
        """取预测的前 N 个值，不足时用最后一个值补齐"""
        return _fit_length(forecast, self.horizon.n_steps)

    def decide(self, state: PhaseState, phase: PhaseId, t_k: float, w_hat: np.ndarray) -> ControlDecision:
        result = search_horizon(self.params, state, self.reference, phase, t_k, w_hat, self.horizon, self.cache)
        self.logger.debug(
            f"{phase.name}相 t={t_k:.6f}s: 候选 {result.candidates} 条, 最优符号 {int(result.symbol)}, 代价 {result.cost:.6g}"
        )
        return ControlDecision(beats=(result.symbol,), cost=result.cost, candidates=result.candidates)


def _fit_length(values: np.ndarray, length: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return np.zeros(length)
    if len(values) >= length:
        return values[:length].copy()
    return np.concatenate([values, np.full(length - len(values), values[-1])])
