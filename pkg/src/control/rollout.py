"""
预测控制公共部分

批量轨迹预测、跟踪代价累加以及预测控制器基类
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np

from ..automaton.hybrid_automaton import ControlSymbol, apply_transition_batch
from ..circuit.circuit_model import CircuitParams, PhaseId, PhaseState, check_load, output_arrays
from ..simulation.discretization import DiscretizationCache, default_cache, propagate
from ..utils.exceptions import NumericError
from ..utils.logger import LoggerMixin
from .reference import ReferenceSpec

if TYPE_CHECKING:
    from .opcm_controller import DutyTriple


def rollout_batch(
    params: CircuitParams,
    x0: np.ndarray,
    mode_matrix: np.ndarray,
    r_loads: Sequence[float],
    samples_per_beat: int,
    dt_sol: float,
    cache: Optional[DiscretizationCache] = None,
) -> np.ndarray:
    """从同一初始状态批量预测 K 条模式序列的输出电压

    每个节拍开始时执行迁移（进入 m3 时 x1 置零），随后以求解步长推进
    samples_per_beat 步，记录每步末的 v_o。

    Args:
        params: 电路参数
        x0: 初始状态向量 (3,)
        mode_matrix: 形状 (K, B) 的模式编号矩阵，第 b 列为第 b 个节拍的控制符号
        r_loads: 长度为 B 的预测负载电阻，每个节拍一个
        samples_per_beat: 每个节拍的求解步数
        dt_sol: 求解器步长 (s)
        cache: 离散化缓存

    Returns:
        形状 (K, B·samples_per_beat) 的预测输出电压
    """
    cache = cache if cache is not None else default_cache()
    mode_matrix = np.atleast_2d(np.asarray(mode_matrix, dtype=int))
    n_candidates, n_beats = mode_matrix.shape
    if len(r_loads) != n_beats:
        raise ValueError(f"负载序列长度 {len(r_loads)} 与节拍数 {n_beats} 不一致")

    states = np.repeat(np.asarray(x0, dtype=float).reshape(1, 3), n_candidates, axis=0)
    predictions = np.empty((n_candidates, n_beats * samples_per_beat))

    for beat in range(n_beats):
        modes = mode_matrix[:, beat]
        r_load = check_load(r_loads[beat])
        states = apply_transition_batch(states, modes)
        phi_stack, gamma_stack = cache.stack(params, r_load, dt_sol)
        phi = phi_stack[modes - 1]
        gamma = gamma_stack[modes - 1]
        for sample in range(samples_per_beat):
            states = propagate(phi, gamma, states)
            v_o, _, _ = output_arrays(params, states, r_load)
            predictions[:, beat * samples_per_beat + sample] = v_o

    if not np.all(np.isfinite(predictions)):
        raise NumericError("预测输出电压出现非有限值")
    return predictions


def trajectory_cost(predictions: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """按采样顺序逐项累加平方跟踪误差

    Args:
        predictions: 形状 (K, L) 或 (L,) 的预测输出
        reference: 长度为 L 的参考值

    Returns:
        形状 (K,) 的代价（输入为一维时返回标量数组）
    """
    predictions = np.asarray(predictions, dtype=float)
    cost = np.zeros(predictions.shape[:-1])
    for i in range(predictions.shape[-1]):
        error = predictions[..., i] - reference[i]
        cost = cost + error * error
    return cost


@dataclass(frozen=True)
class ControlDecision:
    """一次控制决策

    beats 为到下一次决策前逐节拍执行的控制符号。
    """

    beats: Tuple[ControlSymbol, ...]
    cost: float
    candidates: int
    duty: Optional["DutyTriple"] = None


class PredictiveController(ABC, LoggerMixin):
    """滚动时域预测控制器基类"""

    name: str = ""

    def __init__(
        self,
        params: CircuitParams,
        reference: ReferenceSpec,
        cache: Optional[DiscretizationCache] = None,
    ):
        """初始化控制器

        Args:
            params: 电路参数（额定负载）
            reference: 参考电压描述
            cache: 离散化缓存
        """
        self.params = params
        self.reference = reference
        self.cache = cache if cache is not None else default_cache()

    @property
    @abstractmethod
    def decision_beats(self) -> int:
        """两次决策之间的控制节拍数"""
        pass

    @abstractmethod
    def w_hat_from_forecast(self, forecast: np.ndarray) -> np.ndarray:
        """把估计器的逐节拍预测转换为控制器所需的扰动序列"""
        pass

    @abstractmethod
    def decide(self, state: PhaseState, phase: PhaseId, t_k: float, w_hat: np.ndarray) -> ControlDecision:
        """在控制时刻 t_k 求解一次滚动优化"""
        pass
