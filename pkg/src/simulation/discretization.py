"""
精确离散化

对分段仿射系统 ẋ = A·x + b 用增广矩阵指数求一步精确解，
并按 (电路参数, 模式, 负载, 步长) 缓存离散化结果
"""

import math
import threading
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from ..circuit.circuit_model import AffineDynamics, CircuitParams, SwitchMode, check_load, dynamics_for_mode
from ..utils.exceptions import NumericError, ParameterDomainError
from ..utils.logger import get_logger


logger = get_logger(__name__)


@dataclass(frozen=True)
class DiscreteAffine:
    """离散化后的一步映射 x⁺ = phi·x + gamma"""

    phi: np.ndarray
    gamma: np.ndarray


def discretize(dyn: AffineDynamics, dt: float) -> DiscreteAffine:
    """求仿射动力学在步长 dt 上的精确离散化

    Args:
        dyn: 仿射动力学
        dt: 步长 (s)

    Returns:
        离散一步映射

    Raises:
        ParameterDomainError: 步长非正
        NumericError: 矩阵指数结果非有限值
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ParameterDomainError(f"步长必须为正有限值，实际为 {dt}")

    n = dyn.a.shape[0]

    # M = [A  b]
    #     [0  0]
    augmented = np.zeros((n + 1, n + 1))
    augmented[:n, :n] = dyn.a
    augmented[:n, n] = dyn.b

    # e^(M·dt) = [phi  gamma]
    #            [ 0     1  ]
    transition = expm(augmented * dt)
    if not np.all(np.isfinite(transition)):
        logger.error(f"矩阵指数结果非有限值, dt={dt}")
        raise NumericError(f"矩阵指数结果非有限值, dt={dt}")

    phi = np.ascontiguousarray(transition[:n, :n])
    gamma = np.ascontiguousarray(transition[:n, n])
    phi.setflags(write=False)
    gamma.setflags(write=False)
    return DiscreteAffine(phi=phi, gamma=gamma)


def propagate(phi: np.ndarray, gamma: np.ndarray, states: np.ndarray) -> np.ndarray:
    """执行一步离散映射

    phi 可以是共享的 (3, 3)，也可以是逐行的 (K, 3, 3)；states 为 (3,) 或 (K, 3)。
    按分量逐项展开计算，单条轨迹与批量轨迹的同一行结果逐位一致。

    Args:
        phi: 状态转移矩阵
        gamma: 常数项
        states: 当前状态

    Returns:
        下一时刻状态
    """
    x1 = states[..., 0]
    x2 = states[..., 1]
    x3 = states[..., 2]
    result = np.empty(np.shape(states), dtype=float)
    for i in range(3):
        result[..., i] = phi[..., i, 0] * x1 + phi[..., i, 1] * x2 + phi[..., i, 2] * x3 + gamma[..., i]
    return result


class DiscretizationCache:
    """离散化结果缓存

    键为 (电路参数, 模式, 负载电阻位模式, 步长位模式)，插入由锁保护。
    """

    def __init__(self, max_entries: int = 200_000):
        """初始化缓存

        Args:
            max_entries: 最大条目数，超过后整体清空
        """
        self.max_entries = max_entries
        self._entries: Dict[Tuple, DiscreteAffine] = {}
        self._lock = threading.Lock()
        self.misses = 0

    def get(self, params: CircuitParams, mode: SwitchMode, r_load_effective: float, dt: float) -> DiscreteAffine:
        """获取某一模式的离散化结果

        m3 下 x1 恒为 0，因此其转移矩阵第一行与常数项第一个分量置零。

        Args:
            params: 电路参数
            mode: 开关模式
            r_load_effective: 等效负载电阻 (Ω)
            dt: 步长 (s)

        Returns:
            离散一步映射
        """
        mode = SwitchMode(mode)
        r_load = check_load(r_load_effective)
        key = (params, int(mode), r_load.hex(), float(dt).hex())

        with self._lock:
            cached = self._entries.get(key)
        if cached is not None:
            return cached

        logger.debug(f"离散化缓存未命中: 模式 {mode.name}, R={r_load:.6g} Ω, dt={float(dt):.3g} s")
        discrete = discretize(dynamics_for_mode(params, mode, r_load), float(dt))
        if mode is SwitchMode.M3:
            phi = np.array(discrete.phi)
            gamma = np.array(discrete.gamma)
            phi[0, :] = 0.0
            gamma[0] = 0.0
            phi.setflags(write=False)
            gamma.setflags(write=False)
            discrete = DiscreteAffine(phi=phi, gamma=gamma)

        with self._lock:
            if len(self._entries) >= self.max_entries:
                logger.debug(f"离散化缓存达到上限 {self.max_entries}，清空")
                self._entries.clear()
            discrete = self._entries.setdefault(key, discrete)
            self.misses += 1
        return discrete

    def stack(self, params: CircuitParams, r_load_effective: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        """三种模式的离散化结果堆叠

        Args:
            params: 电路参数
            r_load_effective: 等效负载电阻 (Ω)
            dt: 步长 (s)

        Returns:
            (phi_stack, gamma_stack)，形状分别为 (3, 3, 3) 与 (3, 3)，下标为模式编号减一
        """
        entries = [self.get(params, mode, r_load_effective, dt) for mode in SwitchMode]
        phi_stack = np.stack([entry.phi for entry in entries])
        gamma_stack = np.stack([entry.gamma for entry in entries])
        return phi_stack, gamma_stack

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


_DEFAULT_CACHE: Optional[DiscretizationCache] = None
_DEFAULT_CACHE_LOCK = threading.Lock()


def default_cache() -> DiscretizationCache:
    """进程级共享缓存"""
    global _DEFAULT_CACHE
    with _DEFAULT_CACHE_LOCK:
        if _DEFAULT_CACHE is None:
            _DEFAULT_CACHE = DiscretizationCache()
        return _DEFAULT_CACHE
