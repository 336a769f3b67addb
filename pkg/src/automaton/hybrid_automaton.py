"""
单相混合自动机

实现模式迁移、进入 m3 时的状态重置、控制符号编码以及到开关状态的解码。
迁移只在控制节拍上发生，九种有序模式对全部可执行。
"""

from dataclasses import dataclass
from enum import IntEnum
from itertools import product
from typing import Dict, FrozenSet, Iterable, Mapping, Tuple

import numpy as np

from ..circuit.circuit_model import PhaseId, PhaseState, SwitchMode


class ControlSymbol(IntEnum):
    """离散控制符号，值 j 表示迁移到模式 m_j（允许自迁移）"""

    TO_M1 = 1
    TO_M2 = 2
    TO_M3 = 3

    @property
    def target_mode(self) -> SwitchMode:
        """目标模式"""
        return SwitchMode(int(self))


@dataclass(frozen=True)
class SwitchStates:
    """一对桥臂开关状态 (S_up, S_down)"""

    s_up: int
    s_down: int

    def __post_init__(self):
        if self.s_up and self.s_down:
            raise ValueError("上下管同时导通会造成直流侧短路")

    def as_tuple(self) -> Tuple[int, int]:
        return (self.s_up, self.s_down)


_DECODE_TABLE: Dict[ControlSymbol, SwitchStates] = {
    ControlSymbol.TO_M1: SwitchStates(1, 0),
    ControlSymbol.TO_M2: SwitchStates(0, 1),
    ControlSymbol.TO_M3: SwitchStates(0, 0),
}


def apply_transition(state: PhaseState, sigma: ControlSymbol) -> PhaseState:
    """执行一次控制符号对应的模式迁移

    进入 m3 时 x1 被重置为 0，其余迁移不改变连续状态。

    Args:
        state: 当前相状态
        sigma: 控制符号

    Returns:
        迁移后的相状态
    """
    target = ControlSymbol(sigma).target_mode
    x1 = 0.0 if target is SwitchMode.M3 else state.x1
    return PhaseState(x1, state.x2, state.x3, target)


def apply_transition_batch(states: np.ndarray, modes: np.ndarray) -> np.ndarray:
    """批量执行迁移重置

    Args:
        states: 形状 (K, 3) 的状态数组
        modes: 形状 (K,) 的目标模式编号 (1, 2, 3)

    Returns:
        重置后的状态数组副本
    """
    reset = np.array(states, dtype=float, copy=True)
    reset[modes == int(SwitchMode.M3), 0] = 0.0
    return reset


def decode_to_switches(sigma: ControlSymbol) -> SwitchStates:
    """把控制符号解码为开关状态

    Args:
        sigma: 控制符号

    Returns:
        σ=1 → (1,0)，σ=2 → (0,1)，σ=3 → (0,0)
    """
    return _DECODE_TABLE[ControlSymbol(sigma)]


def decode_inverter_switches(sigmas: Mapping[PhaseId, ControlSymbol]) -> Tuple[int, int, int, int, int, int]:
    """把三相控制符号解码为 (S1, S2, S3, S4, S5, S6)

    Args:
        sigmas: 各相控制符号

    Returns:
        六个开关的状态，依次为 A、B、C 相的上下管
    """
    states = []
    for phase in (PhaseId.A, PhaseId.B, PhaseId.C):
        states.extend(decode_to_switches(sigmas[phase]).as_tuple())
    return tuple(states)


def count_switch_events(symbols: Iterable[ControlSymbol]) -> int:
    """统计相邻节拍之间开关器件的动作次数

    每个开关由 0→1 或 1→0 计一次。

    Args:
        symbols: 按时间排列的控制符号

    Returns:
        开关动作总次数
    """
    events = 0
    previous = None
    for sigma in symbols:
        current = decode_to_switches(sigma).as_tuple()
        if previous is not None:
            events += (current[0] != previous[0]) + (current[1] != previous[1])
        previous = current
    return events


class Automaton:
    """单相混合自动机

    守卫集合在本模型中没有与状态相关的条件，所有迁移由控制时钟触发。
    """

    def __init__(self):
        self.modes: FrozenSet[SwitchMode] = frozenset(SwitchMode)
        self.executions: FrozenSet[Tuple[SwitchMode, SwitchMode]] = frozenset(product(SwitchMode, SwitchMode))

    def initial_state(self) -> PhaseState:
        """初始条件：模式 m3，连续状态为零"""
        return PhaseState(0.0, 0.0, 0.0, SwitchMode.M3)

    def is_admissible(self, from_mode: SwitchMode, to_mode: SwitchMode) -> bool:
        """迁移 (from_mode, to_mode) 是否属于执行集合"""
        return (SwitchMode(from_mode), SwitchMode(to_mode)) in self.executions

    def step(self, state: PhaseState, sigma: ControlSymbol) -> PhaseState:
        """执行一次迁移"""
        return apply_transition(state, sigma)
