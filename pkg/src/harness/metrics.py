"""
跟踪误差指标

由闭环日志计算初始误差、调节时间、稳态误差统计、扰动超调、
开关频率以及扰动估计误差
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional

import numpy as np
import pandas as pd

from ..automaton.hybrid_automaton import ControlSymbol, count_switch_events
from ..utils.logger import get_logger

if TYPE_CHECKING:
    from .scenario import ScenarioConfig


logger = get_logger(__name__)


@dataclass
class EdgeEstimate:
    """一次扰动跳变后的估计误差

    signed_error 为窗口内 |w − ŵ| 最大处的 w − ŵ；convergence_time 为
    误差进入收敛带并保持到下一个跳变的时刻与跳变时刻之差，未收敛为 None。
    """

    edge: float
    signed_error: float
    convergence_time: Optional[float]


@dataclass
class PhaseMetrics:
    """单相跟踪误差指标 (V, s)"""

    initial_error: float
    settling_time: Optional[float]
    settled: bool
    mean_abs_error: float
    std_error: float
    max_error: float
    overshoots: Dict[float, float] = field(default_factory=dict)
    switching_frequency: float = 0.0
    decisions: int = 0
    cost_evaluations: int = 0
    rls: List[EdgeEstimate] = field(default_factory=list)


@dataclass
class MetricsReport:
    """一次运行的指标，按相别 "A"/"B"/"C" 索引"""

    mode: str
    case: int
    phases: Dict[str, PhaseMetrics] = field(default_factory=dict)

    def rls_overshoots(self) -> Dict[float, float]:
        """各跳变处三相中幅值最大的估计误差 (Ω)"""
        result: Dict[float, float] = {}
        for metrics in self.phases.values():
            for estimate in metrics.rls:
                current = result.get(estimate.edge)
                if current is None or abs(estimate.signed_error) > abs(current):
                    result[estimate.edge] = estimate.signed_error
        return dict(sorted(result.items()))


def settling_index(abs_error: np.ndarray, threshold: float, hold_samples: int) -> Optional[int]:
    """首个满足 |e| < 阈值 并保持 hold_samples 个后续采样的下标

    日志末尾不足一个完整保持窗口的采样不能判定为已调节。
    """
    n = len(abs_error)
    below = abs_error < threshold
    # run[i]: 自 i 起连续低于阈值的采样数
    run = np.zeros(n + 1, dtype=int)
    for i in range(n - 1, -1, -1):
        run[i] = run[i + 1] + 1 if below[i] else 0
    for i in range(n):
        if run[i] >= hold_samples + 1:
            return i
    return None


def _window_mask(t: np.ndarray, start: float, width: float) -> np.ndarray:
    return (t >= start) & (t < start + width)


def _edge_estimates(
    t: np.ndarray, estimate_error: np.ndarray, edges: List[float], window: float, band: float
) -> List[EdgeEstimate]:
    estimates = []
    for j, edge in enumerate(edges):
        mask = _window_mask(t, edge, window)
        if not np.any(mask):
            continue
        segment = estimate_error[mask]
        signed = float(segment[int(np.argmax(np.abs(segment)))])

        next_edge = edges[j + 1] if j + 1 < len(edges) else np.inf
        span = (t >= edge) & (t < next_edge)
        span_t = t[span]
        inside = np.abs(estimate_error[span]) <= band
        convergence = None
        if len(inside) and inside[-1]:
            outside = np.flatnonzero(~inside)
            first = 0 if len(outside) == 0 else int(outside[-1]) + 1
            convergence = float(span_t[first] - edge)
        estimates.append(EdgeEstimate(edge=edge, signed_error=signed, convergence_time=convergence))
    return estimates


def phase_metrics(frame: pd.DataFrame, cfg: "ScenarioConfig") -> PhaseMetrics:
    """计算单相指标

    Args:
        frame: 单相日志，按时间递增
        cfg: 场景配置

    Returns:
        单相指标
    """
    t = frame["t"].to_numpy(dtype=float)
    abs_error = np.abs(frame["error"].to_numpy(dtype=float))
    f_sol = cfg.solver.f_sol
    threshold = cfg.metrics.settling_fraction * cfg.reference.amplitude
    hold = int(round(cfg.metrics.hold_window * f_sol))

    index = settling_index(abs_error, threshold, hold)
    settled = index is not None
    if settled:
        start = index
        settling_time = float(t[index] - t[0])
    else:
        start = min(int(round(2 * cfg.metrics.hold_window * f_sol)), len(t) - 1)
        settling_time = None
        logger.warning(f"误差未进入 {threshold:.2f} V 调节带，统计自 t={t[start]:.6f}s 起")

    steady = abs_error[start:]
    overshoots = {}
    for edge in cfg.disturbance.edges():
        mask = _window_mask(t, edge, cfg.metrics.overshoot_window)
        if np.any(mask):
            overshoots[edge] = float(abs_error[mask].max())

    symbols = [ControlSymbol(int(s)) for s in frame["sigma"].to_numpy()]
    events = count_switch_events(symbols)
    elapsed = len(t) / f_sol
    # 每个开关器件一个周期动作两次
    switching_frequency = events / (2 * 2 * elapsed) if elapsed > 0 else 0.0

    rls = []
    if cfg.estimator_active:
        estimate_error = frame["w_true"].to_numpy(dtype=float) - frame["w_hat_first"].to_numpy(dtype=float)
        rls = _edge_estimates(
            t,
            estimate_error,
            cfg.disturbance.edges(),
            cfg.metrics.overshoot_window,
            cfg.metrics.convergence_band,
        )

    return PhaseMetrics(
        initial_error=float(abs_error[0]),
        settling_time=settling_time,
        settled=settled,
        mean_abs_error=float(steady.mean()),
        std_error=float(steady.std()),
        max_error=float(steady.max()),
        overshoots=overshoots,
        switching_frequency=switching_frequency,
        rls=rls,
    )


def compute_metrics(log: pd.DataFrame, cfg: "ScenarioConfig") -> MetricsReport:
    """按相计算跟踪误差指标

    Args:
        log: 闭环日志
        cfg: 场景配置

    Returns:
        指标报告，空日志时不含任何相
    """
    report = MetricsReport(mode=cfg.mode, case=cfg.case)
    if log.empty:
        logger.warning("日志为空，跳过指标计算")
        return report

    for phase, frame in log.groupby("phase", sort=True):
        report.phases[str(phase)] = phase_metrics(frame, cfg)
        metrics = report.phases[str(phase)]
        logger.info(
            f"{cfg.mode.upper()} 工况{cfg.case} {phase}相: 初始误差={metrics.initial_error:.2f}V "
            f"调节时间={'未调节' if metrics.settling_time is None else f'{metrics.settling_time * 1e3:.3f}ms'} "
            f"均值={metrics.mean_abs_error:.3f}V 标准差={metrics.std_error:.3f}V"
        )
    return report
