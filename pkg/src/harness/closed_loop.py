"""
闭环仿真

三相各自独立运行 控制器 → 自动机 → 真实系统 → 扰动估计 的闭环，
输出按相、按时间排列的求解步日志
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..automaton.hybrid_automaton import Automaton, ControlSymbol, apply_transition
from ..circuit.circuit_model import PhaseId, output_arrays
from ..control.controller_factory import ControllerFactory
from ..estimation.rls_estimator import DisturbanceEstimator
from ..simulation.discretization import DiscretizationCache, default_cache
from ..simulation.plant_simulator import plant_advance
from ..utils.logger import get_logger, log_execution_time
from .metrics import MetricsReport, compute_metrics
from .scenario import ScenarioConfig


logger = get_logger(__name__)


LOG_COLUMNS: Tuple[str, ...] = (
    "t",
    "phase",
    "sigma",
    "d1",
    "d2",
    "d3",
    "x1",
    "x2",
    "x3",
    "v_o",
    "v_ref",
    "error",
    "r_load_true",
    "w_sample",
    "w_hat_first",
    "s_up",
    "s_down",
    "w_true",
)

PHASES: Tuple[PhaseId, ...] = (PhaseId.A, PhaseId.B, PhaseId.C)


def empty_log() -> pd.DataFrame:
    """只有表头的日志"""
    return pd.DataFrame({name: pd.Series(dtype=object if name == "phase" else float) for name in LOG_COLUMNS})


@dataclass
class PhaseRun:
    """单相闭环运行结果"""

    phase: PhaseId
    frame: pd.DataFrame
    decisions: int = 0
    cost_evaluations: int = 0
    hold_samples: int = 0
    clamped_forecasts: int = 0


@dataclass
class ScenarioResult:
    """一次场景运行的日志与指标"""

    config: ScenarioConfig
    log: pd.DataFrame
    report: MetricsReport
    runs: Dict[PhaseId, PhaseRun] = field(default_factory=dict)


def clamp_forecast(w_hat: np.ndarray, r_load_nominal: float, min_fraction: float) -> Tuple[np.ndarray, bool]:
    """把扰动预测限制在 R + ŵ ≥ min_fraction·R 内

    Returns:
        (限幅后的预测, 是否发生限幅)
    """
    floor = (min_fraction - 1.0) * r_load_nominal
    clamped = np.maximum(np.asarray(w_hat, dtype=float), floor)
    return clamped, bool(np.any(clamped != w_hat))


def run_phase(
    cfg: ScenarioConfig, phase: PhaseId, cache: Optional[DiscretizationCache] = None
) -> PhaseRun:
    """运行单相闭环

    每个控制节拍：必要时求解一次滚动优化，执行迁移，真实系统推进
    一个节拍的求解步；工况3在节拍末采样扰动并更新RLS。

    Args:
        cfg: 场景配置
        phase: 相别
        cache: 离散化缓存

    Returns:
        单相运行结果
    """
    cache = cache if cache is not None else default_cache()
    params = cfg.circuit
    profile = cfg.disturbance
    samples_per_beat = cfg.horizon.cost_samples_per_beat
    dt_sol = cfg.solver.dt_sol
    f_sol = cfg.solver.f_sol
    total = cfg.total_samples
    total_beats = -(-total // samples_per_beat)

    controller = ControllerFactory.create_controller(
        cfg.mode, params, cfg.reference, cfg.horizon, cfg.pwm, cache
    )
    estimator = DisturbanceEstimator(params, cfg.rls, cache) if cfg.estimator_active else None
    state = Automaton().initial_state()

    run = PhaseRun(phase=phase, frame=empty_log())
    columns = {name: np.zeros(total) for name in LOG_COLUMNS if name != "phase"}

    pending: Tuple[ControlSymbol, ...] = ()
    duty = (np.nan, np.nan, np.nan)
    w_sample = 0.0
    w_first = 0.0

    beats = tqdm(range(total_beats), desc=f"{cfg.mode.upper()} {phase.value}", disable=not cfg.progress, leave=False)
    for k in beats:
        offset = k % controller.decision_beats
        if offset == 0:
            t_k = k * samples_per_beat / f_sol
            forecast = estimator.forecast() if estimator is not None else np.zeros(cfg.rls.n_e)
            w_hat, clamped = clamp_forecast(
                controller.w_hat_from_forecast(forecast), params.r_load_nominal, cfg.rls.min_load_fraction
            )
            if clamped:
                run.clamped_forecasts += 1
                logger.warning(f"{phase.value}相 t={t_k:.6f}s 扰动预测越界，已限幅到 {w_hat[0]:.3f} Ω")
            decision = controller.decide(state, phase, t_k, w_hat)
            pending = decision.beats
            if decision.duty is not None:
                duty = decision.duty.fractions()
            run.decisions += 1
            run.cost_evaluations += decision.candidates
            w_first = float(w_hat[0])

        sigma = pending[offset]
        previous = state
        state = apply_transition(state, sigma)
        s_up, s_down = sigma.target_mode.switch_pair

        for s in range(samples_per_beat):
            i = k * samples_per_beat + s
            if i >= total:
                break
            t = i / f_sol
            shift = profile.value_at(t)
            r_true = params.r_load_nominal + shift
            v_o, _, _ = output_arrays(params, state.as_vector().reshape(1, 3), r_true)

            columns["t"][i] = t
            columns["sigma"][i] = int(sigma)
            columns["d1"][i], columns["d2"][i], columns["d3"][i] = duty
            columns["x1"][i], columns["x2"][i], columns["x3"][i] = state.x1, state.x2, state.x3
            columns["v_o"][i] = v_o[0]
            columns["r_load_true"][i] = r_true
            columns["w_sample"][i] = w_sample
            columns["w_hat_first"][i] = w_first
            columns["s_up"][i] = s_up
            columns["s_down"][i] = s_down
            columns["w_true"][i] = shift

            state = plant_advance(params, state, profile, t, dt_sol, cache)

        if estimator is not None:
            t_end = (k + 1) * samples_per_beat / f_sol
            r_measured = params.r_load_nominal + profile.value_at(t_end)
            w_sample = estimator.observe(previous, sigma, state, r_measured, dt_sol, samples_per_beat)

    columns["v_ref"] = cfg.reference.values(phase, columns["t"])
    columns["error"] = columns["v_o"] - columns["v_ref"]

    frame = pd.DataFrame(columns).astype({"sigma": int, "s_up": int, "s_down": int})
    frame.insert(1, "phase", phase.value)
    run.frame = frame[list(LOG_COLUMNS)]
    if estimator is not None:
        run.hold_samples = estimator.hold_count

    logger.debug(
        f"{phase.value}相 完成: {run.decisions} 次决策, {run.cost_evaluations} 次代价评估, "
        f"{run.hold_samples} 次保持采样"
    )
    return run


@log_execution_time
def run_scenario(cfg: ScenarioConfig, cache: Optional[DiscretizationCache] = None) -> ScenarioResult:
    """运行三相闭环并计算指标

    三相互不耦合，按 runtime.workers 并行；结果按 A、B、C 顺序拼接。

    Args:
        cfg: 场景配置
        cache: 离散化缓存

    Returns:
        场景运行结果
    """
    cache = cache if cache is not None else default_cache()
    logger.info(
        f"开始仿真: 模式={cfg.mode.upper()} 工况={cfg.case} 时长={cfg.duration}s 求解步数={cfg.total_samples}"
    )

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=min(cfg.workers, len(PHASES))) as executor:
            runs: List[PhaseRun] = list(executor.map(lambda p: run_phase(cfg, p, cache), PHASES))
    else:
        runs = [run_phase(cfg, p, cache) for p in PHASES]

    if cfg.total_samples == 0:
        log = empty_log()
    else:
        log = pd.concat([run.frame for run in runs], ignore_index=True)

    report = compute_metrics(log, cfg)
    for run in runs:
        phase_metrics = report.phases.get(run.phase.value)
        if phase_metrics is not None:
            phase_metrics.decisions = run.decisions
            phase_metrics.cost_evaluations = run.cost_evaluations

    logger.info(f"仿真结束: 模式={cfg.mode.upper()} 工况={cfg.case}")
    return ScenarioResult(config=cfg, log=log, report=report, runs={run.phase: run for run in runs})
