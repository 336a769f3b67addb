"""
测试参考电压与 ODCM 滚动优化
"""

import logging
import math
import sys
from itertools import product
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.automaton.hybrid_automaton import ControlSymbol
from src.circuit.circuit_model import CircuitParams, PhaseId, PhaseState, SwitchMode
from src.control.controller_factory import ControllerFactory
from src.control.odcm_controller import (
    ControlSequence,
    HorizonConfig,
    OdcmController,
    enumerate_sequences,
    predict_trajectory,
    reference_window,
    search_horizon,
    select_control,
)
from src.control.opcm_controller import OpcmController, PwmConfig
from src.control.reference import ReferenceSpec, reference_samples
from src.control.rollout import rollout_batch, trajectory_cost
from src.simulation.discretization import DiscretizationCache
from src.utils.exceptions import ParameterDomainError
from src.utils.logger import get_logger, setup_logging


def _random_state(rng: np.random.Generator) -> PhaseState:
    mode = SwitchMode(int(rng.integers(1, 4)))
    x1 = 0.0 if mode is SwitchMode.M3 else float(rng.normal(scale=5.0))
    return PhaseState(x1, float(rng.normal(scale=5.0)), float(rng.normal(scale=300.0)), mode)


class _RecordingHandler(logging.Handler):
    def __init__(self):
        super().__init__(level=logging.DEBUG)
        self.records = []

    def emit(self, record):
        self.records.append(record)


class TestReference:
    """参考电压测试类"""

    @classmethod
    def setup_class(cls):
        """测试类初始化"""
        setup_logging({"level": "DEBUG", "console_output": False, "file_output": False})
        cls.spec = ReferenceSpec()

    def test_initial_values(self):
        """三相初值"""
        assert self.spec.value_at(PhaseId.A, 0.0) == pytest.approx(190.0)
        assert self.spec.value_at(PhaseId.B, 0.0) == pytest.approx(190.0)
        assert self.spec.value_at(PhaseId.C, 0.0) == pytest.approx(-380.0)

    def test_first_solver_sample(self):
        """t = 10 µs 处的 A 相参考值"""
        expected = 380.0 * math.sin(2 * math.pi * 50 * 1e-5 + math.pi / 6)
        assert self.spec.value_at(PhaseId.A, 1e-5) == pytest.approx(expected, abs=1e-9)

    def test_reference_samples_start_after_tk(self):
        """参考采样从 t_k 之后第一个求解步开始"""
        samples = reference_samples(self.spec, PhaseId.B, 0.001, 5, 1e-5)
        times = 0.001 + np.arange(1, 6) * 1e-5
        np.testing.assert_allclose(samples, self.spec.values(PhaseId.B, times))

    def test_window_length(self):
        """ODCM 参考窗口 N·f_sol/f_c 个采样"""
        assert len(reference_window(self.spec, PhaseId.A, 0.0, HorizonConfig())) == 25


class TestOdcmController:
    """ODCM 控制器测试类"""

    @classmethod
    def setup_class(cls):
        """测试类初始化"""
        setup_logging({"level": "DEBUG", "console_output": False, "file_output": False})
        cls.params = CircuitParams()
        cls.spec = ReferenceSpec()
        cls.cache = DiscretizationCache()
        cls.rng = np.random.default_rng(42)

    def test_enumeration_order(self):
        """里程表顺序，最后一个符号变化最快"""
        table = enumerate_sequences(5)
        assert table.shape == (243, 5)
        assert table[0].tolist() == [1, 1, 1, 1, 1]
        assert table[1].tolist() == [1, 1, 1, 1, 2]
        assert table[3].tolist() == [1, 1, 1, 2, 1]
        assert table[-1].tolist() == [3, 3, 3, 3, 3]
        assert len({tuple(row) for row in table}) == 243

    def test_predict_trajectory_length(self):
        """单条序列预测 N·f_sol/f_c 个输出"""
        cfg = HorizonConfig()
        seq = ControlSequence.of([1, 2, 3, 1, 2])
        out = predict_trajectory(self.params, PhaseState(0.0, 0.0, 0.0), seq, np.zeros(5), cfg, self.cache)
        assert out.shape == (25,)

    def test_search_matches_brute_force(self):
        """100 个随机状态上批量搜索与逐条穷举结果一致，N = 1..5"""
        for n_steps in (1, 2, 3, 4, 5):
            cfg = HorizonConfig(n_steps=n_steps)
            for _ in range(20):
                x0 = _random_state(self.rng)
                phase = PhaseId(["A", "B", "C"][int(self.rng.integers(0, 3))])
                t_k = float(self.rng.integers(0, 2000)) * cfg.dt_c
                w_hat = self.rng.uniform(-50.0, 50.0, size=n_steps)

                result = search_horizon(self.params, x0, self.spec, phase, t_k, w_hat, cfg, self.cache)

                reference = reference_window(self.spec, phase, t_k, cfg)
                best_cost, best_seq = math.inf, None
                for values in product((1, 2, 3), repeat=n_steps):
                    seq = ControlSequence.of(values)
                    cost = float(trajectory_cost(predict_trajectory(self.params, x0, seq, w_hat, cfg, self.cache), reference))
                    if cost < best_cost:
                        best_cost, best_seq = cost, seq

                assert result.sequence == best_seq
                assert result.cost == best_cost
                assert result.symbol == best_seq.symbols[0]
                assert result.candidates == 3 ** n_steps

    def test_argmin_invariant_under_positive_scaling(self):
        """参考与预测同乘正常数时最优序列不变"""
        cfg = HorizonConfig()
        sequences = enumerate_sequences(cfg.n_steps)
        loads = [self.params.r_load_nominal] * cfg.n_steps
        for _ in range(20):
            x0 = _random_state(self.rng)
            t_k = float(self.rng.integers(0, 2000)) * cfg.dt_c
            predictions = rollout_batch(
                self.params, x0.as_vector(), sequences, loads, cfg.cost_samples_per_beat, cfg.dt_sol, self.cache
            )
            reference = reference_window(self.spec, PhaseId.A, t_k, cfg)
            best = int(np.argmin(trajectory_cost(predictions, reference)))
            for scale in (0.5, 3.0, 4.0):
                scaled = trajectory_cost(scale * predictions, scale * reference)
                assert int(np.argmin(scaled)) == best

    def test_rest_state_prefers_discharge_free_mode(self):
        """零参考、零状态时保持 m3 代价为零"""
        spec = ReferenceSpec(amplitude=0.0)
        cfg = HorizonConfig(n_steps=3)
        result = search_horizon(self.params, PhaseState(0.0, 0.0, 0.0), spec, PhaseId.A, 0.0, np.zeros(3), cfg, self.cache)
        assert result.cost == 0.0
        assert result.sequence == ControlSequence.of([3, 3, 3])

    def test_select_control(self):
        """select_control 返回最优序列的首个符号"""
        cfg = HorizonConfig(n_steps=3)
        x0 = PhaseState(0.0, 0.0, 0.0)
        symbol = select_control(self.params, x0, self.spec, PhaseId.C, 0.0, np.zeros(3), cfg, self.cache)
        result = search_horizon(self.params, x0, self.spec, PhaseId.C, 0.0, np.zeros(3), cfg, self.cache)
        assert isinstance(symbol, ControlSymbol)
        assert symbol == result.symbol

    def test_large_positive_reference_drives_up(self):
        """正参考远高于输出时选择 m1"""
        cfg = HorizonConfig(n_steps=3)
        # A 相 t ≈ 3.33 ms 时参考为正峰值
        symbol = select_control(self.params, PhaseState(0.0, 0.0, 0.0), self.spec, PhaseId.A, 0.00333, np.zeros(3), cfg, self.cache)
        assert symbol is ControlSymbol.TO_M1

    def test_wrong_disturbance_length_rejected(self):
        """扰动估计长度必须为 N"""
        with pytest.raises(ParameterDomainError):
            search_horizon(self.params, PhaseState(0.0, 0.0, 0.0), self.spec, PhaseId.A, 0.0, np.zeros(2), HorizonConfig(), self.cache)

    def test_controller_decision(self):
        """ODCM 每次决策只执行一个节拍"""
        controller = OdcmController(self.params, self.spec, HorizonConfig(), self.cache)
        decision = controller.decide(PhaseState(0.0, 0.0, 0.0), PhaseId.A, 0.0, np.zeros(5))
        assert controller.decision_beats == 1
        assert len(decision.beats) == 1
        assert decision.candidates == 243
        assert decision.duty is None

    def test_forecast_fitting(self):
        """扰动预测按 N 截断或补齐"""
        controller = OdcmController(self.params, self.spec, HorizonConfig(n_steps=5), self.cache)
        np.testing.assert_array_equal(controller.w_hat_from_forecast(np.arange(7.0)), np.arange(5.0))
        np.testing.assert_array_equal(controller.w_hat_from_forecast(np.array([1.0, 2.0])), [1.0, 2.0, 2.0, 2.0, 2.0])
        np.testing.assert_array_equal(controller.w_hat_from_forecast(np.array([])), np.zeros(5))

    def test_factory(self):
        """工厂按模式名创建控制器"""
        odcm = ControllerFactory.create_controller("ODCM", self.params, self.spec, HorizonConfig(), PwmConfig())
        opcm = ControllerFactory.create_controller("opcm", self.params, self.spec, HorizonConfig(), PwmConfig())
        assert isinstance(odcm, OdcmController)
        assert isinstance(opcm, OpcmController)
        with pytest.raises(ValueError):
            ControllerFactory.create_controller("mpc", self.params, self.spec, HorizonConfig(), PwmConfig())

    def test_decisions_and_cache_misses_logged(self):
        """DEBUG 级别下记录每次决策与离散化缓存未命中，未知模式记录错误"""
        records = _RecordingHandler()
        names = [
            "src.control.odcm_controller.OdcmController",
            "src.control.opcm_controller.OpcmController",
            "src.simulation.discretization",
            "src.control.controller_factory",
        ]
        for name in names:
            get_logger(name).addHandler(records)
        try:
            state = PhaseState(0.0, 0.0, 0.0, SwitchMode.M3)
            OdcmController(self.params, self.spec, HorizonConfig(n_steps=2), DiscretizationCache()).decide(
                state, PhaseId.A, 0.0, np.zeros(2)
            )
            OpcmController(self.params, self.spec, PwmConfig(), DiscretizationCache()).decide(
                state, PhaseId.B, 0.0, np.zeros(1)
            )
            with pytest.raises(ValueError):
                ControllerFactory.create_controller("mpc", self.params, self.spec, HorizonConfig(), PwmConfig())
        finally:
            for name in names:
                get_logger(name).removeHandler(records)

        by_logger = {}
        for record in records.records:
            by_logger.setdefault(record.name, []).append(record)
        assert [r.levelno for r in by_logger[names[0]]] == [logging.DEBUG]
        assert "候选 9 条" in by_logger[names[0]][0].getMessage()
        assert [r.levelno for r in by_logger[names[1]]] == [logging.DEBUG]
        assert "候选 21 个" in by_logger[names[1]][0].getMessage()
        misses = [r for r in by_logger[names[2]] if "缓存未命中" in r.getMessage()]
        assert len(misses) >= 3
        assert [r.levelno for r in by_logger[names[3]]] == [logging.ERROR]
        assert "mpc" in by_logger[names[3]][0].getMessage()
