"""
测试 OPCM 占空比控制
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.automaton.hybrid_automaton import ControlSymbol
from src.circuit.circuit_model import CircuitParams, PhaseId, PhaseState, SwitchMode
from src.control.odcm_controller import ControlSequence, HorizonConfig, predict_trajectory, search_horizon
from src.control.opcm_controller import (
    DutyTriple,
    OpcmController,
    PwmConfig,
    enumerate_duty_candidates,
    expand_duty_to_beats,
    predict_pwm_period,
    search_duty,
    select_duty,
)
from src.control.reference import ReferenceSpec
from src.simulation.discretization import DiscretizationCache
from src.utils.exceptions import ParameterDomainError
from src.utils.logger import setup_logging


class TestOpcmController:
    """OPCM 控制器测试类"""

    @classmethod
    def setup_class(cls):
        """测试类初始化"""
        setup_logging({"level": "DEBUG", "console_output": False, "file_output": False})
        cls.params = CircuitParams()
        cls.spec = ReferenceSpec()
        cls.cfg = PwmConfig()
        cls.cache = DiscretizationCache()
        cls.rng = np.random.default_rng(11)

    def test_period_geometry(self):
        """4 kHz PWM 每周期 5 个控制节拍"""
        assert self.cfg.beats_per_period == 5
        assert self.cfg.t_pwm == pytest.approx(2.5e-4)
        assert self.cfg.samples_per_period == 25

    def test_incompatible_frequency_rejected(self):
        """控制频率必须是PWM频率的整数倍"""
        with pytest.raises(ValidationError):
            PwmConfig(f_pwm=3_000)

    def test_candidate_enumeration(self):
        """B = 5 时共 21 个候选，按 n_d1、n_d2 升序"""
        candidates = enumerate_duty_candidates(self.cfg)
        assert len(candidates) == 21
        assert (candidates[0].n_d1, candidates[0].n_d2) == (0, 0)
        assert (candidates[1].n_d1, candidates[1].n_d2) == (0, 1)
        assert (candidates[-1].n_d1, candidates[-1].n_d2) == (5, 0)
        for duty in candidates:
            assert duty.d1 + duty.d2 + duty.d3 == pytest.approx(1.0, abs=1e-12)
            assert min(duty.fractions()) >= 0.0

    def test_duty_bounds(self):
        """越界的占空比被拒绝"""
        with pytest.raises(ParameterDomainError):
            DutyTriple(4, 2, 5)
        with pytest.raises(ParameterDomainError):
            DutyTriple(-1, 0, 5)

    def test_expand_duty(self):
        """占空比展开为逐节拍控制符号"""
        assert expand_duty_to_beats(DutyTriple(2, 1, 5), self.cfg) == [1, 1, 2, 3, 3]
        assert expand_duty_to_beats(DutyTriple(0, 0, 5), self.cfg) == [ControlSymbol.TO_M3] * 5
        assert expand_duty_to_beats(DutyTriple(5, 0, 5), self.cfg) == [ControlSymbol.TO_M1] * 5
        with pytest.raises(ParameterDomainError):
            expand_duty_to_beats(DutyTriple(1, 1, 4), self.cfg)

    def test_period_prediction_matches_sequence(self):
        """一个PWM周期的预测等于对应 5 步序列的预测"""
        horizon = HorizonConfig(n_steps=5)
        for _ in range(5):
            x0 = PhaseState(float(self.rng.normal(scale=3.0)), float(self.rng.normal(scale=3.0)),
                            float(self.rng.normal(scale=200.0)), SwitchMode.M1)
            duty = DutyTriple(int(self.rng.integers(0, 3)), int(self.rng.integers(0, 3)), 5)
            w_hat = float(self.rng.uniform(-50.0, 50.0))

            period = predict_pwm_period(self.params, x0, duty, w_hat, self.cfg, self.cache)
            seq = ControlSequence.of([int(s) for s in expand_duty_to_beats(duty, self.cfg)])
            trajectory = predict_trajectory(self.params, x0, seq, np.full(5, w_hat), horizon, self.cache)
            assert period.tobytes() == trajectory.tobytes()

    def test_odcm_never_worse_than_opcm(self):
        """100 个随机状态上 OPCM 候选都是 ODCM 序列，最优代价不低于 ODCM"""
        horizon = HorizonConfig(n_steps=5)
        candidates = enumerate_duty_candidates(self.cfg)
        for _ in range(100):
            mode = SwitchMode(int(self.rng.integers(1, 4)))
            x1 = 0.0 if mode is SwitchMode.M3 else float(self.rng.normal(scale=3.0))
            x0 = PhaseState(x1, float(self.rng.normal(scale=3.0)), float(self.rng.normal(scale=200.0)), mode)
            phase = PhaseId(["A", "B", "C"][int(self.rng.integers(0, 3))])
            t_k = float(self.rng.integers(0, 2000)) * horizon.dt_c
            w_hat = float(self.rng.uniform(-50.0, 50.0))

            odcm = search_horizon(self.params, x0, self.spec, phase, t_k, np.full(5, w_hat), horizon, self.cache)
            opcm = search_duty(self.params, x0, self.spec, phase, t_k, np.array([w_hat]), self.cfg, self.cache)
            assert odcm.cost <= opcm.cost
            assert opcm.candidates == 21

            for duty in candidates:
                period = predict_pwm_period(self.params, x0, duty, w_hat, self.cfg, self.cache)
                seq = ControlSequence.of([int(s) for s in expand_duty_to_beats(duty, self.cfg)])
                trajectory = predict_trajectory(self.params, x0, seq, np.full(5, w_hat), horizon, self.cache)
                np.testing.assert_allclose(period, trajectory, rtol=1e-12, atol=0)

    def test_zero_reference_keeps_m3(self):
        """零参考、零状态时整个周期保持 m3"""
        spec = ReferenceSpec(amplitude=0.0)
        duty = select_duty(self.params, PhaseState(0.0, 0.0, 0.0), spec, PhaseId.A, 0.0, np.zeros(1), self.cfg, self.cache)
        assert duty.fractions() == (0.0, 0.0, 1.0)

    def test_select_duty(self):
        """select_duty 返回首周期最优占空比"""
        x0 = PhaseState(0.0, 0.0, 0.0)
        duty = select_duty(self.params, x0, self.spec, PhaseId.A, 0.0, np.zeros(1), self.cfg, self.cache)
        result = search_duty(self.params, x0, self.spec, PhaseId.A, 0.0, np.zeros(1), self.cfg, self.cache)
        assert duty == result.duty
        assert result.schedule == (result.duty,)

    def test_multi_period_search(self):
        """N_PWM = 2 时在 21² 个组合中搜索"""
        cfg = PwmConfig(n_periods=2)
        result = search_duty(self.params, PhaseState(0.0, 0.0, 0.0), self.spec, PhaseId.A, 0.0, np.zeros(2), cfg, self.cache)
        assert result.candidates == 441
        assert len(result.schedule) == 2

    def test_controller_decision(self):
        """OPCM 每次决策覆盖一个PWM周期"""
        controller = OpcmController(self.params, self.spec, self.cfg, self.cache)
        decision = controller.decide(PhaseState(0.0, 0.0, 0.0), PhaseId.C, 0.0, np.zeros(1))
        assert controller.decision_beats == 5
        assert len(decision.beats) == 5
        assert decision.beats == tuple(expand_duty_to_beats(decision.duty, self.cfg))

    def test_forecast_averaging(self):
        """逐节拍扰动预测按周期取均值"""
        controller = OpcmController(self.params, self.spec, self.cfg, self.cache)
        np.testing.assert_allclose(controller.w_hat_from_forecast(np.array([10.0, 20.0, 30.0, 40.0, 50.0])), [30.0])
        np.testing.assert_allclose(controller.w_hat_from_forecast(np.array([10.0, 20.0])), [18.0])
        np.testing.assert_array_equal(controller.w_hat_from_forecast(np.array([])), [0.0])
