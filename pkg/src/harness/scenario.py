"""
场景配置

三种仿真工况的参数模型、默认值与配置文件/命令行覆盖的合并
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..circuit.circuit_model import CircuitParams
from ..control.odcm_controller import HorizonConfig
from ..control.opcm_controller import PwmConfig
from ..control.reference import ReferenceSpec
from ..estimation.rls_estimator import RlsConfig
from ..simulation.plant_simulator import DisturbanceProfile, SolverConfig
from ..utils.exceptions import ConfigValidationError
from ..utils.helpers import load_config, parse_override, set_by_path
from ..utils.logger import get_logger


logger = get_logger(__name__)

# 仓库自带的配置文件，存在时作为默认配置的第一层覆盖
DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "config.json"


DEFAULT_CONFIG: Dict[str, Any] = {
    "circuit": {
        "r_line": 0.5,
        "l_line": 0.0015,
        "l1": 0.009,
        "l2": 0.003,
        "c": 60e-6,
        "r_load_nominal": 100.0,
        "u_dc": 800.0,
    },
    "reference": {"amplitude": 380.0, "frequency": 50.0, "phase_a_deg": 30.0},
    "solver": {"f_sol": 100_000},
    "horizon": {"n_steps": 5, "f_c": 20_000, "cost_samples_per_beat": 5},
    "pwm": {"f_pwm": 4_000, "n_periods": 1},
    "rls": {
        "forgetting_factor": 1.0,
        "m": 10,
        "n_e": 5,
        "delta": 1e-3,
        "epsilon": 0.1,
        "f_e": 20_000,
        "min_load_fraction": 0.05,
    },
    "disturbance": {
        "intervals": [
            {"t_start": 0.02, "t_end": 0.05, "delta_r": 50.0},
            {"t_start": 0.05, "t_end": 0.08, "delta_r": -50.0},
        ]
    },
    "scenario": {
        "mode": "odcm",
        "case": 1,
        "duration": 0.1,
        "full_duration": 1.0,
        "output_dir": "./output",
    },
    "metrics": {
        "settling_fraction": 0.05,
        "hold_window": 0.0005,
        "overshoot_window": 0.005,
        "convergence_band": 1.0,
    },
    "logging": {"level": "INFO", "console_output": True, "file_output": False},
    "runtime": {"workers": 3, "progress": False},
}


class MetricsConfig(BaseModel):
    """跟踪误差指标配置"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    settling_fraction: float = Field(0.05, gt=0, lt=1, description="调节阈值占参考幅值的比例")
    hold_window: float = Field(0.0005, gt=0, description="调节判定的保持窗口 (s)")
    overshoot_window: float = Field(0.005, gt=0, description="扰动跳变后统计超调的窗口 (s)")
    convergence_band: float = Field(1.0, gt=0, description="估计收敛带宽 (Ω)")


class ScenarioConfig(BaseModel):
    """一次闭环仿真的完整配置"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["odcm", "opcm"] = "odcm"
    case: Literal[1, 2, 3] = 1
    duration: float = Field(0.1, gt=0)
    circuit: CircuitParams = CircuitParams()
    reference: ReferenceSpec = ReferenceSpec()
    solver: SolverConfig = SolverConfig()
    horizon: HorizonConfig = HorizonConfig()
    pwm: PwmConfig = PwmConfig()
    rls: RlsConfig = RlsConfig()
    disturbance: DisturbanceProfile = DisturbanceProfile()
    metrics: MetricsConfig = MetricsConfig()
    output_path: str = "./output"
    workers: int = Field(3, ge=1)
    progress: bool = False

    @model_validator(mode="after")
    def _check_consistency(self) -> "ScenarioConfig":
        if self.solver.f_sol != self.horizon.f_sol:
            raise ValueError(
                f"求解器频率 {self.solver.f_sol} 必须等于 f_c × 每节拍采样数 = {self.horizon.f_sol}"
            )
        if self.pwm.f_c != self.horizon.f_c or self.pwm.cost_samples_per_beat != self.horizon.cost_samples_per_beat:
            raise ValueError("PWM配置的控制频率与采样数必须与预测时域配置一致")
        if self.rls.f_e != self.horizon.f_c:
            raise ValueError(f"扰动采样频率 {self.rls.f_e} 必须等于控制频率 {self.horizon.f_c}")
        if self.case == 1 and self.disturbance.intervals:
            raise ValueError("工况1不允许负载扰动")
        if self.case in (2, 3) and not self.disturbance.intervals:
            raise ValueError(f"工况{self.case}需要负载扰动曲线")
        if self.circuit.r_load_nominal + self.disturbance.min_delta() <= 0.0:
            raise ValueError("扰动后的负载电阻必须为正")
        return self

    @property
    def estimator_active(self) -> bool:
        """是否启用RLS估计（仅工况3）"""
        return self.case == 3

    @property
    def total_samples(self) -> int:
        """求解步总数"""
        return int(round(self.duration * self.solver.f_sol))

    def provenance(self) -> Dict[str, Any]:
        """完整解析后的配置，键有序"""
        return json.loads(json.dumps(self.model_dump(mode="json"), sort_keys=True))


def build_scenario(
    config: Optional[Dict[str, Any]] = None,
    mode: Optional[str] = None,
    case: Optional[int] = None,
    duration: Optional[float] = None,
    output_path: Optional[str] = None,
) -> ScenarioConfig:
    """由配置字典构建并校验场景

    工况1使用空扰动曲线，工况2、3使用配置中的扰动曲线。

    Args:
        config: 已合并的配置字典，缺省时使用默认配置
        mode: 控制模式覆盖
        case: 工况覆盖
        duration: 仿真时长覆盖 (s)
        output_path: 输出目录覆盖

    Returns:
        校验通过的场景配置

    Raises:
        ConfigValidationError: 配置不满足约束
    """
    config = config or DEFAULT_CONFIG
    scenario = config.get("scenario", {})
    horizon = config.get("horizon", {})

    mode = (mode or scenario.get("mode", "odcm")).lower()
    case = int(case if case is not None else scenario.get("case", 1))
    intervals = config.get("disturbance", {}).get("intervals", []) if case in (2, 3) else []

    pwm = dict(config.get("pwm", {}))
    pwm.setdefault("f_c", horizon.get("f_c", 20_000))
    pwm.setdefault("cost_samples_per_beat", horizon.get("cost_samples_per_beat", 5))

    runtime = config.get("runtime", {})
    try:
        return ScenarioConfig(
            mode=mode,
            case=case,
            duration=duration if duration is not None else scenario.get("duration", 0.1),
            circuit=config.get("circuit", {}),
            reference=config.get("reference", {}),
            solver=config.get("solver", {}),
            horizon=horizon,
            pwm=pwm,
            rls=config.get("rls", {}),
            disturbance={"intervals": intervals},
            metrics=config.get("metrics", {}),
            output_path=output_path or scenario.get("output_dir", "./output"),
            workers=runtime.get("workers", 3),
            progress=runtime.get("progress", False),
        )
    except ValidationError as e:
        logger.error(f"场景配置校验失败: {e}")
        raise ConfigValidationError(f"场景配置校验失败: {e}") from e


def resolve_config(
    config_path: Optional[Union[str, Path]] = None, overrides: Iterable[str] = ()
) -> Dict[str, Any]:
    """加载配置文件并应用 "section.key=value" 覆盖项

    Args:
        config_path: 配置文件路径，缺省时读取 config/config.json，该文件不存在时只用默认配置
        overrides: 覆盖表达式列表

    Returns:
        合并后的配置字典
    """
    if config_path is None and DEFAULT_CONFIG_PATH.exists():
        logger.debug(f"使用默认配置文件: {DEFAULT_CONFIG_PATH}")
        config_path = DEFAULT_CONFIG_PATH
    config = load_config(config_path, DEFAULT_CONFIG)
    for expression in overrides:
        key_path, value = parse_override(expression)
        logger.debug(f"配置覆盖: {key_path} = {value!r}")
        config = set_by_path(config, key_path, value)
    return config
