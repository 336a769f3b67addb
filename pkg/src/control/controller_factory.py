"""
控制器工厂

按控制模式名称创建预测控制器
"""

from typing import Optional

from ..circuit.circuit_model import CircuitParams
from ..simulation.discretization import DiscretizationCache
from ..utils.logger import get_logger
from .odcm_controller import HorizonConfig, OdcmController
from .opcm_controller import OpcmController, PwmConfig
from .reference import ReferenceSpec
from .rollout import PredictiveController


logger = get_logger(__name__)


class ControllerFactory:
    """预测控制器工厂"""

    @staticmethod
    def create_controller(
        mode: str,
        params: CircuitParams,
        reference: ReferenceSpec,
        horizon: HorizonConfig,
        pwm: PwmConfig,
        cache: Optional[DiscretizationCache] = None,
    ) -> PredictiveController:
        """创建控制器

        Args:
            mode: 控制模式，"odcm" 或 "opcm"
            params: 电路参数
            reference: 参考电压描述
            horizon: ODCM 预测时域配置
            pwm: OPCM 的PWM配置
            cache: 离散化缓存

        Returns:
            控制器实例
        """
        if mode.lower() == "odcm":
            return OdcmController(params, reference, horizon, cache)
        elif mode.lower() == "opcm":
            return OpcmController(params, reference, pwm, cache)
        else:
            logger.error(f"不支持的控制模式: {mode}")
            raise ValueError(f"不支持的控制模式: {mode}")
