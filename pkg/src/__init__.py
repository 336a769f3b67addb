"""
InvMPC: 三相逆变器有限控制集模型预测控制仿真

基于混合自动机的 ODCM / OPCM 预测控制与 RLS 负载扰动估计
"""

__version__ = "0.1.0"
__author__ = "InvMPC Contributors"
