"""
电路模型模块

单相解耦的LCL逆变电路参数、开关模式与状态空间模型
"""
