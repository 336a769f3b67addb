"""
仿真工况模块

场景配置、三相闭环运行、误差指标、结果输出与命令行入口
"""
