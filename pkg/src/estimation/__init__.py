"""
扰动估计模块

负载扰动采样与递推最小二乘预测
"""
