"""
仿真模块

分段仿射系统的精确离散化与真实被控对象推进
"""
