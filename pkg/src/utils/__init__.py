"""
工具函数模块

包含日志、配置加载、异常定义等通用工具
"""
