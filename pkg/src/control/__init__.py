"""
预测控制模块

参考电压、批量轨迹预测以及 ODCM / OPCM 两种滚动优化控制器
"""
