"""
混合自动机模块

单相逆变器的离散模式、迁移重置与控制符号编解码
"""
