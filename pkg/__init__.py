"""
LiVE case-probability inference package
"""
