"""
Numerical diagnostics.
"""
