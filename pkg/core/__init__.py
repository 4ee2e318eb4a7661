"""
Core types, numerics and errors.
"""
