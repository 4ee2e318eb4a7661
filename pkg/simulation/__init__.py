"""
Monte-Carlo simulation harness.
"""
