"""
Penalized and unpenalized logistic estimation, and the projection direction.
"""
