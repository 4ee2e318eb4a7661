"""
Numerical defaults for the solvers, the inference pipeline and the simulation harness.
"""

# Penalized logistic regression (coordinate descent on the IRLS surrogate)
LASSO_SETTINGS = {
    'tol': 1e-7,                    # KKT residual tolerance
    'max_iter': 100_000,            # coordinate updates
    'irls_weight_floor': 1e-5,      # lower clamp on h(1-h) inside the surrogate
    'zero_threshold': 1e-10,        # |beta_j| below this counts as unselected
    'max_line_search': 30,          # step halvings per outer pass
    'penalize_intercept': False,
    'standardize': False,
}

# Cross-validation of the penalty level
CV_SETTINGS = {
    'n_folds': 10,
    'grid_size': 50,
    'eps': 0.01,                    # last grid point = eps * lambda_max
    'rule': 'min',                  # 'min' or '1se'
}

# Unpenalized logistic MLE (Newton / IRLS)
MLE_SETTINGS = {
    'tol': 1e-10,                   # on the mean score, sup norm
    'max_iter': 100,
    'separation_threshold': 30.0,   # max |X_i b| beyond which h == 1 numerically
    'max_step_halving': 30,
}

# Projection direction and its dual program
PROJECTION_SETTINGS = {
    'lambda_n_constant': 2.0,       # lambda_n = sqrt(c * log p / n)
    'mu_floor': 1e-4,
    'mu_ceiling': 1e3,
    'mu_start_factor': 0.5,         # mu_0 = factor * lambda_n
    'bisection_width': 0.1,         # relative to the infinite end
    'relaxation_factor': 1.25,
    'max_relaxations': 5,
    'slack_tol': 1e-3,
    'dual_tol': 1e-9,
    'dual_max_passes': 3000,
    'divergence_objective': 1e6,    # objective below -1e6 * (1 + ||b||^2)
    'divergence_iterate': 1e8,      # ||v||_inf above this
    'zero_curvature': 1e-14,
    'first_ray_check': 16,          # passes before the first recession-ray check
    'diag_spread_warning': 10.0,
}

# LiVE estimator
INFERENCE_SETTINGS = {
    'weight_floor': 1e-4,
    'alpha': 0.05,
    'threshold': 0.5,
}

# Monte-Carlo harness
SIMULATION_SETTINGS = {
    'n_reps': 200,
    'design_rho': 0.5,
    'loading2_rho': -0.75,
    'loading_stream_index': 2 ** 63,  # stream reserved for the once-drawn loading
    'signal_end': 11,               # 1-based index of the last shrink-exempt entry
    'loading3_value': 10.0,
    'loading3_indices': (9, 10),    # 1-based
    'adversarial_beta': 0.01,
}
