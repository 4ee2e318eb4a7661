"""
l1-penalized logistic regression, cross-validated penalty selection and the
unpenalized logistic MLE used for refitting on a selected support.

The penalized objective is scaled by 1/n:

    (1/n) sum_i [log(1 + exp(x_i' beta)) - y_i x_i' beta] + lambda * sum_j pf_j |beta_j|

where pf_j = 0 for an unpenalized intercept column and 1 otherwise.
"""
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple
import math
import numpy as np
from scipy import linalg, special
from sklearn.preprocessing import StandardScaler
from config.logging_config import get_logger
from config.settings import DEFAULT_SEED
from config.solver_settings import LASSO_SETTINGS, CV_SETTINGS, MLE_SETTINGS
from core.exceptions import DimensionMismatch, DomainError, NotPositiveDefinite, SingularHessian
from core.numerics import RngStream, cholesky
from core.types import Dataset, FittedModel
from estimation.kernels import weighted_lasso_sweep

logger = get_logger('estimation')

_LOGIT_CLIP = 1e-8


@dataclass(frozen=True)
class LassoOptions:
    tol: float = LASSO_SETTINGS['tol']
    max_iter: int = LASSO_SETTINGS['max_iter']
    warm_start: Optional[np.ndarray] = None
    irls_weight_floor: float = LASSO_SETTINGS['irls_weight_floor']
    max_line_search: int = LASSO_SETTINGS['max_line_search']
    penalize_intercept: bool = LASSO_SETTINGS['penalize_intercept']
    standardize: bool = LASSO_SETTINGS['standardize']


@dataclass(frozen=True)
class MleOptions:
    tol: float = MLE_SETTINGS['tol']
    max_iter: int = MLE_SETTINGS['max_iter']
    separation_threshold: float = MLE_SETTINGS['separation_threshold']
    max_step_halving: int = MLE_SETTINGS['max_step_halving']


@dataclass
class CvResult:
    """Cross-validation curve over a descending geometric penalty grid."""
    lambda_grid: np.ndarray
    cv_deviance: np.ndarray
    cv_se: np.ndarray
    lambda_min: float
    lambda_1se: float
    fold_deviance: np.ndarray = field(repr=False, default=None)

    def selected(self, rule: str = CV_SETTINGS['rule']) -> float:
        if rule == 'min':
            return self.lambda_min
        if rule == '1se':
            return self.lambda_1se
        raise DomainError(f"unknown cross-validation rule {rule!r}, expected 'min' or '1se'")


@dataclass
class MleFit:
    coefficients: np.ndarray
    covariance: np.ndarray
    converged: bool
    separation_detected: bool
    iterations: int = 0


def sigmoid(z):
    """Logistic function h(z) = exp(z) / (1 + exp(z)), overflow-free in both tails."""
    out = special.expit(z)
    if np.ndim(out) == 0:
        return float(out)
    return out


def logit(prob: float) -> float:
    """Inverse of the logistic function."""
    return float(special.logit(prob))


def _check_beta(beta: np.ndarray, data: Dataset) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise DimensionMismatch(f"beta has shape {beta.shape}, expected ({data.p},)")
    return beta


def _mean_nll(eta: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta))


def neg_log_likelihood(beta: np.ndarray, data: Dataset) -> float:
    """(1/n) times the logistic negative log-likelihood."""
    beta = _check_beta(beta, data)
    return _mean_nll(data.x @ beta, data.y)


def gradient(beta: np.ndarray, data: Dataset) -> np.ndarray:
    """Gradient of ``neg_log_likelihood`` in beta."""
    beta = _check_beta(beta, data)
    return data.x.T @ (special.expit(data.x @ beta) - data.y) / data.n


def _design(data: Dataset, standardize: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Working copy of X and the per-column scale that produced it."""
    x = np.array(data.x, dtype=float)
    scale = np.ones(data.p)
    if standardize:
        start = 1 if data.has_intercept_column else 0
        if start < data.p:
            scaler = StandardScaler(with_mean=False).fit(x[:, start:])
            x[:, start:] = scaler.transform(x[:, start:])
            scale[start:] = scaler.scale_
    return x, scale


def _penalty_factor(data: Dataset, penalize_intercept: bool) -> np.ndarray:
    factor = np.ones(data.p)
    if data.has_intercept_column and not penalize_intercept:
        factor[0] = 0.0
    return factor


def lambda_max(data: Dataset, penalize_intercept: bool = False, standardize: bool = False) -> float:
    """Smallest penalty at which every penalized coefficient is zero."""
    x, _ = _design(data, standardize)
    y = data.y
    if data.has_intercept_column and not penalize_intercept:
        if data.p == 1:
            return 0.0
        return float(np.max(np.abs(x[:, 1:].T @ (y - y.mean()))) / data.n)
    return float(np.max(np.abs(x.T @ (y - 0.5))) / data.n)


def _objective(eta: np.ndarray, y: np.ndarray, beta: np.ndarray, penalty: np.ndarray) -> float:
    return _mean_nll(eta, y) + float(np.sum(penalty * np.abs(beta)))


def _kkt_residual(grad: np.ndarray, beta: np.ndarray, penalty: np.ndarray) -> float:
    residual = np.where(
        beta != 0.0,
        np.abs(grad + penalty * np.sign(beta)),
        np.maximum(np.abs(grad) - penalty, 0.0),
    )
    return float(np.max(residual)) if residual.size else 0.0


def kkt_residual(data: Dataset, beta: np.ndarray, lambda_: float, penalize_intercept: bool = False) -> float:
    """Sup-norm violation of the lasso stationarity conditions at ``beta`` on the original scale."""
    return _kkt_residual(gradient(beta, data), beta, lambda_ * _penalty_factor(data, penalize_intercept))


def _solve_surrogate(x, w, r, beta, col_curv, penalty, budget: int, tol: float) -> int:
    """Coordinate descent on the IRLS quadratic: full sweeps, then active-set sweeps."""
    p = beta.shape[0]
    all_coords = np.arange(p, dtype=np.int64)
    used = 0
    while used < budget:
        move = weighted_lasso_sweep(x, w, r, beta, col_curv, penalty, all_coords)
        used += p
        if move <= tol:
            break
        active = np.flatnonzero(beta != 0.0).astype(np.int64)
        while used < budget and active.size:
            move = weighted_lasso_sweep(x, w, r, beta, col_curv, penalty, active)
            used += active.size
            if move <= tol:
                break
    return used


def fit_logistic_lasso(
    data: Dataset,
    lambda_: float,
    penalize_intercept: Optional[bool] = None,
    opts: Optional[LassoOptions] = None,
) -> FittedModel:
    """
    Penalized logistic MLE by proximal Newton: each outer pass builds the
    IRLS quadratic surrogate at the current iterate, minimizes it by
    coordinate descent and backtracks along the resulting direction until
    the penalized objective does not increase.

    KKT stationarity is checked before every pass, so a warm start at the
    solution returns immediately. Exhausting ``max_iter`` coordinate
    updates returns the current iterate with ``converged=False``.
    """
    opts = opts or LassoOptions()
    if not (lambda_ > 0 and math.isfinite(lambda_)):
        raise DomainError(f"lambda must be a positive finite number, got {lambda_}")
    if penalize_intercept is None:
        penalize_intercept = opts.penalize_intercept

    x, scale = _design(data, opts.standardize)
    y = np.asarray(data.y, dtype=float)
    n, p = x.shape
    penalty = lambda_ * _penalty_factor(data, penalize_intercept)

    if opts.warm_start is not None:
        beta = _check_beta(opts.warm_start, data) * scale
    else:
        beta = np.zeros(p)
        if data.has_intercept_column and not penalize_intercept:
            beta[0] = logit(float(np.clip(y.mean(), _LOGIT_CLIP, 1.0 - _LOGIT_CLIP)))

    sq = x * x
    x_cols = np.asfortranarray(x)
    eta = x @ beta
    obj = _objective(eta, y, beta, penalty)
    trace = [obj]
    updates = 0
    passes = 0
    converged = False
    kkt = float('inf')

    while True:
        h = special.expit(eta)
        kkt = _kkt_residual(x.T @ (h - y) / n, beta, penalty)
        if kkt <= opts.tol:
            converged = True
            break
        if updates >= opts.max_iter:
            break

        w = np.maximum(h * (1.0 - h), opts.irls_weight_floor)
        r = (y - h) / w
        col_curv = sq.T @ w / n
        candidate = beta.copy()
        updates += _solve_surrogate(
            x_cols, w, r, candidate, col_curv, penalty, opts.max_iter - updates, 0.1 * opts.tol
        )
        direction = candidate - beta
        if not np.any(direction):
            break

        step = 1.0
        accepted = False
        for _ in range(opts.max_line_search):
            trial = beta + step * direction
            trial_eta = x @ trial
            trial_obj = _objective(trial_eta, y, trial, penalty)
            if trial_obj <= obj:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            logger.debug(f"Line search stalled at pass {passes} (KKT residual {kkt:.3e})")
            break
        beta, eta, obj = trial, trial_eta, trial_obj
        trace.append(obj)
        passes += 1

    if not converged:
        logger.warning(
            f"Lasso fit at lambda={lambda_:.4e} did not reach KKT tol {opts.tol:.1e} "
            f"after {updates} coordinate updates (residual {kkt:.3e})"
        )
    else:
        logger.debug(f"Lasso fit at lambda={lambda_:.4e}: {passes} passes, {updates} updates")

    return FittedModel(
        beta_hat=beta / scale,
        lambda_=float(lambda_),
        objective_value=obj,
        iterations=passes,
        converged=converged,
        kkt_residual=kkt,
        penalize_intercept=bool(penalize_intercept),
        objective_trace=trace,
    )


def lambda_grid(lam_max: float, grid_size: int, eps: float) -> np.ndarray:
    """Geometric grid from lam_max down to eps * lam_max, endpoints exact."""
    if not lam_max > 0:
        raise DomainError(f"lambda_max must be positive to build a grid, got {lam_max}")
    if grid_size < 2:
        return np.array([lam_max])
    grid = np.geomspace(lam_max, eps * lam_max, grid_size)
    grid[0] = lam_max
    grid[-1] = eps * lam_max
    return grid


def fit_lasso_path(
    data: Dataset,
    lambdas: np.ndarray,
    penalize_intercept: Optional[bool] = None,
    opts: Optional[LassoOptions] = None,
) -> List[FittedModel]:
    """Fits along a decreasing penalty sequence, each warm-started from the previous."""
    opts = opts or LassoOptions()
    models: List[FittedModel] = []
    current = opts
    for lam in lambdas:
        model = fit_logistic_lasso(data, float(lam), penalize_intercept, current)
        models.append(model)
        current = replace(opts, warm_start=model.beta_hat)
    return models


def cross_validate_lambda(
    data: Dataset,
    n_folds: int = CV_SETTINGS['n_folds'],
    grid_size: int = CV_SETTINGS['grid_size'],
    stream: Optional[RngStream] = None,
    eps: float = CV_SETTINGS['eps'],
    penalize_intercept: Optional[bool] = None,
    opts: Optional[LassoOptions] = None,
) -> CvResult:
    """
    K-fold cross-validation of the penalty level by held-out deviance.

    Folds come from a permutation drawn from a restarted copy of
    ``stream``, so repeated calls with the same stream agree exactly.
    """
    opts = opts or LassoOptions()
    if penalize_intercept is None:
        penalize_intercept = opts.penalize_intercept
    if n_folds < 2:
        raise DomainError(f"n_folds must be at least 2, got {n_folds}")
    if data.n < n_folds:
        raise DomainError(f"need at least {n_folds} observations for {n_folds} folds, got {data.n}")
    stream = stream or RngStream(DEFAULT_SEED, 0)

    lam_max = lambda_max(data, penalize_intercept, opts.standardize)
    if not lam_max > 0:
        if np.all(data.y == data.y[0]):
            raise DomainError(
                f"outcome y is constant (all {int(data.y[0])}); the penalty level cannot be cross-validated"
            )
        raise DomainError("no penalized column carries signal (lambda_max = 0); nothing to cross-validate")
    grid = lambda_grid(lam_max, grid_size, eps)
    order = stream.fresh().generator.permutation(data.n)
    folds = np.array_split(order, n_folds)

    fold_dev = np.empty((n_folds, grid.size))
    for k, held_out in enumerate(folds):
        train = np.setdiff1d(order, held_out)
        train_data = data.subset_rows(train)
        test_data = data.subset_rows(held_out)
        path = fit_lasso_path(train_data, grid, penalize_intercept, opts)
        for g, model in enumerate(path):
            fold_dev[k, g] = neg_log_likelihood(model.beta_hat, test_data)
        logger.debug(f"CV fold {k + 1}/{n_folds} done ({held_out.size} held out)")

    mean_dev = fold_dev.mean(axis=0)
    se = fold_dev.std(axis=0, ddof=1) / math.sqrt(n_folds)
    best = int(np.argmin(mean_dev))
    within = np.flatnonzero(mean_dev <= mean_dev[best] + se[best])
    lambda_1se = float(grid[within].max())

    return CvResult(
        lambda_grid=grid,
        cv_deviance=mean_dev,
        cv_se=se,
        lambda_min=float(grid[best]),
        lambda_1se=lambda_1se,
        fold_deviance=fold_dev,
    )


def fit_cv_lasso(
    data: Dataset,
    stream: Optional[RngStream] = None,
    rule: str = CV_SETTINGS['rule'],
    n_folds: int = CV_SETTINGS['n_folds'],
    grid_size: int = CV_SETTINGS['grid_size'],
    penalize_intercept: Optional[bool] = None,
    opts: Optional[LassoOptions] = None,
) -> Tuple[FittedModel, CvResult]:
    """Cross-validate, then fit the full data along the grid down to the selected penalty."""
    cv = cross_validate_lambda(data, n_folds, grid_size, stream, CV_SETTINGS['eps'], penalize_intercept, opts)
    chosen = cv.selected(rule)
    stop = int(np.flatnonzero(cv.lambda_grid == chosen)[0])
    path = fit_lasso_path(data, cv.lambda_grid[:stop + 1], penalize_intercept, opts)
    model = path[-1]
    logger.info(
        f"Cross-validated lambda ({rule}) = {chosen:.4e}; "
        f"{int(np.count_nonzero(model.beta_hat))} nonzero coefficients"
    )
    return model, cv


def fit_logistic_mle(data: Dataset, opts: Optional[MleOptions] = None) -> MleFit:
    """
    Unpenalized logistic MLE by damped Newton steps.

    Separation is flagged when the linear predictor leaves [-30, 30] or the
    Hessian stops being numerically positive definite before the mean score
    reaches tolerance. The covariance (X'WX)^-1 is evaluated at the final
    iterate; if it cannot be formed for a non-separated fit SingularHessian
    is raised, for a separated fit it is returned filled with NaN.
    """
    opts = opts or MleOptions()
    x = np.asarray(data.x, dtype=float)
    y = np.asarray(data.y, dtype=float)
    n, k = x.shape
    if k >= n:
        raise DomainError(f"MLE needs fewer columns than observations, got {k} >= {n}")
    if k == 0:
        return MleFit(coefficients=np.zeros(0), covariance=np.zeros((0, 0)), converged=True, separation_detected=False)

    b = np.zeros(k)
    if data.has_intercept_column:
        b[0] = logit(float(np.clip(y.mean(), _LOGIT_CLIP, 1.0 - _LOGIT_CLIP)))

    converged = False
    separated = False
    iterations = 0
    eta = x @ b
    nll = _mean_nll(eta, y)
    for iterations in range(1, opts.max_iter + 1):
        if np.max(np.abs(eta)) > opts.separation_threshold:
            separated = True
            break
        h = special.expit(eta)
        score = x.T @ (y - h) / n
        if np.max(np.abs(score)) <= opts.tol:
            converged = True
            break
        hess = (x * (h * (1.0 - h))[:, None]).T @ x / n
        try:
            factor = cholesky(0.5 * (hess + hess.T))
        except NotPositiveDefinite:
            separated = True
            break
        step = linalg.cho_solve((factor.entries, True), score)
        t = 1.0
        for _ in range(opts.max_step_halving):
            trial = b + t * step
            trial_eta = x @ trial
            trial_nll = _mean_nll(trial_eta, y)
            if trial_nll <= nll:
                break
            t *= 0.5
        b, eta, nll = trial, trial_eta, trial_nll

    if separated:
        logger.warning(f"Separation detected in logistic refit after {iterations} Newton steps")

    h = special.expit(eta)
    info = (x * (h * (1.0 - h))[:, None]).T @ x
    try:
        factor = cholesky(0.5 * (info + info.T))
        covariance = linalg.cho_solve((factor.entries, True), np.eye(k))
        covariance = 0.5 * (covariance + covariance.T)
    except NotPositiveDefinite as e:
        if not separated:
            raise SingularHessian(f"X'WX is not invertible at the final iterate: {str(e)}")
        covariance = np.full((k, k), np.nan)

    return MleFit(
        coefficients=b,
        covariance=covariance,
        converged=converged,
        separation_detected=separated,
        iterations=iterations,
    )
