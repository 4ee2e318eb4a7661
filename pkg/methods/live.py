"""
LiVE estimator of the case probability h(x*' beta): the plug-in x*' beta-hat
corrected by the projection direction applied to the inverse-variance
weighted score, with its variance, confidence interval and labelling test.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import math
import numpy as np
from scipy import special
from config.logging_config import get_logger
from config.settings import DEFAULT_ALPHA, DEFAULT_THRESHOLD
from config.solver_settings import INFERENCE_SETTINGS
from core.exceptions import DomainError, InfeasibleDirection, ZeroVariance
from core.numerics import RngStream, std_normal_cdf, std_normal_quantile
from core.types import Dataset, FittedModel, InferenceResult, Loading, Method
from estimation.logistic_lasso import logit, sigmoid
from estimation.projection import ProjectionDirection, projection_direction
from methods.base_method import BaseMethod, InferenceOptions, SharedFit, check_probability, prepare_fit

logger = get_logger('inference')


@dataclass(frozen=True)
class Weights:
    """Linearization weights h(1-h) at beta-hat, clamped below at ``w_floor``."""
    w: np.ndarray
    w_floor: float
    n_clamped: int


def linearization_weights(
    data: Dataset,
    model: FittedModel,
    w_floor: float = INFERENCE_SETTINGS['weight_floor'],
) -> Weights:
    h = special.expit(data.x @ model.beta_hat)
    raw = h * (1.0 - h)
    clamped = int(np.count_nonzero(raw < w_floor))
    if clamped:
        logger.debug(f"{clamped} of {data.n} linearization weights clamped at {w_floor:.1e}")
    return Weights(w=np.maximum(raw, w_floor), w_floor=w_floor, n_clamped=clamped)


def _require_feasible(direction: ProjectionDirection, allow_infeasible: bool) -> None:
    if not direction.feasible and not allow_infeasible:
        raise InfeasibleDirection(direction.linf_residual, direction.loading_residual, direction=direction)


def live_linear_estimate(
    data: Dataset,
    model: FittedModel,
    direction: ProjectionDirection,
    x_star: Loading,
    weights: Optional[Weights] = None,
    allow_infeasible: bool = False,
) -> float:
    """x*' beta-hat + u' (1/n) sum_i w_i^-1 X_i (y_i - h(X_i' beta-hat))."""
    _require_feasible(direction, allow_infeasible)
    weights = weights or linearization_weights(data, model)
    residual = data.y - special.expit(data.x @ model.beta_hat)
    correction = float(direction.u_hat @ (data.x.T @ (residual / weights.w))) / data.n
    return float(x_star.values @ model.beta_hat) + correction


def live_variance(
    data: Dataset,
    model: FittedModel,
    direction: ProjectionDirection,
    weights: Optional[Weights] = None,
    allow_infeasible: bool = False,
) -> float:
    """(1/n^2) sum_i w_i^-1 (u' X_i)^2."""
    _require_feasible(direction, allow_infeasible)
    weights = weights or linearization_weights(data, model)
    xu = data.x @ direction.u_hat
    return float(np.sum(xu * xu / weights.w)) / data.n ** 2


def case_probability(linear_estimate: float) -> float:
    if not math.isfinite(linear_estimate):
        raise DomainError(f"linear estimate must be finite, got {linear_estimate}")
    return sigmoid(linear_estimate)


def confidence_interval(linear_estimate: float, variance: float, alpha: float = DEFAULT_ALPHA) -> Tuple[float, float]:
    """Image under h of the two-sided normal interval on the linear scale."""
    check_probability('alpha', alpha)
    if variance < 0:
        raise DomainError(f"variance must be nonnegative, got {variance}")
    half = std_normal_quantile(1.0 - alpha / 2.0) * math.sqrt(variance)
    return sigmoid(linear_estimate - half), sigmoid(linear_estimate + half)


def case_label_test(
    linear_estimate: float,
    variance: float,
    alpha: float = DEFAULT_ALPHA,
    threshold_c: float = DEFAULT_THRESHOLD,
) -> Tuple[bool, float]:
    """
    One-sided test of H0: h(x*' beta) < c*.

    Rejects when est - z_alpha sqrt(V) >= logit(c*); the p-value is
    1 - Phi((est - logit(c*)) / sqrt(V)).
    """
    check_probability('alpha', alpha)
    check_probability('threshold', threshold_c)
    if variance < 0:
        raise DomainError(f"variance must be nonnegative, got {variance}")
    if variance == 0.0:
        raise ZeroVariance("labelling test needs a positive variance")
    sd = math.sqrt(variance)
    cutoff = logit(threshold_c)
    reject = linear_estimate - std_normal_quantile(1.0 - alpha) * sd >= cutoff
    p_value = std_normal_cdf(-(linear_estimate - cutoff) / sd)
    return bool(reject), p_value


def theoretical_power(
    true_linear: float,
    variance: float,
    alpha: float = DEFAULT_ALPHA,
    threshold_c: float = DEFAULT_THRESHOLD,
) -> float:
    """Asymptotic rejection probability 1 - Phi(z_alpha - (x*'beta - logit c*) / sqrt(V))."""
    check_probability('alpha', alpha)
    check_probability('threshold', threshold_c)
    if not variance > 0:
        raise ZeroVariance("power needs a positive variance")
    shift = (true_linear - logit(threshold_c)) / math.sqrt(variance)
    return std_normal_cdf(shift - std_normal_quantile(1.0 - alpha))


def _infer_from_fit(
    fit: SharedFit,
    x_star: Loading,
    alpha: float,
    threshold_c: float,
    opts: InferenceOptions,
) -> InferenceResult:
    data, model = fit.data, fit.model
    warnings: List[str] = []
    try:
        direction = projection_direction(data, x_star, opts.projection, gram=fit.gram)
    except InfeasibleDirection as e:
        if not opts.allow_infeasible or e.direction is None:
            raise
        direction = e.direction
        warnings.append(
            f"projection certificate not met (linf {e.linf_residual:.3e}, loading {e.loading_residual:.3e})"
        )

    weights = linearization_weights(data, model, opts.weight_floor)
    if weights.n_clamped:
        warnings.append(f"{weights.n_clamped} linearization weights clamped at {weights.w_floor:.1e}")
    if not model.converged:
        warnings.append("penalized fit did not reach its KKT tolerance")

    est = live_linear_estimate(data, model, direction, x_star, weights, allow_infeasible=True)
    var = live_variance(data, model, direction, weights, allow_infeasible=True)
    lower, upper = confidence_interval(est, var, alpha)
    try:
        reject, p_value = case_label_test(est, var, alpha, threshold_c)
    except ZeroVariance as e:
        warnings.append(str(e))
        reject, p_value = None, None

    return InferenceResult(
        linear_estimate=est,
        variance=var,
        case_probability=case_probability(est),
        ci_lower=lower,
        ci_upper=upper,
        alpha=alpha,
        reject_null=reject,
        p_value=p_value,
        threshold=threshold_c,
        method=Method.LIVE,
        warnings=warnings,
        certificate=direction.certificate(),
        n_clamped=weights.n_clamped,
        lambda_=model.lambda_,
    )


def infer(
    data: Dataset,
    x_star: Loading,
    alpha: float = DEFAULT_ALPHA,
    threshold_c: float = DEFAULT_THRESHOLD,
    opts: Optional[InferenceOptions] = None,
    stream: Optional[RngStream] = None,
    fit: Optional[SharedFit] = None,
) -> InferenceResult:
    """
    Full LiVE pipeline: penalized fit (cross-validated unless a fixed lambda
    is set), projection direction, estimate, variance, interval and test.
    An uncertified projection direction yields a result carrying a warning.
    """
    opts = opts or InferenceOptions()
    check_probability('alpha', alpha)
    check_probability('threshold', threshold_c)
    fit = fit or prepare_fit(data, opts, stream)
    return _infer_from_fit(fit, x_star, alpha, threshold_c, opts)


def infer_batch(
    data: Dataset,
    loadings: Sequence[Loading],
    alpha: float = DEFAULT_ALPHA,
    threshold_c: float = DEFAULT_THRESHOLD,
    opts: Optional[InferenceOptions] = None,
    stream: Optional[RngStream] = None,
    fit: Optional[SharedFit] = None,
    jobs: int = 1,
) -> List[InferenceResult]:
    """Many loadings against one penalized fit and one Gram matrix; projections run on ``jobs`` threads."""
    opts = opts or InferenceOptions()
    check_probability('alpha', alpha)
    check_probability('threshold', threshold_c)
    fit = fit or prepare_fit(data, opts, stream)
    fit.gram  # built once before worker threads share it
    if jobs <= 1 or len(loadings) <= 1:
        return [_infer_from_fit(fit, x, alpha, threshold_c, opts) for x in loadings]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda x: _infer_from_fit(fit, x, alpha, threshold_c, opts), loadings))


class LiveMethod(BaseMethod):
    method = Method.LIVE

    def infer(self, fit: SharedFit, x_star: Loading) -> InferenceResult:
        return _infer_from_fit(fit, x_star, self.alpha, self.threshold, self.opts)
