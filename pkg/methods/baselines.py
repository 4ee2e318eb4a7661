"""
Comparison methods: the plug-in Lasso probability h(x*' beta-hat) and
post-selection inference from an unpenalized refit on the Lasso support.
"""
from dataclasses import dataclass
from typing import List, Optional
import math
import numpy as np
from config.logging_config import get_logger
from config.settings import DEFAULT_ALPHA, DEFAULT_THRESHOLD
from config.solver_settings import LASSO_SETTINGS
from core.exceptions import DomainError, SingularHessian
from core.numerics import RngStream
from core.types import Dataset, FittedModel, InferenceResult, Loading, Method
from estimation.logistic_lasso import MleFit, fit_logistic_mle, sigmoid
from methods.base_method import BaseMethod, InferenceOptions, SharedFit, check_probability, prepare_fit
from methods.live import case_label_test, confidence_interval

logger = get_logger('inference')


@dataclass
class SelectedModel:
    """Lasso support (intercept always kept) and the MLE refit on it."""
    support: np.ndarray
    mle: MleFit


def select_support(
    data: Dataset,
    model: FittedModel,
    zero_threshold: float = LASSO_SETTINGS['zero_threshold'],
) -> np.ndarray:
    support = np.flatnonzero(np.abs(model.beta_hat) >= zero_threshold)
    if data.has_intercept_column and (support.size == 0 or support[0] != 0):
        support = np.concatenate(([0], support))
    return support.astype(int)


def refit_selected(data: Dataset, model: FittedModel) -> SelectedModel:
    """Support of ``model`` and the unpenalized MLE on it; raises when the refit is undefined."""
    support = select_support(data, model)
    if support.size >= data.n:
        raise DomainError(f"support size {support.size} >= n={data.n}; refit undefined")
    return SelectedModel(support=support, mle=fit_logistic_mle(data.subset_columns(support)))


def plugin_lasso_inference(
    data: Dataset,
    x_star: Loading,
    opts: Optional[InferenceOptions] = None,
    stream: Optional[RngStream] = None,
    fit: Optional[SharedFit] = None,
    alpha: float = DEFAULT_ALPHA,
    threshold_c: float = DEFAULT_THRESHOLD,
) -> InferenceResult:
    """Point estimate x*' beta-hat only; no variance, interval or test."""
    fit = fit or prepare_fit(data, opts, stream)
    est = float(x_star.values @ fit.model.beta_hat)
    return InferenceResult(
        linear_estimate=est,
        variance=float('nan'),
        case_probability=sigmoid(est),
        ci_lower=None,
        ci_upper=None,
        alpha=alpha,
        reject_null=None,
        p_value=None,
        threshold=threshold_c,
        method=Method.PLUGIN_LASSO,
        lambda_=fit.model.lambda_,
    )


def _degenerate(est: float, alpha: float, threshold_c: float, warnings: List[str], separated: bool, lam: float):
    logger.warning(f"Post-selection refit degenerate: {warnings[-1]}")
    return InferenceResult(
        linear_estimate=est,
        variance=float('nan'),
        case_probability=sigmoid(est),
        ci_lower=0.0,
        ci_upper=1.0,
        alpha=alpha,
        reject_null=False,
        p_value=1.0,
        threshold=threshold_c,
        method=Method.POST_SELECTION,
        warnings=warnings,
        separation_detected=separated,
        degenerate=True,
        lambda_=lam,
    )


def post_selection_inference(
    data: Dataset,
    x_star: Loading,
    alpha: float = DEFAULT_ALPHA,
    threshold_c: float = DEFAULT_THRESHOLD,
    opts: Optional[InferenceOptions] = None,
    stream: Optional[RngStream] = None,
    fit: Optional[SharedFit] = None,
) -> InferenceResult:
    """
    Refit an unpenalized logistic model on the Lasso support and use the
    classical covariance x*_S' (X_S' W X_S)^-1 x*_S.

    A support at least as large as n, a singular information matrix, a
    separated refit without usable covariance or an empty support (no
    intercept column and nothing selected) yields a degenerate result
    flagged with CI [0, 1] instead of an error.
    """
    check_probability('alpha', alpha)
    check_probability('threshold', threshold_c)
    fit = fit or prepare_fit(data, opts, stream)
    lam = fit.model.lambda_
    plugin = float(x_star.values @ fit.model.beta_hat)
    warnings: List[str] = []

    try:
        selected = refit_selected(data, fit.model)
    except (SingularHessian, DomainError) as e:
        warnings.append(str(e))
        return _degenerate(plugin, alpha, threshold_c, warnings, False, lam)

    support, mle = selected.support, selected.mle
    if support.size == 0:
        warnings.append("Lasso selected no columns; null model with linear estimate 0")
        return _degenerate(0.0, alpha, threshold_c, warnings, False, lam)
    x_s = x_star.values[support]
    est = float(x_s @ mle.coefficients)
    var = float(x_s @ mle.covariance @ x_s)
    if mle.separation_detected:
        warnings.append("separation detected in the post-selection refit")
    if not (math.isfinite(est) and math.isfinite(var)) or var <= 0.0:
        warnings.append(f"refit variance unusable ({var})")
        return _degenerate(est if math.isfinite(est) else plugin, alpha, threshold_c, warnings,
                           mle.separation_detected, lam)

    lower, upper = confidence_interval(est, var, alpha)
    reject, p_value = case_label_test(est, var, alpha, threshold_c)

    return InferenceResult(
        linear_estimate=est,
        variance=var,
        case_probability=sigmoid(est),
        ci_lower=lower,
        ci_upper=upper,
        alpha=alpha,
        reject_null=reject,
        p_value=p_value,
        threshold=threshold_c,
        method=Method.POST_SELECTION,
        warnings=warnings,
        separation_detected=mle.separation_detected,
        lambda_=lam,
    )


class PluginLassoMethod(BaseMethod):
    method = Method.PLUGIN_LASSO

    def infer(self, fit: SharedFit, x_star: Loading) -> InferenceResult:
        return plugin_lasso_inference(fit.data, x_star, fit=fit, alpha=self.alpha, threshold_c=self.threshold)


class PostSelectionMethod(BaseMethod):
    method = Method.POST_SELECTION

    def infer(self, fit: SharedFit, x_star: Loading) -> InferenceResult:
        return post_selection_inference(fit.data, x_star, self.alpha, self.threshold, fit=fit)
