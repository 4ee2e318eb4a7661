"""
Numerical health checks for a fitted model and its projection direction.

Each check returns a dict with the measured value, an ``ok`` flag and a list
of alerts, so the CLI can attach them to a result and tests can assert on them.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional
import math
import numpy as np
from scipy import special
from config.logging_config import get_logger
from config.solver_settings import LASSO_SETTINGS, PROJECTION_SETTINGS
from core.exceptions import DomainError
from core.types import Dataset, FittedModel, Loading
from estimation.logistic_lasso import kkt_residual
from estimation.projection import Gram, ProjectionDirection, feasibility_residuals, sample_gram

logger = get_logger('numerics')

# Loose acceptance bands; the theory leaves the constants unspecified.
DIAGNOSTIC_THRESHOLDS = {
    'cone_ratio_max': 10.0,
    'variance_bracket': (0.1, 10.0),
}


def cone_ratio(beta_hat: np.ndarray, beta: np.ndarray, zero_threshold: float = LASSO_SETTINGS['zero_threshold']) -> float:
    """||(b-hat - b)_{S^c}||_1 / ||(b-hat - b)_S||_1 with S the support of the true b."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta_hat.shape != beta.shape:
        raise DomainError(f"shape mismatch {beta_hat.shape} vs {beta.shape}")
    on = np.abs(beta) >= zero_threshold
    err = np.abs(beta_hat - beta)
    inside = float(np.sum(err[on]))
    outside = float(np.sum(err[~on]))
    if inside == 0.0:
        return 0.0 if outside == 0.0 else float('inf')
    return outside / inside


def taylor_remainder_ratio(x, a):
    """
    |h(x) - h(a) - h'(a)(x - a)| / (h'(a) exp(|x - a|) (x - a)^2), elementwise.

    The logistic remainder bound holds exactly when every ratio is <= 1.
    Pairs with x == a give 0.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    d = x - a
    ha = special.expit(a)
    slope = ha * (1.0 - ha)
    remainder = np.abs(special.expit(x) - ha - slope * d)
    bound = slope * np.exp(np.abs(d)) * d * d
    with np.errstate(invalid='ignore', divide='ignore'):
        ratio = np.where(bound > 0.0, remainder / np.where(bound > 0.0, bound, 1.0), 0.0)
    return ratio


def variance_bracket_ratio(gram: Gram, u_hat: np.ndarray, x_star: Loading) -> float:
    """sqrt(u' S u / n) relative to ||x*|| / sqrt(n)."""
    quad = float(u_hat @ gram.sigma_hat @ u_hat)
    return math.sqrt(max(quad, 0.0)) / x_star.norm


def xu_sup_norm(data: Dataset, u_hat: np.ndarray) -> float:
    return float(np.max(np.abs(data.x @ u_hat)))


@dataclass
class DiagnosticsReport:
    checks: Dict[str, Dict] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c['ok'] for c in self.checks.values())

    @property
    def alerts(self) -> List[str]:
        return [a for c in self.checks.values() for a in c['alerts']]

    def to_dict(self) -> dict:
        return {'ok': self.ok, 'checks': self.checks}


class FitDiagnostics:
    """Runs the checks against one dataset, recomputing the Gram matrix only once."""

    def __init__(self, data: Dataset, gram: Optional[Gram] = None):
        self.data = data
        self.gram = gram or sample_gram(data)

    def check_kkt(self, model: FittedModel, tol: float = 10.0 * LASSO_SETTINGS['tol']) -> Dict:
        """Residual on the original scale; standardized fits are certified on their own scale instead."""
        value = kkt_residual(self.data, model.beta_hat, model.lambda_, model.penalize_intercept)
        alerts = []
        if value > tol:
            alerts.append(f"KKT residual {value:.3e} exceeds {tol:.1e}")
        return {'ok': not alerts, 'value': value, 'alerts': alerts}

    def check_cone(self, model: FittedModel, beta: np.ndarray) -> Dict:
        value = cone_ratio(model.beta_hat, beta)
        alerts = []
        if not value <= DIAGNOSTIC_THRESHOLDS['cone_ratio_max']:
            alerts.append(f"cone ratio {value:.3g} above {DIAGNOSTIC_THRESHOLDS['cone_ratio_max']}")
        return {'ok': not alerts, 'value': value, 'alerts': alerts}

    def check_certificate(
        self,
        x_star: Loading,
        direction: ProjectionDirection,
        slack: float = PROJECTION_SETTINGS['slack_tol'],
    ) -> Dict:
        linf, loading = feasibility_residuals(self.gram, x_star, direction.u_hat)
        norm = x_star.norm
        lam = direction.lambda_n * (1.0 + slack)
        alerts = []
        if linf > norm * lam:
            alerts.append(f"sup-norm residual {linf:.3e} above {norm * lam:.3e}")
        if loading > norm ** 2 * lam:
            alerts.append(f"loading residual {loading:.3e} above {norm ** 2 * lam:.3e}")
        return {
            'ok': not alerts,
            'value': {'linf_residual': linf, 'loading_residual': loading},
            'alerts': alerts,
        }

    def check_variance_bracket(self, x_star: Loading, direction: ProjectionDirection) -> Dict:
        value = variance_bracket_ratio(self.gram, direction.u_hat, x_star)
        low, high = DIAGNOSTIC_THRESHOLDS['variance_bracket']
        alerts = [] if low <= value <= high else [f"variance bracket ratio {value:.3g} outside [{low}, {high}]"]
        return {'ok': not alerts, 'value': value, 'alerts': alerts}

    def check_xu(self, direction: ProjectionDirection) -> Dict:
        # reported only
        return {'ok': True, 'value': xu_sup_norm(self.data, direction.u_hat), 'alerts': []}

    def run(
        self,
        model: FittedModel,
        x_star: Optional[Loading] = None,
        direction: Optional[ProjectionDirection] = None,
        beta: Optional[np.ndarray] = None,
    ) -> DiagnosticsReport:
        report = DiagnosticsReport()
        try:
            report.checks['kkt'] = self.check_kkt(model)
            if beta is not None:
                report.checks['cone'] = self.check_cone(model, beta)
            if x_star is not None and direction is not None:
                report.checks['certificate'] = self.check_certificate(x_star, direction)
                report.checks['variance_bracket'] = self.check_variance_bracket(x_star, direction)
                report.checks['xu_inf'] = self.check_xu(direction)
        except Exception as e:
            logger.error(f"Diagnostics failed: {str(e)}")
            raise
        for alert in report.alerts:
            logger.warning(alert)
        return report
