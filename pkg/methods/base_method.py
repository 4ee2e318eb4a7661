"""
Base class for case-probability inference methods.

Every method consumes one shared penalized fit, so LiVE, the plug-in and
the post-selection refit of a replication all see the same beta-hat.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional
import time
from config.logging_config import get_logger
from config.settings import DEFAULT_ALPHA, DEFAULT_THRESHOLD
from config.solver_settings import CV_SETTINGS, INFERENCE_SETTINGS
from core.exceptions import DomainError, LiveError
from core.numerics import RngStream
from core.types import Dataset, FittedModel, InferenceResult, Loading, Method
from estimation.logistic_lasso import CvResult, LassoOptions, fit_cv_lasso, fit_logistic_lasso
from estimation.projection import Gram, ProjectionOptions, sample_gram

logger = get_logger('inference')


@dataclass(frozen=True)
class InferenceOptions:
    """Knobs shared by all methods; defaults come from config.solver_settings."""
    lasso: LassoOptions = field(default_factory=LassoOptions)
    projection: ProjectionOptions = field(default_factory=ProjectionOptions)
    weight_floor: float = INFERENCE_SETTINGS['weight_floor']
    lambda_: Optional[float] = None
    cv_rule: str = CV_SETTINGS['rule']
    n_folds: int = CV_SETTINGS['n_folds']
    grid_size: int = CV_SETTINGS['grid_size']
    allow_infeasible: bool = True


@dataclass
class SharedFit:
    """One penalized fit (and lazily its Gram matrix) reused across methods and loadings."""
    data: Dataset
    model: FittedModel
    cv: Optional[CvResult] = None
    _gram: Optional[Gram] = field(default=None, repr=False)

    @property
    def gram(self) -> Gram:
        if self._gram is None:
            self._gram = sample_gram(self.data)
        return self._gram


def prepare_fit(
    data: Dataset,
    opts: Optional[InferenceOptions] = None,
    stream: Optional[RngStream] = None,
) -> SharedFit:
    """Fit at the fixed lambda in ``opts`` or, when none is given, by cross-validation."""
    opts = opts or InferenceOptions()
    if opts.lambda_ is not None:
        model = fit_logistic_lasso(data, opts.lambda_, opts=opts.lasso)
        return SharedFit(data=data, model=model)
    model, cv = fit_cv_lasso(
        data,
        stream=stream,
        rule=opts.cv_rule,
        n_folds=opts.n_folds,
        grid_size=opts.grid_size,
        opts=opts.lasso,
    )
    return SharedFit(data=data, model=model, cv=cv)


def check_probability(name: str, value: float) -> float:
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie strictly inside (0, 1), got {value}")
    return float(value)


class BaseMethod(ABC):
    """Abstract base class for all inference methods."""

    method: Method

    def __init__(
        self,
        alpha: float = DEFAULT_ALPHA,
        threshold: float = DEFAULT_THRESHOLD,
        opts: Optional[InferenceOptions] = None,
        params: Dict[str, Any] = None,
    ):
        self.alpha = check_probability('alpha', alpha)
        self.threshold = check_probability('threshold', threshold)
        self.opts = opts or InferenceOptions()
        self.params = params or {}
        self.last_runtime = 0.0

    @property
    def name(self) -> str:
        return self.method.value

    @abstractmethod
    def infer(self, fit: SharedFit, x_star: Loading) -> InferenceResult:
        """Inference for one loading from a shared fit. To be implemented by specific methods."""
        pass

    def run(self, fit: SharedFit, x_star: Loading) -> InferenceResult:
        """Timed ``infer`` that logs failures before re-raising them."""
        started = time.perf_counter()
        try:
            return self.infer(fit, x_star)
        except LiveError as e:
            logger.error(f"{self.name} failed: {str(e)}")
            raise
        finally:
            self.last_runtime = time.perf_counter() - started


def build_method(
    method: Method,
    alpha: float = DEFAULT_ALPHA,
    threshold: float = DEFAULT_THRESHOLD,
    opts: Optional[InferenceOptions] = None,
) -> BaseMethod:
    from methods.baselines import PluginLassoMethod, PostSelectionMethod
    from methods.live import LiveMethod

    registry = {
        Method.LIVE: LiveMethod,
        Method.PLUGIN_LASSO: PluginLassoMethod,
        Method.POST_SELECTION: PostSelectionMethod,
    }
    return registry[method](alpha=alpha, threshold=threshold, opts=opts)
