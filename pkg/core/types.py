"""
Shared data model: datasets, loadings, fitted models and inference results.
"""
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional, Sequence
import enum
import math
import numpy as np
from core.exceptions import (
    BadInterceptColumn, DimensionMismatch, DomainError, NonBinaryOutcome, NonFiniteEntry,
)


class Method(enum.Enum):
    LIVE = "LiVE"
    PLUGIN_LASSO = "PluginLasso"
    POST_SELECTION = "PostSelection"

    @classmethod
    def from_cli(cls, name: str) -> 'Method':
        """Map the short CLI spelling (live, plugin, postsel) to a member."""
        aliases = {'live': cls.LIVE, 'plugin': cls.PLUGIN_LASSO, 'postsel': cls.POST_SELECTION}
        key = name.strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        return cls(key)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Design matrix X (rows are observations) and binary outcomes y."""
    x: np.ndarray
    y: np.ndarray
    has_intercept_column: bool = False

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset_columns(self, columns: Sequence[int]) -> 'Dataset':
        columns = [int(c) for c in columns]
        keeps_intercept = self.has_intercept_column and len(columns) > 0 and columns[0] == 0
        return Dataset(_frozen(self.x[:, columns]), self.y, keeps_intercept)

    def subset_rows(self, rows: Sequence[int]) -> 'Dataset':
        rows = np.asarray(rows, dtype=int)
        return Dataset(_frozen(self.x[rows]), _frozen(self.y[rows]), self.has_intercept_column)


def validate_dataset(x: Any, y: Any, has_intercept_column: bool = False) -> Dataset:
    """
    Build a Dataset, rejecting bad input with exactly one named error.

    Checks run in a fixed order: shapes, finiteness of X, binary y, then
    the intercept column.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"x must be a 2-D matrix, got {x.ndim} dimension(s)")
    if y.ndim != 1:
        raise DimensionMismatch(f"y must be a vector, got {y.ndim} dimension(s)")
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
    if x.shape[0] < 2 or x.shape[1] < 1:
        raise DimensionMismatch(f"need n >= 2 and p >= 1, got n={x.shape[0]}, p={x.shape[1]}")

    bad = np.argwhere(~np.isfinite(x))
    if bad.size:
        row, col = bad[0]
        raise NonFiniteEntry(int(row), int(col))

    not_binary = np.flatnonzero((y != 0.0) & (y != 1.0))
    if not_binary.size:
        idx = int(not_binary[0])
        raise NonBinaryOutcome(idx, y[idx].item())

    if has_intercept_column:
        off = np.flatnonzero(x[:, 0] != 1.0)
        if off.size:
            row = int(off[0])
            raise BadInterceptColumn(row, float(x[row, 0]))

    return Dataset(_frozen(x), _frozen(y), bool(has_intercept_column))


@dataclass(frozen=True)
class Loading:
    """The query covariate vector x*."""
    values: np.ndarray

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def scaled(self, c: float) -> 'Loading':
        return Loading(_frozen(c * self.values))


def validate_loading(values: Any, p: Optional[int] = None) -> Loading:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise DimensionMismatch(f"loading must be a vector, got {values.ndim} dimension(s)")
    if p is not None and values.shape[0] != p:
        raise DimensionMismatch(f"loading has {values.shape[0]} entries but the dataset has {p} columns")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFiniteEntry(0, int(bad[0]))
    if not np.any(values != 0.0):
        raise DomainError("loading must have positive Euclidean norm")
    return Loading(_frozen(values))


@dataclass
class FittedModel:
    """Penalized logistic fit with its convergence diagnostics."""
    beta_hat: np.ndarray
    lambda_: float
    objective_value: float
    iterations: int
    converged: bool
    kkt_residual: float = float('nan')
    penalize_intercept: bool = False
    objective_trace: List[float] = field(default_factory=list)

    def support(self, zero_threshold: float = 1e-10) -> np.ndarray:
        return np.flatnonzero(np.abs(self.beta_hat) >= zero_threshold)


@dataclass
class InferenceResult:
    """
    Output of one inference method for one loading.

    ``variance`` is NaN and the CI / test fields are None for methods that
    provide a point estimate only.
    """
    linear_estimate: float
    variance: float
    case_probability: float
    ci_lower: Optional[float]
    ci_upper: Optional[float]
    alpha: float
    reject_null: Optional[bool]
    p_value: Optional[float]
    threshold: float
    method: Method
    warnings: List[str] = field(default_factory=list)
    certificate: Optional[Dict[str, float]] = None
    n_clamped: int = 0
    separation_detected: bool = False
    degenerate: bool = False
    lambda_: Optional[float] = None

    @property
    def has_interval(self) -> bool:
        return self.ci_lower is not None and self.ci_upper is not None

    def covers(self, truth: float) -> bool:
        return self.has_interval and self.ci_lower <= truth <= self.ci_upper

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['method'] = self.method.value
        out['lambda'] = out.pop('lambda_')
        if isinstance(self.variance, float) and math.isnan(self.variance):
            out['variance'] = None
        return out
