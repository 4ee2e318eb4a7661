"""
Generators for the Monte-Carlo designs: AR covariance, regression vectors,
the once-drawn query loadings and Gaussian-design logistic datasets.
"""
from typing import Annotated, Literal, Union
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat
from config.solver_settings import SIMULATION_SETTINGS
from core.exceptions import DomainError
from core.numerics import LowerTriangular, RngStream, cholesky, sample_standard_gaussian, sample_uniform
from core.types import Dataset, Loading, validate_dataset, validate_loading
from estimation.logistic_lasso import sigmoid

# 1-based index of the last coordinate left unshrunk in a loading
SIGNAL_END = SIMULATION_SETTINGS['signal_end']


class _Spec(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class ExactSparse(_Spec):
    kind: Literal['exact_sparse'] = 'exact_sparse'


class Decay(_Spec):
    kind: Literal['decay'] = 'decay'
    exponent: PositiveFloat


class ExactSparseAdversarial(_Spec):
    kind: Literal['exact_sparse_adversarial'] = 'exact_sparse_adversarial'


class ExactSparseWithIntercept(_Spec):
    kind: Literal['exact_sparse_intercept'] = 'exact_sparse_intercept'
    b1: float


class Loading1(_Spec):
    kind: Literal['loading1'] = 'loading1'
    r: PositiveFloat = 1.0


class Loading2(_Spec):
    kind: Literal['loading2'] = 'loading2'
    r: PositiveFloat = 1.0


class Loading3(_Spec):
    kind: Literal['loading3'] = 'loading3'


BetaSpec = Annotated[
    Union[ExactSparse, Decay, ExactSparseAdversarial, ExactSparseWithIntercept],
    Field(discriminator='kind'),
]
LoadingSpec = Annotated[Union[Loading1, Loading2, Loading3], Field(discriminator='kind')]


def make_ar_covariance(p_minus_1: int, rho: float = SIMULATION_SETTINGS['design_rho']) -> np.ndarray:
    """
    Sigma_jl = rho^(1 + |j - l|) for rho >= 0.

    For negative rho the literal formula has a negative diagonal, so the
    leading factor is taken as |rho|: Sigma_jl = |rho| rho^|j - l|, which
    is positive definite and keeps the alternating correlation pattern.
    """
    if p_minus_1 < 1:
        raise DomainError(f"covariance dimension must be positive, got {p_minus_1}")
    if not abs(rho) < 1.0:
        raise DomainError(f"AR base must satisfy |rho| < 1, got {rho}")
    idx = np.arange(p_minus_1)
    return abs(rho) * np.power(float(rho), np.abs(idx[:, None] - idx[None, :]))


def _exact_sparse(p: int) -> np.ndarray:
    beta = np.zeros(p)
    stop = min(SIGNAL_END, p)
    j = np.arange(2, stop + 1)
    beta[1:stop] = (j - 1) / 20.0
    return beta


def gen_beta(spec: BetaSpec, p: int) -> np.ndarray:
    """Regression vector of length p (1-based description, intercept first)."""
    if p < 2:
        raise DomainError(f"p must be at least 2, got {p}")
    if isinstance(spec, ExactSparse):
        return _exact_sparse(p)
    if isinstance(spec, Decay):
        beta = np.zeros(p)
        beta[1:] = np.arange(1, p, dtype=float) ** (-spec.exponent)
        return beta
    if isinstance(spec, ExactSparseAdversarial):
        beta = _exact_sparse(p)
        small = [j - 1 for j in SIMULATION_SETTINGS['loading3_indices'] if j <= p]
        beta[small] = SIMULATION_SETTINGS['adversarial_beta']
        return beta
    if isinstance(spec, ExactSparseWithIntercept):
        beta = _exact_sparse(p)
        beta[0] = spec.b1
        return beta
    raise DomainError(f"unknown beta spec {spec!r}")


def gen_loading(spec: LoadingSpec, p: int, stream: RngStream) -> Loading:
    """
    x*_1 = 1, x*_{-1} drawn once from N(0, Sigma_spec); entries past
    SIGNAL_END are multiplied by r. Loading 3 pins entries 9 and 10 to 10
    and uses r = 1/25. The draw restarts ``stream``, so repeated calls agree.
    """
    if p < 2:
        raise DomainError(f"p must be at least 2, got {p}")
    rho = SIMULATION_SETTINGS['loading2_rho'] if isinstance(spec, Loading2) else SIMULATION_SETTINGS['design_rho']
    chol = cholesky(make_ar_covariance(p - 1, rho))
    basis = np.empty(p)
    basis[0] = 1.0
    basis[1:] = chol.matvec(sample_standard_gaussian(stream.fresh(), p - 1))

    r = 1.0 / 25.0 if isinstance(spec, Loading3) else spec.r
    values = basis.copy()
    values[SIGNAL_END:] *= r
    if isinstance(spec, Loading3):
        pinned = [j - 1 for j in SIMULATION_SETTINGS['loading3_indices'] if j <= p]
        values[pinned] = SIMULATION_SETTINGS['loading3_value']
    return validate_loading(values, p)


def gen_dataset(n: int, beta: np.ndarray, chol: LowerTriangular, stream: RngStream) -> Dataset:
    """
    X_i1 = 1, X_{i,-1} = L z_i with z_i ~ N(0, I); y_i ~ Bernoulli(h(X_i' beta))
    from one uniform per observation. Gaussians are drawn before uniforms.
    """
    p = beta.shape[0]
    if chol.dim != p - 1:
        raise DomainError(f"Cholesky factor has dim {chol.dim}, expected {p - 1}")
    z = sample_standard_gaussian(stream, n * (p - 1)).reshape(n, p - 1)
    x = np.empty((n, p))
    x[:, 0] = 1.0
    x[:, 1:] = z @ chol.entries.T
    u = sample_uniform(stream, n)
    y = (u < sigmoid(x @ beta)).astype(float)
    return validate_dataset(x, y, has_intercept_column=True)


def true_probability(beta: np.ndarray, x_star: Loading) -> float:
    return sigmoid(float(x_star.values @ beta))
