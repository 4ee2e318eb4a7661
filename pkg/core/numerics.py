"""
Deterministic numerical primitives: seeded random streams, Gaussian sampling,
Cholesky factorization and the standard normal CDF / quantile.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple
import math
import numpy as np
from scipy import linalg, special
from scipy.linalg import lapack
from config.logging_config import get_logger
from core.exceptions import DomainError, NotPositiveDefinite

logger = get_logger('numerics')

_UINT64_LIMIT = 2 ** 64

# Acklam's rational approximation of the normal quantile
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


@dataclass
class RngStream:
    """
    A reproducible random stream identified by (master_seed, stream_index).

    Streams are derived through numpy's SeedSequence spawn keys, so distinct
    indices under one master seed are independent by construction. The
    generator state advances as draws are taken; ``fresh()`` restarts it.
    """
    master_seed: int
    stream_index: int
    path: Tuple[int, ...] = ()
    _generator: Optional[np.random.Generator] = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        for name, value in (('master_seed', self.master_seed), ('stream_index', self.stream_index)):
            if not isinstance(value, (int, np.integer)) or not 0 <= int(value) < _UINT64_LIMIT:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
        self.master_seed = int(self.master_seed)
        self.stream_index = int(self.stream_index)
        self.path = tuple(int(k) for k in self.path)
        seed_seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,) + self.path)
        self._generator = np.random.Generator(np.random.PCG64(seed_seq))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def fresh(self) -> 'RngStream':
        """Same stream, restarted from its initial state."""
        return RngStream(self.master_seed, self.stream_index, self.path)

    def child(self, key: int) -> 'RngStream':
        """Independent sub-stream, e.g. for the CV folds of one replication."""
        return RngStream(self.master_seed, self.stream_index, self.path + (int(key),))


@dataclass(frozen=True)
class LowerTriangular:
    """Cholesky factor L with L @ L.T equal to the factored matrix."""
    dim: int
    entries: np.ndarray

    def matvec(self, z: np.ndarray) -> np.ndarray:
        return self.entries @ z

    def reconstruct(self) -> np.ndarray:
        return self.entries @ self.entries.T

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve L x = rhs."""
        return linalg.solve_triangular(self.entries, rhs, lower=True)


def std_normal_cdf(z: float) -> float:
    """Phi(z)."""
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"std_normal_cdf requires a finite argument, got {z}")
    return float(special.ndtr(z))


def _acklam(q: float) -> float:
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        return ((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
                / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    if q > 1.0 - _P_LOW:
        t = math.sqrt(-2.0 * math.log1p(-q))
        return -((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
                 / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    t = q - 0.5
    r = t * t
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * t
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def std_normal_quantile(q: float) -> float:
    """
    Inverse of Phi: rational approximation followed by one Halley refinement.

    The residual Phi(x) - q is evaluated on the side of the tail that keeps
    it accurate, so the refinement also works for q close to 1.
    """
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"std_normal_quantile requires 0 < q < 1, got {q}")
    x = _acklam(q)
    if q > 0.5:
        err = (1.0 - q) - float(special.ndtr(-x))
    else:
        err = float(special.ndtr(x)) - q
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def cholesky(sigma: np.ndarray) -> LowerTriangular:
    """
    Cholesky factor of a symmetric positive-definite matrix.

    Raises NotPositiveDefinite with the zero-based index of the failing pivot.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] == 0:
        raise DomainError(f"cholesky requires a non-empty square matrix, got shape {sigma.shape}")
    scale = max(1.0, float(np.max(np.abs(sigma))))
    asym = float(np.max(np.abs(sigma - sigma.T)))
    if asym > 1e-12 * scale:
        raise DomainError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    factor, info = lapack.dpotrf(sigma, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(int(info) - 1)
    if info < 0:
        raise DomainError(f"dpotrf rejected argument {-info}")
    return LowerTriangular(dim=sigma.shape[0], entries=np.tril(factor))


def sample_standard_gaussian(stream: RngStream, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. N(0, 1) values, advancing the stream."""
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    return stream.generator.standard_normal(int(count))


def sample_uniform(stream: RngStream, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. U(0, 1) values, advancing the stream."""
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    return stream.generator.random(int(count))
