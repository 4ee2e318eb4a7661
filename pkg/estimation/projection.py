"""
Variance-enhanced projection direction.

The direction u solves, for b = x*/||x*||,

    min u' S u   s.t.  ||S u - b||_inf <= lambda_n,  |b' S u - 1| <= lambda_n

through its dual

    min_v (1/4) v' H' S H v + b' H v + mu ||v||_1,   H = [b, I_p],

solved by cyclic coordinate descent. The primal point is u = -(H v)/2,
rescaled by ||x*|| so that u(c x*) = c u(x*).
"""
from dataclasses import dataclass
from typing import Optional, Tuple
import math
import numpy as np
from config.logging_config import get_logger
from config.solver_settings import PROJECTION_SETTINGS
from core.exceptions import DimensionMismatch, DomainError, InfeasibleDirection, NoFiniteMu, NonConvergence
from core.types import Dataset, Loading
from estimation.kernels import projection_dual_sweep

logger = get_logger('projection')


@dataclass(frozen=True)
class ProjectionOptions:
    lambda_n_constant: float = PROJECTION_SETTINGS['lambda_n_constant']
    mu_floor: float = PROJECTION_SETTINGS['mu_floor']
    mu_ceiling: float = PROJECTION_SETTINGS['mu_ceiling']
    mu_start_factor: float = PROJECTION_SETTINGS['mu_start_factor']
    bisection_width: float = PROJECTION_SETTINGS['bisection_width']
    relaxation_factor: float = PROJECTION_SETTINGS['relaxation_factor']
    max_relaxations: int = PROJECTION_SETTINGS['max_relaxations']
    slack_tol: float = PROJECTION_SETTINGS['slack_tol']
    tol: float = PROJECTION_SETTINGS['dual_tol']
    max_iter: int = PROJECTION_SETTINGS['dual_max_passes']
    divergence_objective: float = PROJECTION_SETTINGS['divergence_objective']
    divergence_iterate: float = PROJECTION_SETTINGS['divergence_iterate']
    zero_curvature: float = PROJECTION_SETTINGS['zero_curvature']
    first_ray_check: int = PROJECTION_SETTINGS['first_ray_check']
    diag_spread_warning: float = PROJECTION_SETTINGS['diag_spread_warning']


@dataclass(frozen=True)
class Gram:
    """Sample second-moment matrix (1/n) X'X."""
    sigma_hat: np.ndarray
    n: int

    @property
    def p(self) -> int:
        return self.sigma_hat.shape[0]


@dataclass
class DualSolution:
    dual_v: np.ndarray
    finite: bool
    mu: float
    passes: int = 0
    objective: float = float('nan')
    kkt_residual: float = float('nan')
    divergence: str = ''


@dataclass
class ProjectionDirection:
    u_hat: np.ndarray
    mu: float
    dual_v: np.ndarray
    linf_residual: float
    loading_residual: float
    lambda_n: float
    feasible: bool = True
    relaxations: int = 0
    xu_inf: float = float('nan')

    def certificate(self) -> dict:
        return {
            'mu': self.mu,
            'lambda_n': self.lambda_n,
            'linf_residual': self.linf_residual,
            'loading_residual': self.loading_residual,
            'feasible': self.feasible,
            'relaxations': self.relaxations,
            'xu_inf': self.xu_inf,
        }


def sample_gram(data: Dataset) -> Gram:
    sigma = data.x.T @ data.x / data.n
    return Gram(sigma_hat=0.5 * (sigma + sigma.T), n=data.n)


def lambda_n(n: int, p: int, constant: float = PROJECTION_SETTINGS['lambda_n_constant']) -> float:
    """Constraint tolerance sqrt(c log p / n)."""
    return math.sqrt(constant * math.log(p) / n)


def _unit(x_star: Loading) -> np.ndarray:
    return x_star.values / x_star.norm


def _dual_gradient(b: np.ndarray, q: np.ndarray) -> np.ndarray:
    g = np.empty(b.size + 1)
    g[0] = 0.5 * float(b @ q) + float(b @ b)
    g[1:] = 0.5 * q + b
    return g


def _subgradient_residual(g: np.ndarray, v: np.ndarray, mu: float) -> float:
    residual = np.where(v != 0.0, np.abs(g + mu * np.sign(v)), np.maximum(np.abs(g) - mu, 0.0))
    return float(np.max(residual))


def _ray_diverges(sigma, b, v, v_ref, q, obj, mu, limit, zero_curvature) -> bool:
    """
    Along d = v - v_ref the objective is bounded above by
    F(v) + t L + t^2 Q / 4; report divergence when that bound reaches ``limit``.
    """
    d = v - v_ref
    hd = d[0] * b + d[1:]
    slope = 0.5 * float(hd @ q) + float(b @ hd) + mu * float(np.sum(np.abs(d)))
    if slope >= 0.0:
        return False
    curvature = float(hd @ sigma @ hd)
    if curvature <= zero_curvature * max(1.0, float(hd @ hd)):
        return True
    return obj - slope * slope / curvature <= limit


def solve_projection_dual(
    gram: Gram,
    x_star: Loading,
    mu: float,
    opts: Optional[ProjectionOptions] = None,
) -> DualSolution:
    """
    Coordinate descent on the (p+1)-dimensional dual in fixed cyclic order.

    ``finite`` is False when a divergence certificate fires: objective below
    -divergence_objective * (1 + ||b||^2), iterate beyond divergence_iterate,
    a zero-curvature coordinate with slope above mu, or a recession ray
    (checked at doubling pass counts) whose quadratic upper bound reaches
    the objective limit. Running out of passes otherwise raises
    NonConvergence.
    """
    opts = opts or ProjectionOptions()
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    if x_star.p != gram.p:
        raise DimensionMismatch(f"loading has {x_star.p} entries but the Gram matrix is {gram.p}x{gram.p}")

    sigma = np.ascontiguousarray(gram.sigma_hat, dtype=float)
    b = _unit(x_star)
    p = b.size
    bb = float(b @ b)
    sigma_b = sigma @ b
    curv = np.empty(p + 1)
    curv[0] = 0.5 * float(b @ sigma_b)
    curv[1:] = 0.5 * np.diag(sigma)

    v = np.zeros(p + 1)
    s = np.zeros(p)
    q = np.zeros(p)
    limit = -opts.divergence_objective * (1.0 + bb)
    v_ref = v.copy()
    next_check = opts.first_ray_check
    obj = 0.0

    def infinite(reason: str, passes: int) -> DualSolution:
        logger.debug(f"Dual at mu={mu:.4e} diverges ({reason}) after {passes} passes")
        return DualSolution(dual_v=v.copy(), finite=False, mu=mu, passes=passes, objective=obj, divergence=reason)

    for passes in range(1, opts.max_iter + 1):
        move, unbounded = projection_dual_sweep(sigma, b, bb, sigma_b, curv, v, s, q, mu, opts.zero_curvature)
        obj = 0.25 * float(s @ q) + float(b @ s) + mu * float(np.sum(np.abs(v)))
        if unbounded >= 0:
            return infinite(f"zero curvature at coordinate {unbounded}", passes)
        if obj < limit:
            return infinite("objective", passes)
        if np.max(np.abs(v)) > opts.divergence_iterate:
            return infinite("iterate", passes)
        if move <= opts.tol:
            kkt = _subgradient_residual(_dual_gradient(b, q), v, mu)
            return DualSolution(dual_v=v, finite=True, mu=mu, passes=passes, objective=obj, kkt_residual=kkt)
        if passes == next_check:
            if _ray_diverges(sigma, b, v, v_ref, q, obj, mu, limit, opts.zero_curvature):
                return infinite("recession ray", passes)
            v_ref = v.copy()
            next_check *= 2

    raise NonConvergence(
        f"dual coordinate descent at mu={mu:.4e} did not converge in {opts.max_iter} passes",
        iterations=opts.max_iter,
    )


def _search_mu(gram: Gram, x_star: Loading, start: float, opts: ProjectionOptions) -> Tuple[float, DualSolution]:
    def attempt(mu: float) -> Optional[DualSolution]:
        try:
            sol = solve_projection_dual(gram, x_star, mu, opts)
        except NonConvergence as e:
            logger.debug(f"Treating mu={mu:.4e} as not finite: {str(e)}")
            return None
        return sol if sol.finite else None

    floor, ceiling = opts.mu_floor, opts.mu_ceiling
    mu = min(max(start, floor), ceiling)
    best = attempt(mu)
    if best is not None:
        hi = mu
        while True:
            if hi <= floor:
                return hi, best
            trial = max(0.5 * hi, floor)
            sol = attempt(trial)
            if sol is None:
                lo = trial
                break
            hi, best = trial, sol
    else:
        lo = mu
        while True:
            if lo >= ceiling:
                raise NoFiniteMu(f"dual has no finite minimum for any mu up to {ceiling}")
            trial = min(2.0 * lo, ceiling)
            sol = attempt(trial)
            if sol is not None:
                hi, best = trial, sol
                break
            lo = trial

    while (hi - lo) / lo > opts.bisection_width:
        mid = 0.5 * (lo + hi)
        sol = attempt(mid)
        if sol is None:
            lo = mid
        else:
            hi, best = mid, sol
    logger.debug(f"Selected mu={hi:.4e} (infinite at {lo:.4e})")
    return hi, best


def select_mu(gram: Gram, x_star: Loading, opts: Optional[ProjectionOptions] = None) -> float:
    """
    Smallest mu (to within the bisection width) at which the dual attains a
    finite minimum, searched by halving from mu_0 = mu_start_factor * lambda_n,
    doubling up to the ceiling when mu_0 itself diverges.
    """
    opts = opts or ProjectionOptions()
    start = opts.mu_start_factor * lambda_n(gram.n, gram.p, opts.lambda_n_constant)
    return _search_mu(gram, x_star, start, opts)[0]


def recover_direction(dual_v: np.ndarray, x_star: Loading) -> np.ndarray:
    b = _unit(x_star)
    return -0.5 * x_star.norm * (dual_v[0] * b + dual_v[1:])


def feasibility_residuals(gram: Gram, x_star: Loading, u_hat: np.ndarray) -> Tuple[float, float]:
    """(||S u - x*||_inf, |x*' S u - ||x*||^2|)."""
    su = gram.sigma_hat @ u_hat
    linf = float(np.max(np.abs(su - x_star.values)))
    loading = float(abs(x_star.values @ su - x_star.norm ** 2))
    return linf, loading


def _certified(linf: float, loading: float, norm: float, lam: float, slack: float) -> bool:
    return linf <= norm * lam * (1.0 + slack) and loading <= norm ** 2 * lam * (1.0 + slack)


def projection_direction(
    data: Dataset,
    x_star: Loading,
    opts: Optional[ProjectionOptions] = None,
    gram: Optional[Gram] = None,
) -> ProjectionDirection:
    """
    Projection direction for loading x*, certified against lambda_n.

    The tolerance lambda_n is relaxed by ``relaxation_factor`` up to
    ``max_relaxations`` times; if the certificate still fails,
    InfeasibleDirection is raised carrying the best-effort direction.
    """
    opts = opts or ProjectionOptions()
    if x_star.p != data.p:
        raise DimensionMismatch(f"loading has {x_star.p} entries but the dataset has {data.p} columns")
    gram = gram or sample_gram(data)

    diag = np.diag(gram.sigma_hat)
    if diag.min() <= 0.0 or diag.max() / diag.min() > opts.diag_spread_warning:
        logger.warning(
            f"Gram diagonal spans [{diag.min():.3e}, {diag.max():.3e}]; "
            f"a single lambda_n may not suit every column"
        )

    lam = lambda_n(data.n, data.p, opts.lambda_n_constant)
    mu, sol = _search_mu(gram, x_star, opts.mu_start_factor * lam, opts)
    u_hat = recover_direction(sol.dual_v, x_star)
    linf, loading = feasibility_residuals(gram, x_star, u_hat)
    xu_inf = float(np.max(np.abs(data.x @ u_hat)))
    logger.debug(f"||X u||_inf = {xu_inf:.4e} at mu={mu:.4e}")

    direction = ProjectionDirection(
        u_hat=u_hat,
        mu=mu,
        dual_v=sol.dual_v,
        linf_residual=linf,
        loading_residual=loading,
        lambda_n=lam,
        xu_inf=xu_inf,
    )
    norm = x_star.norm
    for relaxations in range(opts.max_relaxations + 1):
        if _certified(linf, loading, norm, lam, opts.slack_tol):
            direction.lambda_n = lam
            direction.relaxations = relaxations
            return direction
        if relaxations < opts.max_relaxations:
            lam *= opts.relaxation_factor
            logger.info(f"Projection certificate failed; relaxing lambda_n to {lam:.4e}")

    direction.lambda_n = lam
    direction.relaxations = opts.max_relaxations
    direction.feasible = False
    logger.warning(
        f"Projection direction infeasible after {opts.max_relaxations} relaxations "
        f"(linf {linf:.3e}, loading {loading:.3e})"
    )
    raise InfeasibleDirection(linf, loading, direction=direction)
