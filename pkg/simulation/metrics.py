"""
Aggregation of replication outcomes into table rows (Cov, ERR, Len, RMSE, Bias, SE, t).
"""
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional, Sequence
import math
import numpy as np
from config.logging_config import get_logger
from core.exceptions import DomainError
from core.types import Method

logger = get_logger('simulation')

TABLE_COLUMNS = ['Cov', 'ERR', 'Len', 'RMSE', 'Bias', 'SE', 't']


@dataclass
class MethodMetrics:
    method: str
    cov: float
    err: float
    len: float
    rmse: float
    bias: float
    se: float
    t: float
    n_reps: int
    n_failed: int = 0
    n_without_ci: int = 0
    n_without_test: int = 0

    def table_row(self) -> Dict[str, float]:
        return dict(zip(TABLE_COLUMNS, [self.cov, self.err, self.len, self.rmse, self.bias, self.se, self.t]))


@dataclass
class SummaryMetrics:
    truth: float
    x_norm: Optional[float] = None
    rows: List[MethodMetrics] = field(default_factory=list)

    def for_method(self, method: Method) -> MethodMetrics:
        for row in self.rows:
            if row.method == method.value:
                return row
        raise KeyError(method.value)

    def to_dict(self) -> dict:
        return asdict(self)


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else float('nan')


def aggregate(results: Sequence, truth: float, x_norm: Optional[float] = None) -> SummaryMetrics:
    """
    Fold replication results into one row per method.

    Bias and SE use the population formulas over the successful replications
    so RMSE^2 = Bias^2 + SE^2 exactly. Failed replications and missing
    intervals or tests are excluded from the affected metric and counted.
    """
    if not results:
        raise DomainError("aggregate needs at least one replication result")

    methods: List[str] = []
    for res in results:
        for name in res.outcomes:
            if name not in methods:
                methods.append(name)

    summary = SummaryMetrics(truth=float(truth), x_norm=x_norm)
    for name in methods:
        probs: List[float] = []
        covered: List[float] = []
        lengths: List[float] = []
        rejects: List[float] = []
        runtimes: List[float] = []
        failed = no_ci = no_test = 0
        for res in results:
            out = res.outcomes.get(name)
            if out is None or out.error is not None or out.probability is None:
                failed += 1
                continue
            probs.append(out.probability)
            runtimes.append(out.runtime_seconds)
            if out.ci_lower is None or out.ci_upper is None:
                no_ci += 1
            else:
                covered.append(1.0 if out.ci_lower <= truth <= out.ci_upper else 0.0)
                lengths.append(out.ci_upper - out.ci_lower)
            if out.reject is None:
                no_test += 1
            else:
                rejects.append(1.0 if out.reject else 0.0)

        if probs:
            bias = float(np.mean(probs)) - truth
            se = float(np.std(probs))
            rmse = math.sqrt(bias * bias + se * se)
        else:
            bias = se = rmse = float('nan')
        if failed:
            logger.warning(f"{name}: {failed} of {len(results)} replications failed and were excluded")

        summary.rows.append(MethodMetrics(
            method=name,
            cov=_mean(covered),
            err=_mean(rejects),
            len=_mean(lengths),
            rmse=rmse,
            bias=bias,
            se=se,
            t=_mean(runtimes),
            n_reps=len(probs),
            n_failed=failed,
            n_without_ci=no_ci,
            n_without_test=no_test,
        ))
    return summary
