"""
Monte-Carlo harness: experiment configuration, one replication, and the
(optionally parallel, resumable) loop over replications.
"""
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import json
import os
import time
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic import ValidationError as PydanticValidationError
from config.logging_config import get_logger
from config.settings import DEFAULT_ALPHA, DEFAULT_SEED, DEFAULT_THRESHOLD, SCHEMA_VERSION
from config.solver_settings import CV_SETTINGS, SIMULATION_SETTINGS
from core.exceptions import ConfigError, DataIOError, DomainError
from core.numerics import LowerTriangular, RngStream, cholesky
from core.types import Loading, Method
from methods.base_method import InferenceOptions, build_method, prepare_fit
from simulation.designs import (
    BetaSpec, LoadingSpec, gen_beta, gen_dataset, gen_loading, make_ar_covariance, true_probability,
)
from simulation.metrics import SummaryMetrics, aggregate

logger = get_logger('simulation')

REPLICATION_DIR = 'replications'


class SimulationConfig(BaseModel):
    """Complete description of one Monte-Carlo experiment; unknown fields are rejected."""
    model_config = ConfigDict(extra='forbid', frozen=True, populate_by_name=True)

    schema_version: int = SCHEMA_VERSION
    name: Optional[str] = None
    n: int = Field(ge=20)
    p: int = Field(ge=2)
    beta_spec: BetaSpec
    loading_spec: LoadingSpec
    n_reps: int = Field(default=SIMULATION_SETTINGS['n_reps'], ge=1)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0, lt=1.0)
    threshold_c: float = Field(default=DEFAULT_THRESHOLD, gt=0.0, lt=1.0)
    master_seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2 ** 64)
    methods: Tuple[Method, ...] = (Method.LIVE, Method.PLUGIN_LASSO, Method.POST_SELECTION)
    lambda_: Optional[float] = Field(default=None, gt=0.0, alias='lambda')
    cv_rule: str = CV_SETTINGS['rule']
    n_folds: int = Field(default=CV_SETTINGS['n_folds'], ge=2)
    grid_size: int = Field(default=CV_SETTINGS['grid_size'], ge=2)

    @field_validator('schema_version')
    @classmethod
    def validate_schema_version(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f'unsupported schema_version {v}, expected {SCHEMA_VERSION}')
        return v

    @field_validator('methods', mode='before')
    @classmethod
    def parse_methods(cls, v):
        if isinstance(v, (str, Method)):
            v = [v]
        out = []
        for item in v:
            out.append(item if isinstance(item, Method) else Method.from_cli(str(item)))
        if not out:
            raise ValueError('at least one method is required')
        return tuple(dict.fromkeys(out))

    @field_validator('cv_rule')
    @classmethod
    def validate_cv_rule(cls, v: str) -> str:
        if v not in ('min', '1se'):
            raise ValueError("cv_rule must be 'min' or '1se'")
        return v

    def inference_options(self) -> InferenceOptions:
        return InferenceOptions(
            lambda_=self.lambda_, cv_rule=self.cv_rule, n_folds=self.n_folds, grid_size=self.grid_size,
        )

    def snapshot(self) -> dict:
        return self.model_dump(mode='json', by_alias=True)


def load_config(payload: dict) -> SimulationConfig:
    """Validate a config mapping, turning pydantic errors into field-level ConfigError."""
    try:
        return SimulationConfig.model_validate(payload)
    except PydanticValidationError as e:
        field_errors = {
            '.'.join(str(part) for part in err['loc']) or '<root>': err['msg'] for err in e.errors()
        }
        raise ConfigError(field_errors)


@dataclass
class MethodOutcome:
    linear_estimate: Optional[float] = None
    probability: Optional[float] = None
    ci_lower: Optional[float] = None
    ci_upper: Optional[float] = None
    reject: Optional[bool] = None
    runtime_seconds: float = 0.0
    error: Optional[str] = None
    warnings: List[str] = field(default_factory=list)


@dataclass
class ReplicationResult:
    rep_index: int
    truth: float
    outcomes: Dict[str, MethodOutcome] = field(default_factory=dict)
    fit_seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> 'ReplicationResult':
        outcomes = {k: MethodOutcome(**v) for k, v in payload['outcomes'].items()}
        return cls(
            rep_index=int(payload['rep_index']),
            truth=float(payload['truth']),
            outcomes=outcomes,
            fit_seconds=float(payload.get('fit_seconds', 0.0)),
        )


@dataclass(frozen=True)
class Experiment:
    """Per-experiment constants shared by every replication."""
    beta: object
    loading: Loading
    chol: LowerTriangular
    truth: float


def prepare_experiment(config: SimulationConfig) -> Experiment:
    beta = gen_beta(config.beta_spec, config.p)
    loading_stream = RngStream(config.master_seed, SIMULATION_SETTINGS['loading_stream_index'])
    loading = gen_loading(config.loading_spec, config.p, loading_stream)
    chol = cholesky(make_ar_covariance(config.p - 1, SIMULATION_SETTINGS['design_rho']))
    return Experiment(beta=beta, loading=loading, chol=chol, truth=true_probability(beta, loading))


def run_replication(
    config: SimulationConfig,
    rep_index: int,
    experiment: Optional[Experiment] = None,
) -> ReplicationResult:
    """
    One replication on stream (master_seed, rep_index): data from child 0,
    cross-validation folds from child 1. Method failures are recorded in
    the result and never abort it.
    """
    if not 0 <= rep_index < config.n_reps:
        raise DomainError(f"rep_index must lie in [0, {config.n_reps}), got {rep_index}")
    experiment = experiment or prepare_experiment(config)
    stream = RngStream(config.master_seed, rep_index)
    data = gen_dataset(config.n, experiment.beta, experiment.chol, stream.child(0))
    result = ReplicationResult(rep_index=rep_index, truth=experiment.truth)
    opts = config.inference_options()

    started = time.perf_counter()
    try:
        fit = prepare_fit(data, opts, stream.child(1))
    except Exception as e:
        logger.error(f"Replication {rep_index}: penalized fit failed: {str(e)}")
        for method in config.methods:
            result.outcomes[method.value] = MethodOutcome(error=f"fit failed: {str(e)}")
        return result
    result.fit_seconds = time.perf_counter() - started

    for method in config.methods:
        runner = build_method(method, config.alpha, config.threshold_c, opts)
        try:
            res = runner.run(fit, experiment.loading)
            result.outcomes[method.value] = MethodOutcome(
                linear_estimate=res.linear_estimate,
                probability=res.case_probability,
                ci_lower=res.ci_lower,
                ci_upper=res.ci_upper,
                reject=res.reject_null,
                runtime_seconds=result.fit_seconds + runner.last_runtime,
                warnings=list(res.warnings),
            )
        except Exception as e:
            logger.warning(f"Replication {rep_index}: {method.value} failed: {str(e)}")
            result.outcomes[method.value] = MethodOutcome(
                runtime_seconds=result.fit_seconds + runner.last_runtime, error=str(e),
            )
    return result


def _replication_path(out_dir: Path, rep_index: int) -> Path:
    return out_dir / REPLICATION_DIR / f"rep_{rep_index:06d}.json"


def _write_replication(out_dir: Path, result: ReplicationResult) -> None:
    """Write-then-rename so an interrupted run leaves only whole files."""
    path = _replication_path(out_dir, result.rep_index)
    tmp = path.with_suffix('.json.tmp')
    try:
        with open(tmp, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(result.to_dict(), f, sort_keys=True)
            f.write('\n')
        os.replace(tmp, path)
    except OSError as e:
        raise DataIOError(f"{path}: cannot write replication: {str(e)}")


def _load_completed(out_dir: Path, n_reps: int) -> Dict[int, ReplicationResult]:
    completed: Dict[int, ReplicationResult] = {}
    rep_dir = out_dir / REPLICATION_DIR
    if not rep_dir.is_dir():
        return completed
    for path in sorted(rep_dir.glob('rep_*.json')):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                result = ReplicationResult.from_dict(json.load(f))
        except (OSError, ValueError, KeyError, TypeError) as e:
            logger.warning(f"Ignoring unreadable replication file {path}: {str(e)}")
            continue
        if 0 <= result.rep_index < n_reps:
            completed[result.rep_index] = result
    return completed


def run_simulation(
    config: SimulationConfig,
    jobs: int = 1,
    out_dir: Optional[Path] = None,
) -> Tuple[List[ReplicationResult], SummaryMetrics]:
    """
    Run every replication (skipping ones already on disk under ``out_dir``),
    then aggregate in rep_index order. Results do not depend on ``jobs``.
    """
    if jobs < 1:
        raise DomainError(f"jobs must be positive, got {jobs}")
    experiment = prepare_experiment(config)
    logger.info(
        f"Simulation {config.name or ''}: n={config.n}, p={config.p}, reps={config.n_reps}, "
        f"truth={experiment.truth:.6f}, ||x*||={experiment.loading.norm:.4f}"
    )

    completed: Dict[int, ReplicationResult] = {}
    if out_dir is not None:
        out_dir = Path(out_dir)
        try:
            (out_dir / REPLICATION_DIR).mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DataIOError(f"{out_dir}: cannot create output directory: {str(e)}")
        completed = _load_completed(out_dir, config.n_reps)
        if completed:
            logger.info(f"Resuming: {len(completed)} replications already complete")
    pending = [r for r in range(config.n_reps) if r not in completed]

    def record(result: ReplicationResult) -> None:
        completed[result.rep_index] = result
        if out_dir is not None:
            _write_replication(out_dir, result)
        if len(completed) % 10 == 0 or len(completed) == config.n_reps:
            logger.info(f"{len(completed)}/{config.n_reps} replications complete")

    if jobs == 1 or len(pending) <= 1:
        for rep in pending:
            record(run_replication(config, rep, experiment))
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        try:
            futures = [pool.submit(run_replication, config, rep, experiment) for rep in pending]
            for future in as_completed(futures):
                record(future.result())
        except KeyboardInterrupt:
            logger.warning("Interrupted; completed replication files are kept for resuming")
            pool.shutdown(wait=False, cancel_futures=True)
            raise
        pool.shutdown(wait=True)

    results = [completed[r] for r in range(config.n_reps)]
    return results, aggregate(results, experiment.truth, experiment.loading.norm)
