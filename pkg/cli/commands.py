"""
The three command-line workflows: fit, infer and simulate.

Each command takes the parsed argparse namespace, writes its artifacts and
returns the process exit code. Library errors propagate to ``main`` which
maps them to exit codes.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional
import sys
import numpy as np
import pandas as pd
from config.logging_config import get_logger
from config.settings import settings
from config.solver_settings import CV_SETTINGS
from core.exceptions import ConfigError
from core.numerics import RngStream
from core.types import FittedModel, InferenceResult, Method
from estimation.logistic_lasso import LassoOptions, cross_validate_lambda, fit_lasso_path, fit_logistic_lasso
from methods.base_method import InferenceOptions, build_method, prepare_fit
from methods.live import infer_batch
from monitoring.diagnostics import FitDiagnostics
from simulation.metrics import TABLE_COLUMNS, SummaryMetrics
from simulation.presets import preset_config
from simulation.runner import ReplicationResult, SimulationConfig, load_config, run_simulation
from utils.run_manifest import RunManifest
from cli import io

logger = get_logger('cli')

# stream children: 0 for data generation, 1 for cross-validation folds
CV_CHILD = 1


def _emit(payload: Dict[str, Any], out_dir: Optional[Path], filename: str) -> None:
    if out_dir is None:
        sys.stdout.write(io.to_json(payload))
    else:
        io.write_json(Path(out_dir) / filename, payload)


def _args_snapshot(args, keys: List[str]) -> Dict[str, Any]:
    snap = {}
    for key in keys:
        value = getattr(args, key, None)
        snap[key] = str(value) if isinstance(value, Path) else value
    return snap


def _path_summary(models: List[FittedModel]) -> pd.DataFrame:
    return pd.DataFrame({
        'lambda': [m.lambda_ for m in models],
        'n_nonzero': [int(np.count_nonzero(m.beta_hat)) for m in models],
        'objective': [m.objective_value for m in models],
        'kkt_residual': [m.kkt_residual for m in models],
        'converged': [bool(m.converged) for m in models],
    })


def cmd_fit(args) -> int:
    """Penalized fit: sparse model file, lambda path summary and CV curve (unless --lambda is given)."""
    manifest = RunManifest(
        command='fit',
        config=_args_snapshot(args, ['dataset', 'add_intercept', 'lambda_', 'cv_rule', 'folds']),
        master_seed=args.seed,
    )
    out_dir = Path(args.out) if args.out else Path(settings.OUTPUT_DIR) / 'fit'
    with manifest.phase('read'):
        data, names = io.read_dataset(args.dataset, add_intercept=args.add_intercept)

    lasso = LassoOptions()
    cv = None
    with manifest.phase('fit'):
        if args.lambda_ is not None:
            model = fit_logistic_lasso(data, args.lambda_, opts=lasso)
        else:
            stream = RngStream(args.seed, 0).child(CV_CHILD)
            cv = cross_validate_lambda(data, args.folds, CV_SETTINGS['grid_size'], stream, opts=lasso)
            path = fit_lasso_path(data, cv.lambda_grid, opts=lasso)
            chosen = cv.selected(args.cv_rule)
            model = path[int(np.flatnonzero(cv.lambda_grid == chosen)[0])]

    with manifest.phase('write'):
        io.write_model(out_dir / 'model.csv', model.beta_hat, names)
        if cv is not None:
            io.write_csv(out_dir / 'path.csv', _path_summary(path))
            io.write_csv(out_dir / 'cv.csv', pd.DataFrame({
                'lambda': cv.lambda_grid,
                'cv_deviance': cv.cv_deviance,
                'cv_se': cv.cv_se,
            }))
        report = {
            'n': data.n,
            'p': data.p,
            'lambda': model.lambda_,
            'selection': 'fixed' if cv is None else args.cv_rule,
            'lambda_min': None if cv is None else cv.lambda_min,
            'lambda_1se': None if cv is None else cv.lambda_1se,
            'n_nonzero': int(np.count_nonzero(model.beta_hat)),
            'objective': model.objective_value,
            'iterations': model.iterations,
            'converged': model.converged,
            'kkt_residual': model.kkt_residual,
            'diagnostics': FitDiagnostics(data).check_kkt(model),
            'manifest': manifest.reproducible_fields(),
        }
        io.write_json(out_dir / 'fit.json', report)
        manifest.write(out_dir)

    logger.info(f"Fit written to {out_dir} (lambda={model.lambda_:.4e}, converged={model.converged})")
    return 0


def cmd_infer(args) -> int:
    """Inference for every loading row against one shared penalized fit."""
    method = Method.from_cli(args.method)
    manifest = RunManifest(
        command='infer',
        config=_args_snapshot(
            args, ['dataset', 'loading', 'method', 'alpha', 'threshold', 'lambda_', 'cv_rule', 'folds', 'add_intercept'],
        ),
        master_seed=args.seed,
    )
    with manifest.phase('read'):
        data, names = io.read_dataset(args.dataset, add_intercept=args.add_intercept)
        loadings = io.read_loadings(args.loading, names)

    opts = InferenceOptions(lambda_=args.lambda_, cv_rule=args.cv_rule, n_folds=args.folds)
    with manifest.phase('fit'):
        fit = prepare_fit(data, opts, RngStream(args.seed, 0).child(CV_CHILD))

    with manifest.phase('infer'):
        if method is Method.LIVE:
            results: List[InferenceResult] = infer_batch(
                data, loadings, args.alpha, args.threshold, opts, fit=fit, jobs=args.jobs,
            )
        else:
            runner = build_method(method, args.alpha, args.threshold, opts)
            results = [runner.run(fit, x_star) for x_star in loadings]

    for k, res in enumerate(results):
        for warning in res.warnings:
            logger.warning(f"loading {k}: {warning}")

    payload = {
        'results': [res.to_dict() for res in results],
        'manifest': manifest.reproducible_fields(),
    }
    out_dir = Path(args.out) if args.out else None
    _emit(payload, out_dir, 'inference.json')
    if out_dir is not None:
        manifest.write(out_dir)
    return 0


def summary_frame(summary: SummaryMetrics, setting: str) -> pd.DataFrame:
    """One row per method with the table columns followed by bookkeeping columns."""
    rows = []
    for row in summary.rows:
        record = {'setting': setting, 'method': row.method}
        record.update(row.table_row())
        record.update({
            'truth': summary.truth,
            'x_norm': summary.x_norm,
            'n_reps': row.n_reps,
            'n_failed': row.n_failed,
            'n_without_ci': row.n_without_ci,
            'n_without_test': row.n_without_test,
        })
        rows.append(record)
    columns = ['setting', 'method'] + TABLE_COLUMNS + [
        'truth', 'x_norm', 'n_reps', 'n_failed', 'n_without_ci', 'n_without_test',
    ]
    return pd.DataFrame(rows, columns=columns)


def replication_frame(results: List[ReplicationResult]) -> pd.DataFrame:
    rows = []
    for res in results:
        for name, out in res.outcomes.items():
            rows.append({
                'rep_index': res.rep_index,
                'method': name,
                'truth': res.truth,
                'linear_estimate': out.linear_estimate,
                'probability': out.probability,
                'ci_lower': out.ci_lower,
                'ci_upper': out.ci_upper,
                'reject': None if out.reject is None else int(out.reject),
                'runtime_seconds': out.runtime_seconds,
                'error': out.error or '',
            })
    return pd.DataFrame(rows)


def build_simulation_config(args) -> SimulationConfig:
    """Config from --preset or a JSON file, with command-line overrides applied on top."""
    if args.preset:
        payload = preset_config(args.preset, p=args.p)
    elif args.config:
        payload = io.read_json(args.config)
        if args.p is not None:
            payload['p'] = args.p
    else:
        raise ConfigError({'config': 'a config file or --preset is required'})

    overrides = {
        'master_seed': args.seed,
        'n_reps': args.reps,
        'alpha': args.alpha,
        'threshold_c': args.threshold,
        'lambda': args.lambda_,
    }
    if args.reps is None and settings.DEFAULT_REPS is not None and 'n_reps' not in payload:
        overrides['n_reps'] = settings.DEFAULT_REPS
    if args.method:
        overrides['methods'] = args.method
    payload.update({k: v for k, v in overrides.items() if v is not None})
    return load_config(payload)


def cmd_simulate(args) -> int:
    """Monte-Carlo experiment: summary CSV, per-replication CSV, config and manifest."""
    config = build_simulation_config(args)
    setting = config.name or 'simulation'
    out_dir = Path(args.out) if args.out else Path(settings.OUTPUT_DIR) / setting
    manifest = RunManifest(command='simulate', config=config.snapshot(), master_seed=config.master_seed)

    io.write_json(out_dir / 'config.json', config.snapshot())
    with manifest.phase('replications'):
        results, summary = run_simulation(config, jobs=args.jobs, out_dir=out_dir)
    with manifest.phase('write'):
        io.write_csv(out_dir / 'summary.csv', summary_frame(summary, setting))
        io.write_csv(out_dir / 'replications.csv', replication_frame(results))
        manifest.write(out_dir)

    for row in summary.rows:
        logger.info(
            f"{setting} {row.method}: Cov={row.cov:.3f} ERR={row.err:.3f} Len={row.len:.3f} "
            f"RMSE={row.rmse:.4f} Bias={row.bias:.4f} SE={row.se:.4f} t={row.t:.2f}s"
        )
    return 0
