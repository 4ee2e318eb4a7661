"""
Main entry point: ``live fit|infer|simulate``.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
"""
from pathlib import Path
from typing import List, Optional
import argparse
import sys
from config.logging_config import get_logger, set_level
from config.settings import settings
from config.solver_settings import CV_SETTINGS
from core.exceptions import ConfigError, LiveError

logger = get_logger('system')

METHOD_CHOICES = ['live', 'plugin', 'postsel']


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=int, default=settings.DEFAULT_SEED, help='master seed (64-bit unsigned)')
    parser.add_argument('--out', type=Path, default=None, help='output directory')
    parser.add_argument('--verbose', '-v', action='store_true', help='debug logging (same as LIVE_LOG=DEBUG)')


def _penalty(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--lambda', dest='lambda_', type=float, default=None,
                        help='fixed penalty level; skips cross-validation')
    parser.add_argument('--cv-rule', choices=['min', '1se'], default=CV_SETTINGS['rule'])
    parser.add_argument('--folds', type=int, default=CV_SETTINGS['n_folds'])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='live',
        description='Bias-corrected inference for case probabilities in high-dimensional logistic regression.',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    fit = sub.add_parser('fit', help='penalized logistic fit with cross-validated lambda')
    fit.add_argument('dataset', type=Path)
    fit.add_argument('--add-intercept', action='store_true')
    _penalty(fit)
    _common(fit)

    infer = sub.add_parser('infer', help='inference for the case probability of each loading')
    infer.add_argument('dataset', type=Path)
    infer.add_argument('loading', type=Path)
    infer.add_argument('--add-intercept', action='store_true')
    infer.add_argument('--method', choices=METHOD_CHOICES, default='live')
    infer.add_argument('--alpha', type=float, default=settings.DEFAULT_ALPHA)
    infer.add_argument('--threshold', type=float, default=settings.DEFAULT_THRESHOLD)
    infer.add_argument('--jobs', type=int, default=settings.DEFAULT_JOBS)
    _penalty(infer)
    _common(infer)

    simulate = sub.add_parser('simulate', help='Monte-Carlo experiment')
    simulate.add_argument('config', type=Path, nargs='?', default=None, help='JSON experiment config')
    simulate.add_argument('--preset', default=None, help='named experiment, e.g. table1-loading1-r25-n400')
    simulate.add_argument('--p', type=int, default=None, help='override the number of columns')
    simulate.add_argument('--reps', type=int, default=None)
    simulate.add_argument('--alpha', type=float, default=None)
    simulate.add_argument('--threshold', type=float, default=None)
    simulate.add_argument('--method', choices=METHOD_CHOICES, nargs='+', default=None)
    simulate.add_argument('--lambda', dest='lambda_', type=float, default=None)
    simulate.add_argument('--jobs', type=int, default=settings.DEFAULT_JOBS)
    simulate.add_argument('--out', type=Path, default=None, help='output directory')
    simulate.add_argument('--verbose', '-v', action='store_true')
    # --seed has no default here so a config file's master_seed is kept
    simulate.add_argument('--seed', type=int, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_level('DEBUG')
    from cli.commands import cmd_fit, cmd_infer, cmd_simulate
    commands = {'fit': cmd_fit, 'infer': cmd_infer, 'simulate': cmd_simulate}

    try:
        return commands[args.command](args)
    except ConfigError as e:
        for field_name, message in e.field_errors.items():
            logger.error(f"config field '{field_name}': {message}")
        return e.exit_code
    except LiveError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
