#!/usr/bin/env python3
"""
Command-line reproduction harness

Subcommands: estimate, sweep-a, sweep-beta, reconstruct, sparsity, bench, marginal.
Every subcommand writes CSV (stdout unless --out is given) and logs to
logs/cdrodeo/<subcommand>.log and stderr.

Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import config
from .errors import CDRodeoError, InvalidInput
from .experiments import (
    ExperimentSettings,
    bench,
    estimate_point,
    marginal_pipeline,
    reconstruct,
    resolve_settings,
    sparsity,
    sweep_a,
    sweep_beta,
)
from .experiments.runner import companion_path, write_csv
from .experiments.settings import PARSERS, UNSET

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_estimate(settings: ExperimentSettings):
    write_csv(estimate_point(settings), settings.out, 'estimate')


def cmd_sweep_a(settings: ExperimentSettings):
    result = sweep_a(settings)
    write_csv(result.table, settings.out, 'sweep-a')
    write_csv(result.summary, companion_path(settings.out, 'summary'), 'sweep-a-summary')


def cmd_sweep_beta(settings: ExperimentSettings):
    result = sweep_beta(settings)
    write_csv(result.table, settings.out, 'sweep-beta')
    write_csv(result.summary, companion_path(settings.out, 'summary'), 'sweep-beta-summary')


def cmd_reconstruct(settings: ExperimentSettings):
    write_csv(reconstruct(settings), settings.out, 'reconstruct')


def cmd_sparsity(settings: ExperimentSettings):
    write_csv(sparsity(settings), settings.out, 'sparsity')


def cmd_bench(settings: ExperimentSettings):
    report = bench(settings)
    write_csv(report.table, settings.out, 'bench')
    logger.info(f"[SUCCESS] Log-log slope of wall time against n: {report.slope:.3f}")


def cmd_marginal(settings: ExperimentSettings):
    report = marginal_pipeline(settings)
    write_csv(report.values, settings.out, 'marginal')
    write_csv(report.stages, companion_path(settings.out, 'stages'), 'marginal-stages')


COMMANDS: Dict[str, Callable[[ExperimentSettings], None]] = {
    'estimate': cmd_estimate,
    'sweep-a': cmd_sweep_a,
    'sweep-beta': cmd_sweep_beta,
    'reconstruct': cmd_reconstruct,
    'sparsity': cmd_sparsity,
    'bench': cmd_bench,
    'marginal': cmd_marginal,
}


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=UNSET)
    group = common.add_argument_group('model and procedure')
    group.add_argument('--model', type=PARSERS['model'], help=f"Simulation model a, b or c (default: {config.DEFAULT_MODEL})")
    group.add_argument('--d1', type=PARSERS['d1'], help=f"Number of conditioning variables (default: {config.DEFAULT_D1}; read from the header with --input)")
    group.add_argument('--n', type=PARSERS['n'], help=f"Sample size (default: {config.DEFAULT_N})")
    group.add_argument('--seed', type=PARSERS['seed'], help=f"Seed of every random stream (default: {config.DEFAULT_SEED})")
    group.add_argument('--a', type=PARSERS['a'], help="Threshold exponent, or 'auto' for log(d-1) (default: auto)")
    group.add_argument('--beta', type=PARSERS['beta'], help=f"Bandwidth grid ratio in (0, 1) (default: {config.DEFAULT_BETA})")
    group.add_argument('--h0', type=PARSERS['h0'], help="Initial bandwidth in (0, 1], or 'auto' (default: auto)")
    group.add_argument('--kernel', type=PARSERS['kernel'], help=f"gaussian or biweight (default: {config.DEFAULT_KERNEL})")
    group.add_argument('--variant', type=PARSERS['variant'], help=f"revdir, direct or reverse (default: {config.DEFAULT_VARIANT})")
    group.add_argument('--marginal', type=PARSERS['marginal'],
                       help=f"Marginal source: known, preestimator or chained (default: {config.DEFAULT_MARGINAL})")
    group.add_argument('--w', type=PARSERS['w'], help="Comma-separated estimation point; use --w=-1,0 for negative values")
    group.add_argument('--reverse-guard', type=PARSERS['reverse_guard'], help="Reverse Step guard over 'active' or 'all' components")
    group.add_argument('--reverse-cap', type=PARSERS['reverse_cap'], help="Reverse Step cap: 'beta' or 'inverse_log' (1/log n)")
    group.add_argument('--direct-floor', type=PARSERS['direct_floor'], help="Direct Step product floor: auto, log or log_a")
    group.add_argument('--threshold-scale', type=PARSERS['threshold_scale'], help="Multiplier applied to every threshold (default: 1)")
    group.add_argument('--max-iterations', type=PARSERS['max_iterations'], help="Safety cap on loop passes (default: auto)")
    group.add_argument('--preestimator-c', type=PARSERS['preestimator_c'],
                       help=f"Auxiliary sample size exponent for the pre-estimator (default: {config.DEFAULT_PREESTIMATOR_C})")
    group.add_argument('--aux-cap', type=PARSERS['aux_cap'], help=f"Largest auxiliary sample (default: {config.AUX_SAMPLE_CAP})")
    group.add_argument('--cache-dir', type=PARSERS['cache_dir'], help="Directory for resumable chained-marginal stage caches")

    group = common.add_argument_group('run')
    group.add_argument('--out', type=PARSERS['out'], help="Output CSV path (default: stdout)")
    group.add_argument('--threads', type=PARSERS['threads'], help="Worker threads (default: available parallelism)")
    group.add_argument('--config', type=str, default=None, help="key=value file of settings; flags override it")
    group.add_argument('--no-timing', action='store_true', default=UNSET, help="Leave timing columns empty for byte-identical output")
    group.add_argument('--log-level', type=PARSERS['log_level'], help=f"DEBUG, INFO, WARNING or ERROR (default: {config.LOG_LEVEL})")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per experiment"""
    common = _common_arguments()
    parser = _Parser(
        prog='run_experiments.py',
        description='Greedy bandwidth selection for kernel conditional density estimation: experiment harness',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_experiments.py estimate --model b --d1 3 --n 50000
  python run_experiments.py estimate --model a --d1 2 --w 0,0,0,0.4 --marginal preestimator
  python run_experiments.py estimate --input data.csv --d1 2 --w 0,0,0 --marginal chained
  python run_experiments.py sweep-a --model b --d1 3 --a-grid 0,0.5,1,1.5,2 --samples 2 --points 4 --out output/sweep_a.csv
  python run_experiments.py sweep-beta --beta-grid 0.5,0.8,0.9 --threads 1
  python run_experiments.py reconstruct --model b --d1 3 --direction y1 --grid-points 41 --n 20000
  python run_experiments.py sparsity --model b --d1-grid 1,2,3,4 --replicates 10 --n 50000
  python run_experiments.py bench --n-grid 10000,20000,40000,80000 --d1-grid 1,2,4 --threads 1
  python run_experiments.py marginal --model b --d1 2 --n 2000 --cache-dir output/stages
  python run_experiments.py estimate --config runs/model_b.env --seed 7
        """
    )
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    subparsers.add_parser('estimate', parents=[common], argument_default=UNSET, help='Estimate at one point')
    subparsers.add_parser('marginal', parents=[common], argument_default=UNSET, help='Run the chained marginal pipeline on its own')

    sweep = subparsers.add_parser('sweep-a', parents=[common], argument_default=UNSET, help='Absolute error over a grid of a')
    sweep.add_argument('--a-grid', type=PARSERS['a_grid'], help=f"Comma-separated a values (default: {config.DEFAULT_A_GRID})")
    sweep.add_argument('--samples', type=PARSERS['samples'], help=f"Samples B (default: {config.DEFAULT_SAMPLES_B})")
    sweep.add_argument('--points', type=PARSERS['points'], help=f"Random points M per sample (default: {config.DEFAULT_POINTS_M})")

    sweep = subparsers.add_parser('sweep-beta', parents=[common], argument_default=UNSET, help='Error and wall time over a grid of beta')
    sweep.add_argument('--beta-grid', type=PARSERS['beta_grid'], help=f"Comma-separated beta values (default: {config.DEFAULT_BETA_GRID})")
    sweep.add_argument('--samples', type=PARSERS['samples'], help=f"Samples B (default: {config.DEFAULT_SAMPLES_B})")

    recon = subparsers.add_parser('reconstruct', parents=[common], argument_default=UNSET, help='Estimates along one coordinate direction')
    recon.add_argument('--direction', type=PARSERS['direction'], help="Coordinate to vary: x1.., y1, y2 (default: y1)")
    recon.add_argument('--grid-min', type=PARSERS['grid_min'], help=f"Grid start (default: {config.DEFAULT_GRID_MIN})")
    recon.add_argument('--grid-max', type=PARSERS['grid_max'], help=f"Grid end (default: {config.DEFAULT_GRID_MAX})")
    recon.add_argument('--grid-points', type=PARSERS['grid_points'], help=f"Grid size (default: {config.DEFAULT_GRID_POINTS})")
    recon.add_argument('--compare-marginal', type=PARSERS['compare_marginal'],
                       help="Add an estimate_alt column computed with the preestimator or chained marginal")

    sparse = subparsers.add_parser('sparsity', parents=[common], argument_default=UNSET, help='Estimates and bandwidths over d1 and replicates')
    sparse.add_argument('--d1-grid', type=PARSERS['d1_grid'], help=f"Comma-separated d1 values (default: {config.DEFAULT_D1_GRID})")
    sparse.add_argument('--replicates', type=PARSERS['replicates'], help=f"Replicates R (default: {config.DEFAULT_REPLICATES_R})")

    timing = subparsers.add_parser('bench', parents=[common], argument_default=UNSET, help='Running time over n and over d')
    timing.add_argument('--n-grid', type=PARSERS['n_grid'], help=f"Comma-separated n values (default: {config.DEFAULT_N_GRID})")
    timing.add_argument('--d1-grid', type=PARSERS['d1_grid'], help=f"Comma-separated d1 values (default: {config.DEFAULT_D1_GRID})")
    timing.add_argument('--bench-repeats', type=PARSERS['bench_repeats'], help=f"Timed runs per configuration (default: {config.BENCH_REPEATS})")

    estimate_parser = subparsers.choices['estimate']
    estimate_parser.add_argument('--input', type=PARSERS['input'], help="CSV sample with header x1..,y1.. instead of a model draw")
    subparsers.choices['marginal'].add_argument('--input', type=PARSERS['input'], help="CSV sample instead of a model draw")
    return parser


def configure_logging(command: str, level: str):
    """File handler under config.LOG_DIR plus stderr, so CSV on stdout stays clean"""
    log_dir = Path(config.LOG_DIR)
    log_dir.mkdir(parents=True, exist_ok=True)
    log_filename = log_dir / f"{command}.log"

    logging.basicConfig(
        level=getattr(logging, level),
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_filename),
            logging.StreamHandler(sys.stderr)
        ],
        force=True
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main execution function"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    flag_level = config.LOG_LEVEL if args.log_level is UNSET else args.log_level
    configure_logging(args.command, flag_level)
    try:
        settings = resolve_settings(vars(args), args.config)
        if settings.log_level != flag_level:
            logging.getLogger().setLevel(getattr(logging, settings.log_level))
        logger.info(f"Starting {args.command}")
        COMMANDS[args.command](settings)
    except (InvalidInput, OSError) as e:
        logger.error(f"[ERROR] {args.command}: {e}")
        return EXIT_USAGE
    except CDRodeoError as e:
        logger.error(f"[ERROR] {args.command}: {e}")
        return EXIT_NUMERICAL
    logger.info(f"[SUCCESS] {args.command} completed")
    return EXIT_OK
