#!/usr/bin/env python3
"""
Universal RNG - Command-line launcher

Subcommands:
    fv              Fixed-to-variable generation (E1/E2) from a symbol stream
    fv-tu           Twice-universal fixed-to-variable generation
    vf              Variable-to-fixed generation (sequential greedy dictionary)
    analyze-fv      Exact expected output length of E1 and E2
    analyze-vf      Exact per-level failure probability and partial length
    asymptotics-fv  Monte Carlo second-order length experiment for FVRs
    asymptotics-vf  Monte Carlo length experiment for VFRs over several M
    uniformity      Exact or sampled uniformity test of a scheme
    enumerate       List every type class of a given length
    selftest        Run the desk-scale invariant suites

Usage:
    python launcher.py fv --model models/iid_p03.json --n 64 --target pow2 --in data.bin
    python launcher.py vf --model models/iid_p03.json --M 16 --max-len 200 --in data.bin
    python launcher.py analyze-vf --model models/iid_p03.json --M 3 --N 300 --out vf.csv
    python launcher.py selftest

Exit codes: 0 success, 1 test failure, 2 configuration, model or input error.
"""

import argparse
import logging
import shlex
import sys
from contextlib import closing
from dataclasses import dataclass, field
from logging.handlers import RotatingFileHandler
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from universal_rng import __version__
from universal_rng.config import SUPPORTED_PRNGS, get_settings, use_settings
from universal_rng.exceptions import ConfigurationError, InputExhaustedError, UniversalRNGError
from universal_rng.fvr import (TargetSet, digits, e1_generate, e2_generate,
                               expected_output_length_exact, make_fvr_scheme)
from universal_rng.io import load_model, read_symbols, write_report_csv
from universal_rng.markov_model import MarkovParams
from universal_rng.twice_universal import (estimate_order, parse_penalty, tu_generate_exact,
                                           tu_generate_practical)
from universal_rng.type_classes import all_types, class_size, type_probability
from universal_rng.vfr import VfrConfig, g2_generate

from experiments.asymptotics import (fit_failure_decay, run_fv_asymptotics,
                                     run_vf_asymptotics, vfr_analysis_table)
from experiments.selftest import SUITE_NAMES, run_selftest
from experiments.uniformity import run_uniformity_test

logger = logging.getLogger('launcher')

EXIT_OK = 0
EXIT_TEST_FAILURE = 1
EXIT_ERROR = 2

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
LOG_FILE_BYTES = 5 * 1024 * 1024
LOG_FILE_BACKUPS = 3


@dataclass
class ExperimentConfig:
    """Everything that identifies a run; recorded in report metadata."""
    task: str
    model_path: Optional[str]
    parameters: Dict[str, object] = field(default_factory=dict)
    seeds: Tuple[int, ...] = ()
    out: Optional[str] = None
    command: str = ''

    @classmethod
    def from_args(cls, args: argparse.Namespace, argv: Sequence[str]) -> 'ExperimentConfig':
        skip = {'command', 'model', 'out', 'log_level', 'log_file', 'handler', 'seed'}
        parameters = {k: v for k, v in sorted(vars(args).items())
                      if k not in skip and v is not None}
        seeds = (args.seed,) if getattr(args, 'seed', None) is not None else ()
        return cls(args.command, getattr(args, 'model', None), parameters, seeds,
                   args.out, ' '.join(shlex.quote(a) for a in argv))

    def metadata(self, params: Optional[MarkovParams] = None) -> Dict[str, object]:
        return {
            'tool': f"universal_rng {__version__}",
            'task': self.task,
            'model': self.model_path or '-',
            'model_hash': params.model_hash() if params is not None else '-',
            'seeds': ' '.join(str(s) for s in self.seeds) or '-',
            'prng': get_settings().prng,
            'command': self.command,
        }


def configure_logging(level: str, log_file: Optional[str]) -> None:
    """Console handler plus an optional rotating file handler."""
    formatter = logging.Formatter(LOG_FORMAT)
    root = logging.getLogger()
    root.setLevel(getattr(logging, level.upper(), logging.INFO))
    for handler in list(root.handlers):
        root.removeHandler(handler)
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(formatter)
    root.addHandler(console)
    if log_file:
        file_handler = RotatingFileHandler(log_file, maxBytes=LOG_FILE_BYTES,
                                           backupCount=LOG_FILE_BACKUPS)
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)
        logger.debug(f"Logging to {log_file}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(v, 0) for v in text.replace(',', ' ').split()]
    except ValueError as e:
        raise ConfigurationError(f"bad integer list {text!r}") from e


def _take_block(symbols, count: int) -> Tuple[int, ...]:
    block = []
    with closing(symbols):
        if count == 0:
            return ()
        for a in symbols:
            block.append(a)
            if len(block) == count:
                return tuple(block)
    raise InputExhaustedError(f"stream holds {len(block)} symbols, {count} needed")


def _emit(df: pd.DataFrame, config: ExperimentConfig,
          params: Optional[MarkovParams] = None) -> None:
    write_report_csv(df, config.out, config.metadata(params))


def cmd_fv(args, config: ExperimentConfig) -> int:
    params = load_model(args.model)
    spec = params.spec
    target = TargetSet.parse(args.target)
    extra = spec.k if args.sync_state else 0
    block = _take_block(read_symbols(args.input, spec.alpha), args.n + extra)
    if args.scheme == 'E1':
        out = e1_generate(block, spec, sync_state=args.sync_state)
    else:
        out = e2_generate(block, spec, target, sync_state=args.sync_state)
    line = f"{out.r} {out.M}"
    if args.scheme == 'E2' and target.kind == 'powers' and out.M > 1:
        line += ' ' + ''.join(str(d) for d in digits(out.r, out.M, target.base))
    print(line)
    return EXIT_OK


def cmd_fv_tu(args, config: ExperimentConfig) -> int:
    alpha = load_model(args.model).spec.alpha if args.model else args.alpha
    target = TargetSet.parse(args.target)
    phi = parse_penalty(args.phi, alpha)
    block = _take_block(read_symbols(args.input, alpha), args.n)
    if args.variant == 'exact':
        out = tu_generate_exact(block, target, alpha, phi, args.kmax, args.bound)
        k_hat = estimate_order(block, alpha, phi, args.kmax).k_hat
    else:
        out, k_hat = tu_generate_practical(block, target, alpha, phi, args.kmax)
    print(f"{out.r} {out.M} k={k_hat}")
    return EXIT_OK


def cmd_vf(args, config: ExperimentConfig) -> int:
    params = load_model(args.model)
    cfg = VfrConfig(params.spec, args.M, args.max_len)
    with closing(read_symbols(args.input, params.spec.alpha)) as symbols:
        result = g2_generate(symbols, cfg, sync_state=args.sync_state)
    print(result)
    return EXIT_OK


def cmd_analyze_fv(args, config: ExperimentConfig) -> int:
    params = load_model(args.model)
    target = TargetSet.parse(args.target)
    rows = [{'n': args.n, 'scheme': scheme, 'target': target.describe(),
             'expected_length': expected_output_length_exact(params, args.n, target, scheme)}
            for scheme in ('E1', 'E2')]
    _emit(pd.DataFrame(rows), config, params)
    return EXIT_OK


def cmd_analyze_vf(args, config: ExperimentConfig) -> int:
    params = load_model(args.model)
    table = vfr_analysis_table(params, args.M, args.N, exact=args.exact)
    if args.N >= 12:
        slope, r_squared = fit_failure_decay(table, n_min=min(10, args.N // 2))
        logger.info(f"log2 P(fail_n) slope {slope:.4f} per symbol, R^2 {r_squared:.4f}")
    _emit(table, config, params)
    return EXIT_OK


def cmd_asymptotics_fv(args, config: ExperimentConfig) -> int:
    params = load_model(args.model)
    target = TargetSet.parse(args.target) if args.target else None
    report = run_fv_asymptotics(params, _int_list(args.n_list), args.trials, args.seed,
                                target, args.workers)
    for key, value in report.summary.items():
        logger.info(f"{key}: {value:.4f}")
    _emit(report.frame, config, params)
    return EXIT_OK


def cmd_asymptotics_vf(args, config: ExperimentConfig) -> int:
    params = load_model(args.model)
    report = run_vf_asymptotics(params, _int_list(args.M_list), args.N, args.trials,
                                args.seed, args.workers)
    for key, value in report.summary.items():
        logger.info(f"{key}: {value:.4f}")
    _emit(report.frame, config, params)
    return EXIT_OK


def cmd_uniformity(args, config: ExperimentConfig) -> int:
    params = load_model(args.model)
    if args.scheme == 'G2':
        if args.M is None:
            raise ConfigurationError("the G2 scheme needs --M")
        scheme = VfrConfig(params.spec, args.M, args.N)
    else:
        if args.n is None:
            raise ConfigurationError(f"the {args.scheme} scheme needs --n")
        scheme = make_fvr_scheme(args.scheme, params.spec, TargetSet.parse(args.target))
    report = run_uniformity_test(scheme, params, n=args.n, mode=args.mode,
                                 trials=args.trials, seed=args.seed, bound=args.bound)
    _emit(report.to_frame(), config, params)
    return EXIT_OK if report.passed else EXIT_TEST_FAILURE


def cmd_enumerate(args, config: ExperimentConfig) -> int:
    params = load_model(args.model)
    spec = params.spec
    rows = []
    for t in all_types(spec, args.n):
        rows.append({
            'final': ''.join(str(a) for a in spec.state_symbols(t.final)),
            'counts': ' '.join(f"{s}:{a}={c}" for (s, a), c in t.counts),
            'size': class_size(t),
            'probability': type_probability(params, t),
        })
    _emit(pd.DataFrame(rows), config, params)
    return EXIT_OK


def cmd_selftest(args, config: ExperimentConfig) -> int:
    report = run_selftest(names=args.suite)
    _emit(report.to_frame(), config)
    return EXIT_OK if report.passed else EXIT_TEST_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Universal RNG - uniform random numbers from Markov sources",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python launcher.py fv --model models/iid_p03.json --n 64 --target pow2 --in data.bin
  python launcher.py analyze-vf --model models/iid_p03.json --M 3 --N 300
  python launcher.py selftest
        """
    )
    parser.add_argument('--out', help='CSV report path (default: standard output)')
    parser.add_argument('--log-level', help='Logging level (default: LOG_LEVEL or INFO)')
    parser.add_argument('--log-file', help='Rotating log file')
    parser.add_argument('--bound', type=int, help='Brute-force enumeration bound')
    parser.add_argument('--prng', choices=SUPPORTED_PRNGS, help='numpy bit generator')
    parser.add_argument('--workers', type=int, help='Monte Carlo worker processes')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('fv', help='Fixed-to-variable generation')
    p.add_argument('--model', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--target', default='int', help='int, pow2, pow:p or list:file')
    p.add_argument('--scheme', choices=('E1', 'E2'), default='E2')
    p.add_argument('--sync-state', action='store_true',
                   help='Use the first k symbols as the initial state')
    p.add_argument('--in', dest='input', default='-', help='Symbol stream (one byte each)')
    p.set_defaults(handler=cmd_fv)

    p = sub.add_parser('fv-tu', help='Twice-universal fixed-to-variable generation')
    p.add_argument('--model', help='Model file (only its alphabet is used)')
    p.add_argument('--alpha', type=int, default=2)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--target', default='int')
    p.add_argument('--variant', choices=('exact', 'practical'), default='practical')
    p.add_argument('--kmax', type=int)
    p.add_argument('--phi', default='mdl', help='mdl or c:<coefficient>')
    p.add_argument('--in', dest='input', default='-')
    p.set_defaults(handler=cmd_fv_tu)

    p = sub.add_parser('vf', help='Variable-to-fixed generation')
    p.add_argument('--model', required=True)
    p.add_argument('--M', type=int, required=True)
    p.add_argument('--max-len', type=int, help='Truncation depth N')
    p.add_argument('--sync-state', action='store_true')
    p.add_argument('--in', dest='input', default='-')
    p.set_defaults(handler=cmd_vf)

    p = sub.add_parser('analyze-fv', help='Exact expected FVR output length')
    p.add_argument('--model', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--target', default='int')
    p.set_defaults(handler=cmd_analyze_fv)

    for name in ('analyze-vf', 'vf-analyze'):
        p = sub.add_parser(name, help='Exact VFR failure probability and partial length')
        p.add_argument('--model', required=True)
        p.add_argument('--M', type=int, required=True)
        p.add_argument('--N', type=int, required=True)
        p.add_argument('--float', dest='exact', action='store_false',
                       help='Floating-point evaluation instead of rational arithmetic')
        p.set_defaults(handler=cmd_analyze_vf)

    p = sub.add_parser('asymptotics-fv', help='FVR length gap against log n')
    p.add_argument('--model', required=True)
    p.add_argument('--n-list', required=True, help='Ascending block lengths')
    p.add_argument('--target')
    p.add_argument('--trials', type=int, default=10_000)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(handler=cmd_asymptotics_fv)

    p = sub.add_parser('asymptotics-vf', help='VFR length against log M')
    p.add_argument('--model', required=True)
    p.add_argument('--M-list', required=True, help='Ascending output ranges')
    p.add_argument('--N', type=int, required=True)
    p.add_argument('--trials', type=int, default=10_000)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(handler=cmd_asymptotics_vf)

    p = sub.add_parser('uniformity', help='Uniformity test')
    p.add_argument('--model', required=True)
    p.add_argument('--scheme', choices=('E1', 'E2', 'G2'), default='E2')
    p.add_argument('--n', type=int)
    p.add_argument('--target', default='int')
    p.add_argument('--M', type=int)
    p.add_argument('--N', type=int)
    p.add_argument('--mode', choices=('exact', 'sampled'), default='exact')
    p.add_argument('--trials', type=int, default=10_000)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(handler=cmd_uniformity)

    p = sub.add_parser('enumerate', help='List the type classes of length n')
    p.add_argument('--model', required=True)
    p.add_argument('--n', type=int, required=True)
    p.set_defaults(handler=cmd_enumerate)

    p = sub.add_parser('selftest', help='Run the invariant suites')
    p.add_argument('--suite', action='append', choices=SUITE_NAMES,
                   help='Run only this suite (repeatable)')
    p.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    settings = get_settings().with_overrides(
        brute_force_bound=args.bound, prng=args.prng, workers=args.workers,
        log_level=args.log_level, log_file=args.log_file)
    use_settings(settings)
    configure_logging(settings.log_level, settings.log_file or None)
    config = ExperimentConfig.from_args(args, ['launcher.py'] + argv)
    try:
        return args.handler(args, config)
    except UniversalRNGError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
