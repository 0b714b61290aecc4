"""
Command-line interface for guidec.

Usage:
    python -m guidec decode --scenario FILE [--seed N] [--out trace.json]
    python -m guidec sweep --scenario FILE --param NAME --values v1,v2,... --out FILE.csv
    python -m guidec verify --suite NAME [--trials N --vocab-max K --tol X] --out report.json
    python -m guidec train --corpus FILE --order K --alpha A --out model.json

Exit codes: 0 ok, 1 verification failure, 2 input error.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from typing import List, Optional, Sequence

from . import __version__
from .config import LogLevel, config, logger
from .errors import GuidecError
from .harness import SUITES, EpisodeRunner, VerifyConfig, load_scenario, verify, write_csv
from .harness.verify import write_report
from .models import load_corpus, save_model, train_tabular

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2


def _parse_values(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--values must be comma-separated numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='guidec',
        description='Guided decoding policies, exact values and oracle verification.',
    )
    parser.add_argument('--version', action='version', version=f'guidec {__version__}')
    parser.add_argument('--log-level', choices=[level.name for level in LogLevel],
                        help='Override GUIDEC_LOG_LEVEL')
    sub = parser.add_subparsers(dest='command', required=True)

    decode = sub.add_parser('decode', help='Decode one episode and write its trace')
    decode.add_argument('--scenario', required=True)
    decode.add_argument('--seed', type=int, help='Episode seed (default: scenario seed)')
    decode.add_argument('--out', default='-', help="Trace JSON path, '-' for stdout")

    sweep = sub.add_parser('sweep', help='Sweep one policy hyperparameter')
    sweep.add_argument('--scenario', required=True)
    sweep.add_argument('--param', required=True)
    sweep.add_argument('--values', required=True, type=_parse_values)
    sweep.add_argument('--samples', type=int, help='Override the scenario sample count')
    sweep.add_argument('--common-seeds', action='store_true',
                       help='Reuse the base seed at every point instead of base_seed XOR index')
    sweep.add_argument('--out', default='-', help="CSV path, '-' for stdout")

    check = sub.add_parser('verify', help='Run a verification suite')
    check.add_argument('--suite', required=True, choices=SUITES)
    check.add_argument('--trials', type=int)
    check.add_argument('--vocab-max', type=int)
    check.add_argument('--tol', type=float)
    check.add_argument('--out', default='-', help="Report JSON path, '-' for stdout")

    train = sub.add_parser('train', help='Train a tabular model from a corpus file')
    train.add_argument('--corpus', required=True)
    train.add_argument('--order', type=int, default=1)
    train.add_argument('--alpha', type=float, default=1.0)
    train.add_argument('--out', required=True)
    return parser


def _emit(text: str, out: str) -> None:
    if out == '-':
        sys.stdout.write(text)
    else:
        with open(out, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)


def cmd_decode(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    seed = scenario.seed if args.seed is None else args.seed
    trace = EpisodeRunner(scenario).run_episode(seed)
    doc = trace.to_dict(scenario.vocab)
    doc['seed'] = seed
    _emit(json.dumps(doc, indent=2) + '\n', args.out)
    logger.info(f"Decoded {doc['tokens']} with reward {trace.terminal_reward}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.samples is not None:
        scenario = replace(scenario, samples=args.samples)
    runner = EpisodeRunner(scenario)
    rows = runner.sweep(args.param, args.values, args.common_seeds,
                        progress=args.out != '-')
    if args.out == '-':
        write_csv(rows, sys.stdout)
    else:
        write_csv(rows, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    overrides = {}
    if args.trials is not None:
        overrides['trials'] = args.trials
    if args.vocab_max is not None:
        overrides['vocab_max'] = args.vocab_max
    if args.tol is not None:
        overrides['tol'] = args.tol
    report = verify(args.suite, replace(VerifyConfig(), **overrides))
    if args.out == '-':
        sys.stdout.write(json.dumps(report.to_dict(), indent=2) + '\n')
    else:
        write_report(report, args.out)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_train(args: argparse.Namespace) -> int:
    vocab, corpus = load_corpus(args.corpus)
    lm = train_tabular(corpus, vocab, args.order, args.alpha)
    save_model(lm, args.out)
    return EXIT_OK


COMMANDS = {
    'decode': cmd_decode,
    'sweep': cmd_sweep,
    'verify': cmd_verify,
    'train': cmd_train,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function for command-line interface."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT_ERROR
    if args.log_level:
        config.log_level = LogLevel[args.log_level]
        logging.getLogger('guidec').setLevel(config.log_level.value)
    try:
        return COMMANDS[args.command](args)
    except (GuidecError, OSError, json.JSONDecodeError) as exc:
        print(f"guidec: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
