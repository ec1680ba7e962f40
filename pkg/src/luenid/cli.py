"""Command-line entry points.

    luenid identify         --config cfg.json --out dir [--seed N] [--no-figures]
    luenid excitation-check --config cfg.json --out dir [--no-figures]
    luenid mcshane-compare  --config cfg.json --out dir [--seed N] [--no-figures]

Exit codes: 0 success / check passed, 1 check failed, 2 configuration error,
3 observer/plant spectrum overlap, 4 unstable simulation, 5 search budget
exceeded.  Set LUENID_THREADS to cap sweep parallelism.
"""

from __future__ import annotations

import argparse
import sys

from .errors import BoxTooLarge, ConfigError, SpectrumOverlap, Unstable
from . import experiment

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SPECTRUM_OVERLAP = 3
EXIT_UNSTABLE = 4
EXIT_BUDGET = 5


def _add_common(parser, with_seed: bool):
    parser.add_argument("--config", required=True, help="path to the JSON config file")
    parser.add_argument("--out", required=True, help="output directory")
    if with_seed:
        parser.add_argument("--seed", type=int, default=None,
                            help="override the configured seed(s)")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering, emit CSVs only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="luenid",
        description="State and parameter estimation for SISO LTI systems "
                    "with a filter-bank observer and explicit left inverse.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("identify", help="run an identification sweep"),
                with_seed=True)
    _add_common(sub.add_parser("excitation-check",
                               help="tabulate differential-excitation diagnostics"),
                with_seed=False)
    _add_common(sub.add_parser("mcshane-compare",
                               help="cross-check the explicit inverse against "
                                    "the gridded McShane inverse (n = 1)"),
                with_seed=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    figures = False if args.no_figures else None
    try:
        if args.command == "identify":
            cfg = experiment.parse_identify_config(experiment.load_json(args.config))
            experiment.run_identify(cfg, args.out, seed_override=args.seed,
                                    figures=figures)
            return EXIT_OK
        if args.command == "excitation-check":
            cfg = experiment.parse_excitation_config(experiment.load_json(args.config))
            result = experiment.run_excitation_check(cfg, args.out, figures=figures)
            return EXIT_OK if result["ok"] else EXIT_CHECK_FAILED
        cfg = experiment.parse_mcshane_config(experiment.load_json(args.config))
        result = experiment.run_mcshane_compare(cfg, args.out,
                                                seed_override=args.seed,
                                                figures=figures)
        return EXIT_OK if result["ok"] else EXIT_CHECK_FAILED
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpectrumOverlap as exc:
        print(f"spectrum overlap: {exc}", file=sys.stderr)
        return EXIT_SPECTRUM_OVERLAP
    except Unstable as exc:
        print(f"unstable simulation: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except BoxTooLarge as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
