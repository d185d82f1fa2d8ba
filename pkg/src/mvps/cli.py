"""Command-line front end.

Exit codes: 0 success, 1 failed verification, 2 bad arguments,
3 invalid model.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .experiments import SUITES, reports_to_csv, run_suite, singular_structure_experiment
from .kernels import NOT_EXCHANGEABLE, classify
from .measure import ModelError, load_model
from .oracle import DEFAULT_BUDGET, DEFAULT_DEPTH, BudgetExceeded, exchangeability_depth_check
from .rng import DEFAULT_SEED, RngStream, entropy_seed
from .samplers import InvalidS, path_to_csv, sample_path, stick_breaking

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_MODEL = 0, 1, 2, 3


def _seed(text: str) -> int:
    if text == "random":
        return entropy_seed()
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvps", description="Measure-valued Polya urn sequences on finite color spaces."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seeded=True):
        if seeded:
            p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
        p.add_argument("--out", type=Path, help="directory for report files")

    p = sub.add_parser("classify", help="print the exchangeability verdict as JSON")
    p.add_argument("model", type=Path)
    add_common(p, seeded=False)

    p = sub.add_parser("simulate", help="sample one predictive path as CSV")
    p.add_argument("model", type=Path)
    p.add_argument("--n", type=_positive_int, default=100)
    add_common(p)

    p = sub.add_parser("prior", help="stick-breaking draws of the directing measure (JSON lines)")
    p.add_argument("model", type=Path)
    p.add_argument("--draws", type=_positive_int, default=1)
    p.add_argument("--eps", type=_positive_float, default=1e-8)
    add_common(p)

    p = sub.add_parser("oracle", help="exact permutation-invariance check by enumeration")
    p.add_argument("model", type=Path)
    p.add_argument("--depth", type=_positive_int, default=DEFAULT_DEPTH)
    p.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET)
    add_common(p, seeded=False)

    p = sub.add_parser("verify", help="run the experiment suite; exit 1 if any check fails")
    p.add_argument("model", type=Path)
    p.add_argument("--suite", choices=sorted(SUITES), default="full")
    p.add_argument("--csv", action="store_true", help="print the flat CSV instead of JSON")
    add_common(p)

    p = sub.add_parser("demo-singular", help="hybrid [0, 1] example report")
    p.add_argument("--theta", type=_positive_float, default=1.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--length", type=_positive_int, default=5000)
    p.add_argument("--runs", type=_positive_int, default=1000)
    add_common(p)
    return parser


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MVPS_THREADS", "1")))
    except ValueError:
        return 1


def _report_name(args, ext="json") -> str:
    seed = getattr(args, "seed", None)
    return f"{args.command}-{seed}.{ext}" if seed is not None else f"{args.command}.{ext}"


def _dispatch(args) -> int:
    if args.command == "demo-singular":
        report = singular_structure_experiment(args.theta, args.s, args.length, args.runs, args.seed)
        text = report.to_json()
        print(text)
        _write(args.out, _report_name(args), text + "\n")
        return EXIT_OK if report.passed else EXIT_FAILED

    model = load_model(args.model)

    if args.command == "classify":
        text = json.dumps(classify(model).to_dict(), indent=2)
        print(text)
        _write(args.out, _report_name(args), text + "\n")
        return EXIT_OK

    if args.command == "simulate":
        text = path_to_csv(sample_path(model, args.n, RngStream(args.seed)), model)
        sys.stdout.write(text)
        _write(args.out, _report_name(args, "csv"), text)
        return EXIT_OK

    if args.command == "prior":
        verdict = classify(model)
        if verdict.kind == NOT_EXCHANGEABLE:
            raise ModelError("model is not exchangeable; it has no stick-breaking representation")
        normalized = verdict.normalized_model
        rng = RngStream(args.seed)
        lines = [
            json.dumps(stick_breaking(float(normalized.theta), model, args.eps, rng).to_dict(model))
            for _ in range(args.draws)
        ]
        text = "\n".join(lines) + "\n"
        sys.stdout.write(text)
        _write(args.out, _report_name(args, "jsonl"), text)
        return EXIT_OK

    if args.command == "oracle":
        report = exchangeability_depth_check(model, args.depth, budget=args.budget)
        text = json.dumps(report.to_dict(model), indent=2)
        print(text)
        _write(args.out, _report_name(args), text + "\n")
        return EXIT_OK

    if args.command == "verify":
        threads = _threads()
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                reports = run_suite(model, args.suite, args.seed, executor=pool)
        else:
            reports = run_suite(model, args.suite, args.seed)
        passed = all(r.passed for r in reports)
        payload = {
            "model": str(args.model),
            "suite": args.suite,
            "seed": args.seed,
            "passed": passed,
            "reports": [r.to_dict() for r in reports],
        }
        text = json.dumps(payload, indent=2)
        print(reports_to_csv(reports) if args.csv else text, end="" if args.csv else "\n")
        _write(args.out, _report_name(args), text + "\n")
        _write(args.out, _report_name(args, "csv"), reports_to_csv(reports))
        for r in reports:
            for s in r.statistics:
                if not s.passed:
                    print(f"FAIL {r.name}.{s.name}: {s.observed} vs {s.target} ± {s.tolerance}",
                          file=sys.stderr)
        return EXIT_OK if passed else EXIT_FAILED

    raise AssertionError(args.command)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except ModelError as exc:
        print(f"mvps: invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (OSError, BudgetExceeded, InvalidS, ValueError) as exc:
        print(f"mvps: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
