"""Command line entry point: run, evaluate, gen, validate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .benchmarks import KINDS, generate_benchmark
from .circuit import dump_document
from .decomposition import Scheme
from .errors import InputError, WirecutError
from .harness import PRESETS, Experiment, RunConfig, evaluate_variance, validate_document, write_report
from .optimizer import METHODS, OptimizerConfig

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2

logger = logging.getLogger("wirecut")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors are input errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--circuit", required=True, help="circuit JSON document (with cuts)")
    p.add_argument("--preset", choices=PRESETS, default="A")
    p.add_argument("--shots", type=int, default=None, help="total shot budget (default 1000 per configuration)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="report path (stdout when omitted)")
    p.add_argument("--prior-ratio", type=float, default=None, help="custom preset only")
    p.add_argument("--segments", type=int, default=None, help="custom preset only")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=None, help="custom preset only")
    p.add_argument("--strategy", choices=("even", "posterior"), default=None, help="custom preset only")
    p.add_argument("--optimize", action="store_true", help="custom preset only: optimize cut parameters")
    p.add_argument("--opt-iters", type=int, default=100)
    p.add_argument("--opt-method", choices=METHODS, default="adam_like")
    p.add_argument("--step-size", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="use exact configuration distributions instead of sampling")
    p.add_argument("--counts", action="store_true", help="include raw shot records in the report")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte-identical reports)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wirecut", description="Wire cutting with variance-aware shot allocation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the cutting workflow once and emit a report")
    _run_options(run)

    ev = sub.add_parser("evaluate", help="measure empirical variance over repeated runs")
    _run_options(ev)
    ev.add_argument("--reps", type=int, default=20)
    ev.add_argument("--compare", choices=PRESETS, default=None)

    gen = sub.add_parser("gen", help="write a benchmark circuit with suggested cuts")
    gen.add_argument("--kind", choices=KINDS, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--cuts", type=int, default=None, help="number of cuts (bv only)")
    gen.add_argument("--superpose", action="store_true", help="start the adder inputs in superposition (adder only)")
    gen.add_argument("--out", default=None)

    val = sub.add_parser("validate", help="check the partition and coefficient tables")
    val.add_argument("--circuit", required=True)
    val.add_argument("--scheme", choices=[s.value for s in Scheme], default="PARAM_L4")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    optimizer = OptimizerConfig(
        method=args.opt_method, iterations=args.opt_iters, step_size=args.step_size, seed=args.seed
    )
    overrides = dict(
        prior_ratio=args.prior_ratio,
        segments=args.segments,
        scheme=args.scheme,
        strategy=args.strategy,
        optimize=True if args.optimize else None,
    )
    if args.preset != "custom":
        ignored = [k for k, v in overrides.items() if v is not None]
        if ignored:
            logger.warning("preset %s fixes its settings; ignoring %s", args.preset, ", ".join(ignored))
        overrides = {}
    return RunConfig.from_preset(
        args.preset,
        circuit_path=args.circuit,
        total_shots=args.shots,
        seed=args.seed,
        out=args.out,
        exact=args.exact,
        workers=args.workers,
        include_counts=args.counts,
        optimizer=optimizer,
        **overrides,
    )


def _emit(doc: dict, path: str | None) -> None:
    text = write_report(doc, path)
    if not path:
        print(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = _config(args)
            result = Experiment(cfg).run()
            _emit(result.report(timings=args.timings), cfg.out)
        elif args.command == "evaluate":
            cfg = _config(args)
            _emit(evaluate_variance(cfg, args.reps, args.compare), cfg.out)
        elif args.command == "gen":
            options = {} if args.cuts is None else {"cuts": args.cuts}
            if args.superpose:
                options["superpose"] = True
            circuit, cuts = generate_benchmark(args.kind, args.n, args.seed, **options)
            text = json.dumps(dump_document(circuit, cuts), indent=1)
            if args.out:
                Path(args.out).write_text(text + "\n", encoding="utf-8")
            else:
                print(text)
        elif args.command == "validate":
            doc = validate_document(RunConfig(circuit_path=args.circuit, scheme=args.scheme))
            print(json.dumps(doc, indent=2))
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (WirecutError, ValueError, ArithmeticError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
