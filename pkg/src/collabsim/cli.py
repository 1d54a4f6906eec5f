"""Command-line entry point.

    collabsim sweep-bandwidth --config exp.json --budgets 0.01 0.05 0.2 1.0 --out bw.csv
    collabsim sweep-rounds    --config exp.json --variant 1:1.0 --variant 2:0.2,0.8 --out rounds.csv
    collabsim sweep-noise     --config exp.json --sigmas 0 1 2 4 --out noise.csv
    collabsim gen-scenarios   --family occlusion --count 5 --seed 0 --outdir scenes/
    collabsim run-one         --config exp.json --seed 3 --log run.jsonl

Values in ``--config`` are the baseline; any flag given on the command line
replaces the matching field.  Exit codes: 0 ok, 2 config error, 3 I/O error, 1 for a protocol failure
such as a budget violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from . import sweeps
from .config import ExperimentConfig
from .errors import CollabSimError, ConfigError
from .protocol import run_experiment

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("collabsim")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment JSON; flags override its fields")
    p.add_argument("--family", help="scenario generator family")
    p.add_argument("--scenario", nargs="+", dest="paths", help="scenario JSON files instead of a family")
    p.add_argument("--seeds", type=int, dest="num_seeds", help="number of generated scenarios")
    p.add_argument("--base-seed", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--budget-fraction", type=float)
    p.add_argument("--total-budget", type=int, help="feature-payload bytes over all rounds")
    p.add_argument("--allocation", type=_floats, help="comma-separated per-round shares")
    p.add_argument("--noise-sigma", type=float, help="pose error std in meters")
    p.add_argument("--threshold", type=float, dest="detect_threshold")
    p.add_argument("--gaussian", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--spe", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("-v", "--verbose", action="store_true")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _variant(text: str) -> tuple[int, tuple[float, ...] | None]:
    k, _, alloc = text.partition(":")
    try:
        return int(k), (_floats(alloc) if alloc else None)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad variant {text!r}: expected K or K:a,b,...") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collabsim", description="Bandwidth-limited collaborative perception sweeps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep-bandwidth", help="AP against payload budget")
    _common(p)
    p.add_argument("--budgets", type=float, nargs="+", default=[0.01, 0.05, 0.2, 1.0], help="fractions of dense total")

    p = sub.add_parser("sweep-rounds", help="AP against round count and allocation at a fixed budget")
    _common(p)
    p.add_argument("--variant", type=_variant, action="append", help="K or K:a1,a2,...; repeatable")

    p = sub.add_parser("sweep-noise", help="AP against pose noise")
    _common(p)
    p.add_argument("--sigmas", type=float, nargs="+", default=[0.0, 1.0, 2.0, 4.0], help="meters")

    p = sub.add_parser("gen-scenarios", help="write seeded scenario files")
    p.add_argument("--family", default="random")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.add_argument("--params", default="{}", help="JSON object of generator keyword arguments")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("run-one", help="single experiment with a full JSON-lines log")
    _common(p)
    p.add_argument("--seed", type=int, help="generator seed (defaults to --base-seed)")
    p.add_argument("--log", help="JSON-lines log path")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    proto = {
        k: getattr(args, k)
        for k in ("rounds", "total_budget", "budget_fraction", "allocation", "noise_sigma")
        if getattr(args, k) is not None
    }
    if "rounds" in proto and "allocation" not in proto and len(cfg.protocol.allocation) != proto["rounds"]:
        proto["allocation"] = None
    if "total_budget" in proto and "budget_fraction" not in proto:
        proto["budget_fraction"] = None
    src = {k: getattr(args, k) for k in ("family", "num_seeds", "base_seed") if getattr(args, k) is not None}
    if args.paths:
        src["paths"] = tuple(args.paths)
    top = {}
    if args.detect_threshold is not None:
        top["detect_threshold"] = args.detect_threshold
    if args.gaussian is not None:
        top["packing"] = replace(cfg.packing, gaussian_enabled=args.gaussian)
    if args.spe is not None:
        top["fusion"] = replace(cfg.fusion, spe_enabled=args.spe)
    return replace(
        cfg,
        protocol=replace(cfg.protocol, **proto),
        scenarios=replace(cfg.scenarios, **src),
        **top,
    )


def _run(args) -> int:
    if args.command == "gen-scenarios":
        try:
            params = json.loads(args.params)
        except json.JSONDecodeError as e:
            raise ConfigError(f"--params is not valid JSON: {e}") from e
        paths = sweeps.gen_scenarios(args.family, args.count, args.seed, args.outdir, params)
        for p in paths:
            print(p)
        return EXIT_OK

    cfg = resolve_config(args)
    out = args.out if args.out != "-" else cfg.output.get("csv", "-")
    if args.command == "sweep-bandwidth":
        sweeps.write_csv(sweeps.sweep_bandwidth(cfg, args.budgets), sweeps.BANDWIDTH_COLUMNS, out)
    elif args.command == "sweep-rounds":
        variants = args.variant or [(1, None), (2, None), (3, None)]
        sweeps.write_csv(sweeps.sweep_rounds(cfg, variants), sweeps.ROUNDS_COLUMNS, out)
    elif args.command == "sweep-noise":
        sweeps.write_csv(sweeps.sweep_noise(cfg, args.sigmas), sweeps.NOISE_COLUMNS, out)
    elif args.command == "run-one":
        src = cfg.scenarios
        if args.seed is not None:
            src = replace(src, base_seed=args.seed)
        case = sweeps.load_cases(replace(src, num_seeds=1, paths=src.paths[:1]), cfg)[0]
        point = run_experiment(case.scenario, cfg, list(case.features))
        log_path = args.log or cfg.output.get("log")
        if log_path:
            point.write_log(log_path)
        print(json.dumps(point.log_records()[-1], sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except OSError as e:
        print(f"collabsim: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, json.JSONDecodeError) as e:
        print(f"collabsim: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CollabSimError as e:
        print(f"collabsim: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
