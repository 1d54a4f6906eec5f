"""Sweeps that emit CSV rows for trade-off curves.

Column schemas (fixed, in order):

``bandwidth``  seed, K, budget_fraction, budget_bytes, volume_log2, request_bytes, ap50, ap70, ap50_round0
``rounds``     seed, K, allocation, budget_bytes, payload_bytes, volume_log2, request_bytes, ap50, ap70, ap50_round0
``noise``      sigma, seed, method, budget_bytes, volume_log2, ap50, ap70

Rows are sorted before writing and floats are printed with ``repr``, so a
rerun with the same inputs produces the same bytes.
"""

from __future__ import annotations

import csv
import io
import sys
from dataclasses import dataclass
from pathlib import Path

from .config import ExperimentConfig, ScenarioSource
from .errors import ConfigError
from .gridcore import FeatureMap
from .protocol import TradeoffPoint, no_collaboration, run_experiment
from .scenarios import FAMILIES, make_scenario
from .world import Scenario, encode

BANDWIDTH_COLUMNS = (
    "seed", "K", "budget_fraction", "budget_bytes", "volume_log2", "request_bytes", "ap50", "ap70", "ap50_round0",
)
ROUNDS_COLUMNS = (
    "seed", "K", "allocation", "budget_bytes", "payload_bytes", "volume_log2", "request_bytes", "ap50", "ap70",
    "ap50_round0",
)
NOISE_COLUMNS = ("sigma", "seed", "method", "budget_bytes", "volume_log2", "ap50", "ap70")


@dataclass(frozen=True)
class Case:
    seed: int
    scenario: Scenario
    features: tuple[FeatureMap, ...]


def load_cases(source: ScenarioSource, config: ExperimentConfig) -> list[Case]:
    """Scenarios from files or a generator family, with encoder output computed once."""
    if source.paths:
        scenarios = [Scenario.load(p) for p in source.paths]
        seeds = [s.rng_seed for s in scenarios]
    else:
        if source.family not in FAMILIES:
            raise ConfigError(f"unknown scenario family {source.family!r}")
        seeds = source.seeds()
        scenarios = [make_scenario(source.family, s, **source.params) for s in seeds]
    return [
        Case(seed, sc, tuple(encode(sc, i, config.encoder) for i in range(sc.num_agents)))
        for seed, sc in zip(seeds, scenarios)
    ]


def _point_cells(p: TradeoffPoint) -> dict:
    return {
        "budget_bytes": p.budget_bytes,
        "payload_bytes": p.payload_bytes,
        "volume_log2": p.volume_log2,
        "request_bytes": p.request_bytes,
        "ap50": p.ap50,
        "ap70": p.ap70,
        "ap50_round0": p.round_ap50[0],
    }


def sweep_bandwidth(config: ExperimentConfig, budgets, cases: list[Case] | None = None) -> list[dict]:
    """One row per (budget fraction, seed) at the configured round count."""
    budgets = [float(b) for b in budgets]
    if budgets != sorted(budgets):
        raise ConfigError(f"budgets must be sorted ascending, got {budgets}")
    cases = load_cases(config.scenarios, config) if cases is None else cases
    rows = []
    for frac in budgets:
        cfg = config.with_protocol(budget_fraction=frac)
        for case in cases:
            p = run_experiment(case.scenario, cfg, list(case.features))
            rows.append({"seed": case.seed, "K": cfg.protocol.rounds, "budget_fraction": frac, **_point_cells(p)})
    rows.sort(key=lambda r: (r["budget_fraction"], r["seed"]))
    return rows


def sweep_rounds(config: ExperimentConfig, variants, cases: list[Case] | None = None) -> list[dict]:
    """``variants`` is a list of (K, allocation or None); the total budget stays as configured."""
    cases = load_cases(config.scenarios, config) if cases is None else cases
    rows = []
    for k, alloc in variants:
        cfg = config.with_protocol(rounds=int(k), allocation=None if alloc is None else tuple(alloc))
        label = ";".join(repr(float(a)) for a in cfg.protocol.allocation)
        for case in cases:
            p = run_experiment(case.scenario, cfg, list(case.features))
            rows.append({"seed": case.seed, "K": int(k), "allocation": label, **_point_cells(p)})
    rows.sort(key=lambda r: (r["K"], r["allocation"], r["seed"]))
    return rows


def sweep_noise(config: ExperimentConfig, sigmas, cases: list[Case] | None = None) -> list[dict]:
    """Collaborative and single-agent rows per (sigma in meters, seed)."""
    cases = load_cases(config.scenarios, config) if cases is None else cases
    rows = []
    for sigma in (float(s) for s in sigmas):
        cfg = config.with_protocol(noise_sigma=sigma)
        for case in cases:
            for method, fn in (("collab", run_experiment), ("no-collab", no_collaboration)):
                p = fn(case.scenario, cfg, list(case.features))
                rows.append(
                    {
                        "sigma": sigma, "seed": case.seed, "method": method, "budget_bytes": p.budget_bytes,
                        "volume_log2": p.volume_log2, "ap50": p.ap50, "ap70": p.ap70,
                    }
                )
    rows.sort(key=lambda r: (r["sigma"], r["seed"], r["method"]))
    return rows


def gen_scenarios(family: str, count: int, seed: int, outdir, params: dict | None = None) -> list[Path]:
    """Write ``count`` scenario files named ``<family>-<seed>.json``."""
    if count < 0:
        raise ConfigError(f"count must be >= 0, got {count}")
    if family not in FAMILIES:
        raise ConfigError(f"unknown scenario family {family!r}; expected one of {FAMILIES}")
    out = Path(outdir)
    paths = []
    for s in range(seed, seed + count):
        if not paths:
            out.mkdir(parents=True, exist_ok=True)
        path = out / f"{family}-{s:05d}.json"
        make_scenario(family, s, **(params or {})).save(path)
        paths.append(path)
    return paths


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_csv(rows: list[dict], columns, path=None) -> None:
    text = to_csv(rows, columns)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
