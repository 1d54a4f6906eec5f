import argparse
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

import numpy as np

from collabsim.config import ExperimentConfig

ROOT = Path(__file__).resolve().parent.parent


def parse(default_config: str, default_out: str) -> argparse.Namespace:
    p = argparse.ArgumentParser()
    p.add_argument("--config", default=str(ROOT / "configs" / default_config))
    p.add_argument("--out", default=str(ROOT / "results" / default_out))
    p.add_argument("--seeds", type=int, help="override the number of scenarios")
    return p.parse_args()


def load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seeds is not None:
        cfg = replace(cfg, scenarios=replace(cfg.scenarios, num_seeds=args.seeds))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    return cfg


def group_means(rows, key, value="ap50"):
    groups = defaultdict(list)
    for r in rows:
        groups[key(r)].append(r[value])
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}
