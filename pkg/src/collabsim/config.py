"""Experiment configuration: one JSON document, one dataclass per section.

Example::

    {
      "scenarios": {"family": "random", "num_seeds": 20, "base_seed": 0},
      "protocol": {"rounds": 1, "budget_fraction": 0.05, "noise_sigma": 0.0},
      "packing": {"gaussian_enabled": false},
      "fusion": {"identity_mode": true, "heads": 4},
      "generator": {"mode": "channel0"},
      "encoder": {"noise_amplitude": 0.0},
      "detect_threshold": 0.3,
      "output": {"csv": "out.csv", "log": "run.jsonl"}
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

from .confidence import GeneratorConfig
from .errors import ConfigError
from .fusion import FusionConfig
from .packing import PackingConfig
from .world import EncoderConfig


def default_allocation(rounds: int) -> tuple[float, ...]:
    """Share of the total budget per round: a small activation round, a large follow-up, then tapering."""
    if rounds <= 0:
        return ()
    if rounds == 1:
        return (1.0,)
    if rounds == 2:
        return (0.2, 0.8)
    if rounds == 3:
        return (0.2, 0.6, 0.2)
    tail = [2.0 ** -(k + 1) for k in range(rounds - 2)]
    total = sum(tail)
    return (0.2, 0.6, *(0.2 * t / total for t in tail))


def exact_fraction(x: float) -> Fraction:
    """Decimal-exact rational for a configured fraction, so 0.2 means 1/5."""
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class ProtocolConfig:
    rounds: int = 1
    total_budget: int = 0  # feature-payload bytes over all rounds and links
    # if set, total_budget = floor(budget_fraction * dense total) per scenario
    budget_fraction: float | None = None
    allocation: tuple[float, ...] | None = None
    noise_sigma: float = 0.0  # meters, per-axis position error std
    yaw_noise_sigma: float = 0.0  # radians

    def __post_init__(self):
        if self.rounds < 0:
            raise ConfigError(f"rounds must be >= 0, got {self.rounds}")
        if self.total_budget < 0:
            raise ConfigError(f"total_budget must be >= 0, got {self.total_budget}")
        if self.budget_fraction is not None and not 0 <= self.budget_fraction <= 1:
            raise ConfigError(f"budget_fraction must lie in [0, 1], got {self.budget_fraction}")
        if self.noise_sigma < 0 or self.yaw_noise_sigma < 0:
            raise ConfigError("noise sigmas must be >= 0")
        alloc = default_allocation(self.rounds) if self.allocation is None else tuple(self.allocation)
        if len(alloc) != self.rounds:
            raise ConfigError(f"allocation has {len(alloc)} entries for {self.rounds} rounds")
        if any(a < 0 for a in alloc):
            raise ConfigError("allocation fractions must be >= 0")
        if sum((exact_fraction(a) for a in alloc), Fraction(0)) > 1:
            raise ConfigError(f"allocation {alloc} sums to more than 1")
        object.__setattr__(self, "allocation", tuple(float(a) for a in alloc))

    def round_budget(self, round_k: int, total_budget: int) -> int:
        """Whole bytes available in one round; floors keep the total within budget."""
        return int(exact_fraction(self.allocation[round_k]) * total_budget // 1)


@dataclass(frozen=True)
class ScenarioSource:
    """Where scenarios come from: explicit files or a seeded generator family."""

    paths: tuple[str, ...] = ()
    family: str = "random"
    num_seeds: int = 1
    base_seed: int = 0
    params: dict = field(default_factory=dict, hash=False)

    def seeds(self) -> list[int]:
        return [self.base_seed + k for k in range(self.num_seeds)]


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: ProtocolConfig = ProtocolConfig()
    packing: PackingConfig = PackingConfig()
    fusion: FusionConfig = FusionConfig()
    generator: GeneratorConfig = GeneratorConfig()
    encoder: EncoderConfig = EncoderConfig()
    scenarios: ScenarioSource = ScenarioSource()
    detect_threshold: float = 0.3
    output: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if not 0 <= self.detect_threshold < 1:
            raise ConfigError(f"detect_threshold must lie in [0, 1), got {self.detect_threshold}")

    def with_protocol(self, **changes) -> "ExperimentConfig":
        """Copy with protocol fields changed; a new round count resets the allocation unless given."""
        if "rounds" in changes and "allocation" not in changes and changes["rounds"] != self.protocol.rounds:
            changes["allocation"] = None
        return replace(self, protocol=replace(self.protocol, **changes))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenarios"]["paths"] = list(self.scenarios.paths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        sections = {
            "protocol": ProtocolConfig,
            "packing": PackingConfig,
            "fusion": FusionConfig,
            "generator": GeneratorConfig,
            "encoder": EncoderConfig,
            "scenarios": ScenarioSource,
        }
        unknown = set(d) - set(sections) - {"detect_threshold", "output"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for name, typ in sections.items():
            if name in d:
                kwargs[name] = _build(typ, d[name], name)
        if "detect_threshold" in d:
            kwargs["detect_threshold"] = float(d["detect_threshold"])
        if "output" in d:
            kwargs["output"] = dict(d["output"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e
        return cls.from_dict(raw)


def _build(typ, raw, section: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"section {section!r} must be an object")
    known = {f.name for f in fields(typ)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
    try:
        return typ(**values)
    except TypeError as e:
        raise ConfigError(f"bad {section!r} section: {e}") from e
