"""Spatial confidence maps and the request maps derived from them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .gridcore import FeatureMap, ScalarMap

MODES = ("channel0", "linear")


@dataclass(frozen=True)
class GeneratorConfig:
    """How a feature map is read out into a confidence map.

    ``channel0`` clamps the evidence channel; ``linear`` applies a logistic
    readout ``sigmoid(w . f + b)`` over all D channels.
    """

    mode: str = "channel0"
    weights: tuple[float, ...] = field(default=())
    bias: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown generator mode {self.mode!r}; expected one of {MODES}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


def _logistic(z: np.ndarray) -> np.ndarray:
    # split by sign so large |z| never overflows exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def generate_confidence(f: FeatureMap, cfg: GeneratorConfig | None = None) -> ScalarMap:
    cfg = cfg or GeneratorConfig()
    if cfg.mode == "channel0":
        return ScalarMap(np.clip(f.values[..., 0], 0.0, 1.0))
    d = f.values.shape[2]
    if len(cfg.weights) != d:
        raise ConfigError(f"linear readout needs {d} weights, got {len(cfg.weights)}")
    z = f.values @ np.asarray(cfg.weights) + cfg.bias
    return ScalarMap(_logistic(z))


def request_map(c: ScalarMap) -> ScalarMap:
    """Cells an agent is unsure about: ``1 - C``."""
    return ScalarMap(1.0 - c.values)


def confidence_from_request(r: ScalarMap) -> ScalarMap:
    """Receiver-side recovery of the sender's confidence from its request map."""
    return ScalarMap(1.0 - r.values)
