"""Confidence-aware per-location attention fusion.

At every cell the ego's feature vector queries the vectors delivered by each
contributor (the ego itself plus every partner that sent that cell).  Scaled
dot-product scores are soft-maxed across contributors per head, averaged over
heads, then multiplied by each contributor's confidence.  The fused vector is
the weighted sum of contributor vectors passed through a two-layer FFN.

Partners that did not send a cell are masked out of that cell's softmax.  A
cell where the ego is the only contributor keeps weight 1 for the ego: there
is nobody to weigh it against, so the ego vector passes through unchanged
(up to the FFN).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, ProtocolError
from .gridcore import FeatureMap, ScalarMap
from .world import AgentPose

# Knuth's MMIX multiplier/increment; outputs use the top 53 bits.
LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_MASK64 = (1 << 64) - 1


class Lcg64:
    """64-bit linear congruential generator: ``s <- (a*s + c) mod 2**64``."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (LCG_MULTIPLIER * self.state + LCG_INCREMENT) & _MASK64
        return self.state

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0**-53)

    def array(self, shape, lo: float, hi: float) -> np.ndarray:
        n = int(np.prod(shape))
        return np.array([self.uniform(lo, hi) for _ in range(n)]).reshape(shape)


ATTENTION_MODES = ("joint", "pairwise")


@dataclass(frozen=True)
class FusionConfig:
    heads: int = 4
    identity_mode: bool = True
    seed: int = 0
    attention: str = "joint"
    spe_enabled: bool = False

    def __post_init__(self):
        if self.heads < 1:
            raise ConfigError(f"heads must be >= 1, got {self.heads}")
        if self.attention not in ATTENTION_MODES:
            raise ConfigError(f"attention must be one of {ATTENTION_MODES}, got {self.attention!r}")


@dataclass(frozen=True)
class SPEConfig:
    enabled: bool = False
    channels: int = 8

    def __post_init__(self):
        if self.enabled and self.channels % 2:
            raise ConfigError("sensor positional encoding needs an even channel count")


@dataclass(frozen=True, eq=False)
class FusionParams:
    """Fusion weights: per-head query/key projections and the FFN.

    ``query``/``key`` have shape (heads, D, D/heads); the FFN maps
    D -> 2D (ReLU) -> D.  Values enter the weighted sum unprojected.
    """

    channels: int
    heads: int
    query: np.ndarray
    key: np.ndarray
    ffn_w1: np.ndarray
    ffn_b1: np.ndarray
    ffn_w2: np.ndarray
    ffn_b2: np.ndarray
    identity_mode: bool = False
    attention: str = "joint"
    spe: SPEConfig = SPEConfig()

    @property
    def head_dim(self) -> int:
        return self.channels // self.heads

    @classmethod
    def create(cls, channels: int, cfg: FusionConfig | None = None) -> "FusionParams":
        cfg = cfg or FusionConfig()
        d = channels
        if d % cfg.heads:
            raise ConfigError(f"D={d} is not divisible by heads={cfg.heads}")
        dh = d // cfg.heads
        spe = SPEConfig(cfg.spe_enabled, d)
        if cfg.identity_mode:
            eye = np.eye(d)
            proj = np.stack([eye[:, h * dh : (h + 1) * dh] for h in range(cfg.heads)])
            return cls(
                d, cfg.heads, proj, proj.copy(),
                np.zeros((d, 2 * d)), np.zeros(2 * d), np.zeros((2 * d, d)), np.zeros(d),
                identity_mode=True, attention=cfg.attention, spe=spe,
            )
        # draw order: query, key, ffn_w1, ffn_b1, ffn_w2, ffn_b2, each row-major
        rng = Lcg64(cfg.seed)
        bound = 1.0 / math.sqrt(d)
        return cls(
            d, cfg.heads,
            rng.array((cfg.heads, d, dh), -bound, bound),
            rng.array((cfg.heads, d, dh), -bound, bound),
            rng.array((d, 2 * d), -bound, bound),
            rng.array((2 * d,), -bound, bound),
            rng.array((2 * d, d), -bound, bound),
            rng.array((d,), -bound, bound),
            identity_mode=False, attention=cfg.attention, spe=spe,
        )

    def ffn(self, x: np.ndarray) -> np.ndarray:
        if self.identity_mode:
            return x
        hidden = np.maximum(x @ self.ffn_w1 + self.ffn_b1, 0.0)
        return hidden @ self.ffn_w2 + self.ffn_b2

    # portable dump: b"CPFP", u32 version, u32 D, u32 heads, u32 identity, u32 joint,
    # u32 spe, then the six arrays as little-endian float64 in declaration order
    def save(self, path) -> None:
        head = struct.pack(
            "<4s6I", b"CPFP", 1, self.channels, self.heads,
            int(self.identity_mode), int(self.attention == "joint"), int(self.spe.enabled),
        )
        body = b"".join(
            np.ascontiguousarray(a, dtype="<f8").tobytes()
            for a in (self.query, self.key, self.ffn_w1, self.ffn_b1, self.ffn_w2, self.ffn_b2)
        )
        Path(path).write_bytes(head + body)

    @classmethod
    def load(cls, path) -> "FusionParams":
        data = Path(path).read_bytes()
        magic, version, d, heads, ident, joint, spe = struct.unpack_from("<4s6I", data, 0)
        if magic != b"CPFP" or version != 1:
            raise ConfigError(f"{path}: not a fusion parameter file")
        dh = d // heads
        shapes = [(heads, d, dh), (heads, d, dh), (d, 2 * d), (2 * d,), (2 * d, d), (d,)]
        offset = struct.calcsize("<4s6I")
        arrays = []
        for shape in shapes:
            count = int(np.prod(shape))
            arrays.append(np.frombuffer(data, "<f8", count, offset).reshape(shape).copy())
            offset += 8 * count
        return cls(
            d, heads, *arrays, identity_mode=bool(ident),
            attention="joint" if joint else "pairwise", spe=SPEConfig(bool(spe), d),
        )


def sensor_positional_encoding(dis, d_index: int, channels: int):
    """sin on even channels, cos on odd ones, frequency set by the channel pair."""
    if not 0 <= d_index < channels:
        raise DimensionError(f"channel {d_index} outside [0, {channels})")
    p = d_index // 2
    arg = np.asarray(dis, dtype=np.float64) / 10000.0 ** (2 * p / channels)
    return np.sin(arg) if d_index % 2 == 0 else np.cos(arg)


def spe_grid(pose: AgentPose, hw: tuple[int, int], channels: int, cell_size: float) -> np.ndarray:
    h, w = hw
    x = (np.arange(w) + 0.5) * cell_size
    y = (np.arange(h) + 0.5) * cell_size
    dis = np.hypot(x[None, :] - pose.x, y[:, None] - pose.y)
    return np.stack([sensor_positional_encoding(dis, k, channels) for k in range(channels)], axis=-1)


def apply_spe(f: FeatureMap, agent: AgentPose, cfg: SPEConfig) -> FeatureMap:
    if not cfg.enabled:
        return f
    d = f.values.shape[2]
    if cfg.channels != d:
        raise DimensionError(f"SPE configured for D={cfg.channels}, features have D={d}")
    return FeatureMap(f.values + spe_grid(agent, f.hw, d, f.cell_size), f.cell_size)


@dataclass(frozen=True, eq=False)
class Contribution:
    """One contributor's view of a location set.

    ``delivered`` marks the cells this contributor actually provided; ``None``
    means dense (the ego's own map).  ``pose`` is only read when SPE is on.
    """

    agent: int
    features: FeatureMap
    confidence: ScalarMap
    delivered: np.ndarray | None = None
    pose: AgentPose | None = None

    def delivered_mask(self) -> np.ndarray:
        if self.delivered is None:
            return np.ones(self.features.hw, dtype=bool)
        return np.asarray(self.delivered, dtype=bool)


def _check(ego: FeatureMap, contributions) -> None:
    if not contributions:
        raise ProtocolError("fusion needs at least one contribution (the ego itself)")
    for c in contributions:
        if c.features.values.shape != ego.values.shape:
            raise DimensionError(
                f"contribution from agent {c.agent} has shape {c.features.values.shape}, "
                f"ego has {ego.values.shape}"
            )
        if c.confidence.hw != ego.hw or (c.delivered is not None and np.shape(c.delivered) != ego.hw):
            raise DimensionError(f"confidence/delivered mask of agent {c.agent} do not match the grid")


def _spe_input(f: FeatureMap, pose: AgentPose | None, params: FusionParams) -> np.ndarray:
    if params.spe.enabled and pose is not None:
        return apply_spe(f, pose, params.spe).values
    return f.values


def attention_distribution(
    ego: FeatureMap, contributions, params: FusionParams, ego_pose: AgentPose | None = None
) -> np.ndarray:
    """Head-averaged attention over contributors before confidence scaling, shape (M, H, W).

    Masked contributors get exactly 0; the rest sum to 1 at every cell.
    """
    _check(ego, contributions)
    delivered = np.stack([c.delivered_mask() for c in contributions])
    if params.attention == "pairwise":
        return delivered.astype(np.float64)
    q_in = _spe_input(ego, ego_pose, params)
    k_in = np.stack([_spe_input(c.features, c.pose, params) for c in contributions])
    q = np.einsum("hwd,ndk->nhwk", q_in, params.query)
    k = np.einsum("mhwd,ndk->mnhwk", k_in, params.key)
    scores = np.einsum("nhwk,mnhwk->mnhw", q, k) / math.sqrt(params.head_dim)
    mask = delivered[:, None, :, :]
    scores = np.where(mask, scores, -np.inf)
    top = scores.max(axis=0, keepdims=True)
    e = np.where(mask, np.exp(scores - top), 0.0)
    probs = e / e.sum(axis=0, keepdims=True)
    return probs.mean(axis=1)


def attention_weights(
    ego: FeatureMap, contributions, params: FusionParams, ego_pose: AgentPose | None = None
) -> list[np.ndarray]:
    """Per-contributor (H, W) weights: attention times the contributor's confidence."""
    a = attention_distribution(ego, contributions, params, ego_pose)
    conf = np.stack([c.confidence.values for c in contributions])
    w = a * conf
    delivered = np.stack([c.delivered_mask() for c in contributions])
    lone = delivered.sum(axis=0) == 1
    if lone.any():
        w = np.where(lone[None], delivered.astype(np.float64), w)
    return list(w)


def fuse(
    ego: FeatureMap, contributions, params: FusionParams, ego_pose: AgentPose | None = None
) -> FeatureMap:
    weights = attention_weights(ego, contributions, params, ego_pose)
    acc = np.zeros_like(ego.values)
    for w, c in zip(weights, contributions):
        acc += w[..., None] * c.features.values
    return FeatureMap(params.ffn(acc), ego.cell_size)
