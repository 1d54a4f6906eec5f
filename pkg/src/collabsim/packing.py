"""Budgeted selection of the feature cells an agent sends to a partner."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, ProtocolError
from .gridcore import FeatureMap, ScalarMap, SelectionMask, elementwise_mul
from .wire import Message


@dataclass(frozen=True)
class PackingConfig:
    gaussian_enabled: bool = False
    kernel_size: int = 3
    sigma: float = 1.0

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")


def gaussian_kernel(kernel_size: int, sigma: float) -> np.ndarray:
    t = np.arange(kernel_size) - kernel_size // 2
    k = np.exp(-(t**2) / (2.0 * sigma**2))
    return k / k.sum()


def _correlate_axis(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    r = len(k) // 2
    pad = [(0, 0)] * a.ndim
    pad[axis] = (r, r)
    p = np.pad(a, pad)
    n = a.shape[axis]
    out = np.zeros_like(a)
    for i, kv in enumerate(k):
        out += kv * np.take(p, np.arange(i, i + n), axis=axis)
    return out


def gaussian_filter(s: ScalarMap, cfg: PackingConfig) -> ScalarMap:
    """Separable Gaussian smoothing with zero padding; identity when disabled."""
    if not cfg.gaussian_enabled:
        return s
    k = gaussian_kernel(cfg.kernel_size, cfg.sigma)
    out = _correlate_axis(_correlate_axis(s.values, k, 0), k, 1)
    return ScalarMap(np.clip(out, 0.0, 1.0))


def select_mask(score: ScalarMap, budget_cells: int, cfg: PackingConfig | None = None) -> SelectionMask:
    """Top-``budget_cells`` cells by score.

    Ties go to the smaller flat index; cells scoring exactly zero are never
    selected.  ``cfg`` is accepted for interface symmetry; filtering is a
    separate step (:func:`gaussian_filter`).
    """
    h, w = score.hw
    budget_cells = int(budget_cells)
    if budget_cells < 0:
        raise ConfigError(f"budget must be >= 0, got {budget_cells}")
    if budget_cells > h * w:
        raise ConfigError(f"budget {budget_cells} exceeds the {h * w} grid cells")
    flat = score.values.ravel()
    order = np.argsort(-flat, kind="stable")
    n = min(budget_cells, int(np.count_nonzero(flat > 0)))
    mask = np.zeros(h * w, dtype=bool)
    mask[order[:n]] = True
    return SelectionMask(mask.reshape(h, w))


def pack_score(c_sender: ScalarMap, r_receiver: ScalarMap | None, round_k: int) -> ScalarMap:
    """Selection score: own confidence at round 0, confidence x partner request afterwards."""
    if round_k == 0:
        if r_receiver is not None:
            raise ProtocolError("round 0 packing must not consult a request map")
        return c_sender
    if r_receiver is None:
        raise ProtocolError(f"round {round_k} packing needs the receiver's request map")
    return elementwise_mul(c_sender, r_receiver)


def pack_message(
    f: FeatureMap,
    mask: SelectionMask,
    r_sender: ScalarMap,
    sender: int = 0,
    receiver: int = 0,
    round_k: int = 0,
) -> Message:
    if mask.hw != f.hw or r_sender.hw != f.hw:
        raise DimensionError(f"mask {mask.hw} / request {r_sender.hw} do not match features {f.hw}")
    idx = mask.flat_indices()
    h, w, d = f.values.shape
    return Message(
        sender=sender,
        receiver=receiver,
        round=round_k,
        height=h,
        width=w,
        channels=d,
        request=r_sender.values,
        indices=idx,
        values=f.values.reshape(h * w, d)[idx],
    )
