"""Dense BEV grid containers.

All arrays are row-major ``(row, col[, channel])`` and stored as float64; the
flat cell index used on the wire and in logs is ``row * W + col``.  Instances
are immutable: the wrapped arrays are flagged read-only after validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class GridShape:
    height: int
    width: int
    channels: int = 1
    cell_size: float = 1.0

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.channels < 1:
            raise ConfigError(f"grid dimensions must be >= 1, got {self}")
        if not self.cell_size > 0:
            raise ConfigError(f"cell_size must be > 0, got {self.cell_size}")

    @property
    def num_cells(self) -> int:
        return self.height * self.width

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        """Global (x, y) of a cell center; columns run along x, rows along y."""
        return ((col + 0.5) * self.cell_size, (row + 0.5) * self.cell_size)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, y) arrays of shape (H, W) holding every cell center."""
        cols = (np.arange(self.width) + 0.5) * self.cell_size
        rows = (np.arange(self.height) + 0.5) * self.cell_size
        x, y = np.meshgrid(cols, rows)
        return x, y

    @property
    def extent(self) -> tuple[float, float]:
        return (self.width * self.cell_size, self.height * self.cell_size)

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "width": self.width,
            "channels": self.channels,
            "cell_size": self.cell_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridShape":
        return cls(int(d["height"]), int(d["width"]), int(d.get("channels", 1)), float(d.get("cell_size", 1.0)))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """H x W x D real-valued feature grid."""

    values: np.ndarray
    cell_size: float = 1.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 3:
            raise DimensionError(f"FeatureMap needs a 3-d array, got shape {v.shape}")
        if v.size == 0:
            raise DimensionError("FeatureMap must be non-empty")
        if not np.isfinite(v).all():
            raise ValueError("FeatureMap values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def zeros(cls, shape: GridShape) -> "FeatureMap":
        return cls(np.zeros((shape.height, shape.width, shape.channels)), shape.cell_size)

    @property
    def shape(self) -> GridShape:
        h, w, d = self.values.shape
        return GridShape(h, w, d, self.cell_size)

    @property
    def hw(self) -> tuple[int, int]:
        return self.values.shape[:2]

    def __eq__(self, other):
        if not isinstance(other, FeatureMap):
            return NotImplemented
        return self.cell_size == other.cell_size and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class ScalarMap:
    """H x W grid with every element in [0, 1] (confidence and request maps)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.size == 0:
            raise DimensionError(f"ScalarMap needs a non-empty 2-d array, got shape {v.shape}")
        if not ((v >= 0.0) & (v <= 1.0)).all():
            raise ValueError("ScalarMap values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def full(cls, hw: tuple[int, int], value: float) -> "ScalarMap":
        return cls(np.full(hw, float(value)))

    @property
    def hw(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, ScalarMap):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class SelectionMask:
    """Binary H x W grid of selected cells."""

    values: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.values)
        if raw.ndim != 2 or raw.size == 0:
            raise DimensionError(f"SelectionMask needs a non-empty 2-d array, got shape {raw.shape}")
        if raw.dtype != np.bool_ and not np.isin(raw, (0, 1)).all():
            raise ValueError("SelectionMask elements must be 0 or 1")
        object.__setattr__(self, "values", _frozen(raw.astype(bool, copy=True)))

    @classmethod
    def empty(cls, hw: tuple[int, int]) -> "SelectionMask":
        return cls(np.zeros(hw, dtype=bool))

    @classmethod
    def from_indices(cls, hw: tuple[int, int], flat_indices) -> "SelectionMask":
        m = np.zeros(hw[0] * hw[1], dtype=bool)
        m[np.asarray(flat_indices, dtype=np.int64)] = True
        return cls(m.reshape(hw))

    @property
    def hw(self) -> tuple[int, int]:
        return self.values.shape

    def popcount(self) -> int:
        return int(np.count_nonzero(self.values))

    def flat_indices(self) -> np.ndarray:
        """Selected flat indices ``h*W + w`` in increasing order."""
        return np.flatnonzero(self.values.ravel())

    def __eq__(self, other):
        if not isinstance(other, SelectionMask):
            return NotImplemented
        return np.array_equal(self.values, other.values)


def _check_hw(a: tuple[int, int], b: tuple[int, int], what: str):
    if tuple(a) != tuple(b):
        raise DimensionError(f"{what}: shape {tuple(a)} does not match {tuple(b)}")


def elementwise_mul(a: ScalarMap, b: ScalarMap) -> ScalarMap:
    _check_hw(a.hw, b.hw, "elementwise_mul")
    return ScalarMap(a.values * b.values)


def mask_apply(mask: SelectionMask, f: FeatureMap) -> FeatureMap:
    """Zero every channel vector outside the mask."""
    _check_hw(mask.hw, f.hw, "mask_apply")
    return FeatureMap(np.where(mask.values[..., None], f.values, 0.0), f.cell_size)


def max_element(mask: SelectionMask) -> int:
    return int(mask.values.any())
