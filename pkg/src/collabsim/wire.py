"""Message wire format and communication-volume accounting.

Layout, all integers unsigned 32-bit little-endian, all reals IEEE-754
float32 little-endian::

    magic  b"CPSM"            4 bytes
    version                   u32 (currently 1)
    sender, receiver, round   3 x u32
    H, W, D, n                4 x u32
    request map               H*W x f32, row-major
    n records                 (flat index u32, D x f32), indices strictly increasing

Only the feature records count towards the reported volume; the request map
and the indices are tracked separately.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import WireError

MAGIC = b"CPSM"
VERSION = 1
_PREFIX = struct.Struct("<4sI")
_HEADER = struct.Struct("<7I")
HEADER_BYTES = _PREFIX.size + _HEADER.size
FLOAT_BYTES = 4
INDEX_BYTES = 4


def _record_dtype(d: int) -> np.dtype:
    return np.dtype([("index", "<u4"), ("values", "<f4", (d,))])


@dataclass(frozen=True, eq=False)
class Message:
    """One directed transmission: the sender's request map plus sparse features.

    Arrays are narrowed to float32 on construction, the same precision the
    wire carries, so ``decode_message(encode_message(m)) == m`` bit for bit.
    """

    sender: int
    receiver: int
    round: int
    height: int
    width: int
    channels: int
    request: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        req = np.ascontiguousarray(self.request, dtype="<f4").reshape(self.height, self.width)
        idx = np.ascontiguousarray(self.indices, dtype="<u4").reshape(-1)
        vals = np.ascontiguousarray(self.values, dtype="<f4").reshape(len(idx), self.channels)
        for a in (req, idx, vals):
            a.setflags(write=False)
        object.__setattr__(self, "request", req)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @property
    def num_cells(self) -> int:
        return int(self.indices.size)

    @property
    def payload_bytes(self) -> int:
        """Feature bytes only, the quantity bounded by the budget."""
        return self.num_cells * self.channels * FLOAT_BYTES

    @property
    def request_bytes(self) -> int:
        return self.height * self.width * FLOAT_BYTES

    @property
    def index_bytes(self) -> int:
        return self.num_cells * INDEX_BYTES

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """(H, W, D) float64 features with zeros off-mask, and the (H, W) delivered mask."""
        hw = self.height * self.width
        feats = np.zeros((hw, self.channels))
        feats[self.indices.astype(np.int64)] = self.values
        delivered = np.zeros(hw, dtype=bool)
        delivered[self.indices.astype(np.int64)] = True
        return feats.reshape(self.height, self.width, self.channels), delivered.reshape(self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, Message):
            return NotImplemented
        return (
            (self.sender, self.receiver, self.round, self.height, self.width, self.channels)
            == (other.sender, other.receiver, other.round, other.height, other.width, other.channels)
            and self.request.tobytes() == other.request.tobytes()
            and self.indices.tobytes() == other.indices.tobytes()
            and self.values.tobytes() == other.values.tobytes()
        )


def _check_indices(idx: np.ndarray, hw: int, base: int, stride: int):
    if idx.size == 0:
        return
    bad = np.flatnonzero(idx >= hw)
    if bad.size:
        k = int(bad[0])
        raise WireError(f"cell index {int(idx[k])} >= H*W={hw}", base + k * stride)
    if idx.size > 1:
        bad = np.flatnonzero(np.diff(idx.astype(np.int64)) <= 0)
        if bad.size:
            k = int(bad[0]) + 1
            raise WireError(f"cell indices not strictly increasing at record {k}", base + k * stride)


def encode_message(m: Message) -> bytes:
    hw = m.height * m.width
    stride = INDEX_BYTES + m.channels * FLOAT_BYTES
    body_start = HEADER_BYTES + hw * FLOAT_BYTES
    _check_indices(m.indices, hw, body_start, stride)
    records = np.empty(m.num_cells, dtype=_record_dtype(m.channels))
    records["index"] = m.indices
    records["values"] = m.values
    return b"".join(
        (
            _PREFIX.pack(MAGIC, VERSION),
            _HEADER.pack(m.sender, m.receiver, m.round, m.height, m.width, m.channels, m.num_cells),
            m.request.tobytes(),
            records.tobytes(),
        )
    )


def decode_message(data: bytes) -> Message:
    data = bytes(data)
    if len(data) < HEADER_BYTES:
        raise WireError(f"truncated header: {len(data)} of {HEADER_BYTES} bytes", len(data))
    magic, version = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise WireError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise WireError(f"unsupported version {version}", 4)
    sender, receiver, rnd, h, w, d, n = _HEADER.unpack_from(data, _PREFIX.size)
    if h == 0 or w == 0 or d == 0:
        raise WireError(f"degenerate grid {h}x{w}x{d}", _PREFIX.size + 12)
    hw = h * w
    stride = INDEX_BYTES + d * FLOAT_BYTES
    body_start = HEADER_BYTES + hw * FLOAT_BYTES
    expected = body_start + n * stride
    if len(data) < expected:
        raise WireError(f"truncated message: {len(data)} of {expected} bytes", len(data))
    if len(data) > expected:
        raise WireError(f"{len(data) - expected} trailing bytes", expected)
    request = np.frombuffer(data, dtype="<f4", count=hw, offset=HEADER_BYTES)
    records = np.frombuffer(data, dtype=_record_dtype(d), count=n, offset=body_start)
    _check_indices(records["index"], hw, body_start, stride)
    return Message(sender, receiver, rnd, h, w, d, request, records["index"], records["values"])


def comm_volume(n: int, d: int) -> float:
    """log2 of the feature bytes of ``n`` selected cells with ``d`` float32 channels."""
    if n < 0 or d < 1:
        raise ValueError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
    if n == 0:
        return 0.0
    return math.log2(n * d * 32 / 8)


@dataclass(frozen=True)
class VolumeReport:
    payload_cells: int
    channels: int
    volume_log2_bytes: float
    raw_bytes: int

    @classmethod
    def of(cls, m: Message) -> "VolumeReport":
        n, d = m.num_cells, m.channels
        return cls(n, d, comm_volume(n, d), n * (INDEX_BYTES + d * FLOAT_BYTES))
