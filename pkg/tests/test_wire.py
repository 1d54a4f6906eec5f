import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collabsim.errors import WireError
from collabsim.wire import HEADER_BYTES, Message, VolumeReport, comm_volume, decode_message, encode_message


@st.composite
def messages(draw):
    h, w, d = draw(st.integers(1, 6)), draw(st.integers(1, 6)), draw(st.integers(1, 9))
    idx = sorted(draw(st.sets(st.integers(0, h * w - 1))))
    f32 = st.floats(width=32, allow_nan=False)
    req = draw(st.lists(st.floats(0, 1, width=32), min_size=h * w, max_size=h * w))
    vals = draw(st.lists(f32, min_size=len(idx) * d, max_size=len(idx) * d))
    ids = st.integers(0, 2**32 - 1)
    return Message(draw(ids), draw(ids), draw(ids), h, w, d, req, idx, np.reshape(vals, (len(idx), d)))


@given(messages())
def test_roundtrip_is_bit_exact(m):
    assert decode_message(encode_message(m)) == m


def _layout_oracle(m: Message) -> bytes:
    out = b"CPSM" + struct.pack("<I", 1)
    out += struct.pack("<7I", m.sender, m.receiver, m.round, m.height, m.width, m.channels, len(m.indices))
    out += b"".join(struct.pack("<f", float(x)) for x in m.request.ravel())
    for i, row in zip(m.indices, m.values):
        out += struct.pack("<I", int(i)) + b"".join(struct.pack("<f", float(x)) for x in row)
    return out


@given(messages())
def test_layout_matches_struct_oracle(m):
    assert encode_message(m) == _layout_oracle(m)


def _sample():
    return Message(1, 2, 0, 2, 2, 3, np.full((2, 2), 0.5), [0, 3], np.arange(6.0).reshape(2, 3))


def test_sizes():
    m = _sample()
    data = encode_message(m)
    assert len(data) == HEADER_BYTES + 4 * 4 + 2 * (4 + 12)
    assert m.payload_bytes == 24 and m.index_bytes == 8 and m.request_bytes == 16
    feats, delivered = m.dense()
    assert delivered.tolist() == [[True, False], [False, True]]
    assert feats[1, 1].tolist() == [3.0, 4.0, 5.0]


@pytest.mark.parametrize(
    "mutate, pos",
    [
        (lambda b: b[:10], 10),
        (lambda b: b"XPSM" + b[4:], 0),
        (lambda b: b[:4] + struct.pack("<I", 2) + b[8:], 4),
        (lambda b: b + b"\0", None),
        (lambda b: b[:-1], None),
    ],
)
def test_malformed_bytes_raise_with_position(mutate, pos):
    data = encode_message(_sample())
    with pytest.raises(WireError) as exc:
        decode_message(mutate(data))
    if pos is not None:
        assert exc.value.position == pos
        assert f"at byte {pos}" in str(exc.value)


def test_bad_indices_rejected_on_both_sides():
    m = Message(0, 1, 0, 2, 2, 1, np.zeros((2, 2)), [3, 1], [[1.0], [2.0]])
    with pytest.raises(WireError):
        encode_message(m)
    good = bytearray(encode_message(_sample()))
    body = HEADER_BYTES + 16
    good[body + 16 : body + 20] = struct.pack("<I", 9)
    with pytest.raises(WireError) as exc:
        decode_message(bytes(good))
    assert exc.value.position == body + 16


def test_comm_volume_values():
    assert comm_volume(256, 64) == 16.0
    assert comm_volume(1, 2) == 3.0
    assert comm_volume(0, 8) == 0.0
    assert comm_volume(3, 5) == pytest.approx(math.log2(60))
    with pytest.raises(ValueError):
        comm_volume(-1, 2)


def test_volume_report_counts_indices_separately():
    r = VolumeReport.of(_sample())
    assert (r.payload_cells, r.raw_bytes) == (2, 2 * (4 + 12))
    assert r.volume_log2_bytes == pytest.approx(math.log2(24))
