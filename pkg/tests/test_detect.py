import math

import numpy as np
import pytest

from collabsim.detect import (
    Detection,
    average_precision,
    decode,
    evaluate,
    iou,
    local_maxima,
    match,
    rotated_aabb,
)
from collabsim.errors import ConfigError
from collabsim.gridcore import FeatureMap
from collabsim.world import WorldObject, encode
from tests.helpers import open_scene


def _det(conf, x, y, length=2.0, width=2.0):
    return Detection(conf, x, y, length, width, 1.0, 0.0)


def _obj(i, x, y, length=2.0, width=2.0):
    return WorldObject(str(i), x, y, length, width)


def test_iou_hand_values():
    assert iou((0, 0, 2, 2), (1, 0, 3, 2)) == pytest.approx(2 / 6)
    assert iou((0, 0, 1, 1), (1, 0, 2, 1)) == 0.0
    assert iou((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0


def test_rotated_aabb_quarter_turn_swaps_extents():
    assert rotated_aabb(0, 0, 4, 2, 0.0, 1.0) == pytest.approx((-1, -2, 1, 2))


def test_ap_hand_computed_curve():
    # ranked TP, FP, TP over 3 objects: recall 1/3 at precision 1, 2/3 at 2/3
    assert average_precision(np.array([True, False, True]), 3) == pytest.approx(1 / 3 + (1 / 3) * (2 / 3))


def test_ap_interpolation_uses_later_higher_precision():
    # FP, TP, TP over 2: precisions .5, .667 -> envelope 2/3 over the whole range
    assert average_precision(np.array([False, True, True]), 2) == pytest.approx(2 / 3)


def test_ap_edge_cases():
    assert average_precision(np.array([], bool), 0) == 1.0
    assert average_precision(np.array([False]), 0) == 0.0
    assert average_precision(np.array([], bool), 4) == 0.0
    assert average_precision(np.array([True, True]), 2) == 1.0


def test_greedy_match_by_confidence():
    gt = [_obj(0, 0, 0)]
    dets = [_det(0.3, 0.0, 0.0), _det(0.9, 0.2, 0.0)]
    tp, order, pairs = match(dets, gt, 0.5)
    assert order == [1, 0] and tp.tolist() == [True, False] and pairs == [(1, 0)]


def test_evaluate_ap70_stricter_than_ap50():
    gt = [_obj(0, 0, 0), _obj(1, 10, 10)]
    # second detection overlaps 0.6 of its object
    dets = [_det(0.9, 0, 0), _det(0.8, 10.5, 10.0)]
    r = evaluate(dets, gt)
    assert r.ap50 == 1.0 and r.ap70 == 0.5
    assert r.precision == 1.0 and r.recall == 1.0


def test_local_maxima_plateau_keeps_first_cell():
    s = np.zeros((3, 4))
    s[1, 1] = s[1, 2] = 0.8
    keep = local_maxima(s)
    assert keep[1, 1] and not keep[1, 2]


def test_decode_recovers_encoded_boxes():
    cars = [WorldObject("a", 2.5, 2.5, 3.0, 1.0, 0.0), WorldObject("b", 6.5, 5.5, 1.0, 1.0, 0.0)]
    sc = open_scene(objects=cars)
    dets = decode(encode(sc, 0), 0.5)
    assert len(dets) == 2
    r = evaluate(dets, cars)
    assert r.ap70 == 1.0
    d = min(dets, key=lambda d: d.cell)
    assert (d.x, d.y, d.h, d.w) == pytest.approx((2.5, 2.5, 3.0, 1.0))
    assert d.cell == 2 * 8 + 1


def test_decode_regression_is_scale_invariant():
    cars = [WorldObject("a", 4.5, 4.5, 3.0, 1.0, 0.7)]
    f = encode(open_scene(objects=cars), 0)
    half = decode(FeatureMap(f.values * 0.6, f.cell_size), 0.5)
    full = decode(f, 0.5)
    assert half[0].confidence == pytest.approx(0.6)
    assert (half[0].x, half[0].h, half[0].cos_a) == pytest.approx((full[0].x, full[0].h, full[0].cos_a))


def test_decode_threshold_is_strict_and_validated():
    v = np.zeros((3, 3, 7))
    v[1, 1, 0] = 0.5
    v[1, 1, 5] = 0.5
    assert decode(FeatureMap(v), 0.5) == []
    assert len(decode(FeatureMap(v), 0.49)) == 1
    with pytest.raises(ConfigError):
        decode(FeatureMap(v), -0.1)
    with pytest.raises(ConfigError):
        decode(FeatureMap(np.zeros((2, 2, 5))))


def test_detection_json_is_sorted():
    assert _det(0.5, 1, 2).to_json().startswith('{"cell": -1, "confidence": 0.5')
