import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from collabsim.errors import ConfigError, DimensionError
from collabsim.gridcore import (
    FeatureMap,
    GridShape,
    ScalarMap,
    SelectionMask,
    elementwise_mul,
    mask_apply,
    max_element,
)

unit = st.floats(0, 1, allow_nan=False)


def test_cell_center_uses_columns_for_x():
    g = GridShape(4, 6, 1, 2.0)
    assert g.cell_center(1, 3) == (7.0, 3.0)
    x, y = g.cell_centers()
    assert x[1, 3] == 7.0 and y[1, 3] == 3.0
    assert g.extent == (12.0, 8.0)


def test_grid_shape_roundtrip_and_validation():
    g = GridShape(3, 5, 8, 0.5)
    assert GridShape.from_dict(g.to_dict()) == g
    with pytest.raises(ConfigError):
        GridShape(0, 3)
    with pytest.raises(ConfigError):
        GridShape(3, 3, 1, 0.0)


def test_feature_map_is_read_only_copy():
    src = np.ones((2, 2, 3))
    f = FeatureMap(src)
    src[0, 0, 0] = 5
    assert f.values[0, 0, 0] == 1
    with pytest.raises(ValueError):
        f.values[0, 0, 0] = 2


@pytest.mark.parametrize("bad", [np.ones((2, 2)), np.ones((0, 2, 2))])
def test_feature_map_rejects_bad_shapes(bad):
    with pytest.raises(DimensionError):
        FeatureMap(bad)


def test_feature_map_rejects_non_finite():
    with pytest.raises(ValueError):
        FeatureMap(np.full((1, 1, 1), np.nan))


def test_scalar_map_bounds():
    ScalarMap(np.array([[0.0, 1.0]]))
    with pytest.raises(ValueError):
        ScalarMap(np.array([[1.5]]))
    with pytest.raises(ValueError):
        ScalarMap(np.array([[-1e-12]]))


def test_selection_mask_indices_are_row_major():
    m = SelectionMask.from_indices((3, 4), [5, 0, 11])
    assert m.values[1, 1] and m.values[0, 0] and m.values[2, 3]
    assert list(m.flat_indices()) == [0, 5, 11]
    assert m.popcount() == 3
    with pytest.raises(ValueError):
        SelectionMask(np.array([[2, 0]]))


def test_max_element():
    assert max_element(SelectionMask.empty((3, 3))) == 0
    assert max_element(SelectionMask.from_indices((3, 3), [8])) == 1


@given(hnp.arrays(np.float64, (3, 4), elements=unit), hnp.arrays(np.float64, (3, 4), elements=unit))
def test_elementwise_mul_matches_loop(a, b):
    out = elementwise_mul(ScalarMap(a), ScalarMap(b)).values
    for i in range(3):
        for j in range(4):
            assert out[i, j] == a[i, j] * b[i, j]


def test_elementwise_mul_shape_mismatch():
    with pytest.raises(DimensionError):
        elementwise_mul(ScalarMap.full((2, 2), 0.5), ScalarMap.full((2, 3), 0.5))


@given(hnp.arrays(np.bool_, (3, 4)), hnp.arrays(np.float64, (3, 4, 2), elements=st.floats(-5, 5)))
def test_mask_apply_zeroes_outside(mask, vals):
    out = mask_apply(SelectionMask(mask), FeatureMap(vals)).values
    for i in range(3):
        for j in range(4):
            expected = vals[i, j] if mask[i, j] else np.zeros(2)
            assert np.array_equal(out[i, j], expected)
