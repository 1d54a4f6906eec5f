import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collabsim.errors import ConfigError, DimensionError
from collabsim.gridcore import GridShape
from collabsim.world import (
    AgentPose,
    EncoderConfig,
    Occluder,
    Scenario,
    WorldObject,
    encode,
    ground_truth,
    occupancy,
    scene_texture,
    segment_hits_rect,
    traverse_cells,
    visibility,
    visibility_map,
)
from tests.helpers import open_scene


# independent oracle: a closed segment meets a closed box iff an endpoint is
# inside or the segment crosses (or touches) one of the four edges
def _orient(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (v > 0) - (v < 0)


def _on_segment(ax, ay, bx, by, px, py):
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def _segments_meet(p1, p2, q1, q2):
    o1, o2 = _orient(*p1, *p2, *q1), _orient(*p1, *p2, *q2)
    o3, o4 = _orient(*q1, *q2, *p1), _orient(*q1, *q2, *p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and _on_segment(*p1, *p2, *q1))
        or (o2 == 0 and _on_segment(*p1, *p2, *q2))
        or (o3 == 0 and _on_segment(*q1, *q2, *p1))
        or (o4 == 0 and _on_segment(*q1, *q2, *p2))
    )


def oracle_hits(x0, y0, x1, y1, r):
    inside = lambda x, y: r.x_min <= x <= r.x_max and r.y_min <= y <= r.y_max
    if inside(x0, y0) or inside(x1, y1):
        return True
    corners = [(r.x_min, r.y_min), (r.x_max, r.y_min), (r.x_max, r.y_max), (r.x_min, r.y_max)]
    return any(_segments_meet((x0, y0), (x1, y1), corners[k], corners[(k + 1) % 4]) for k in range(4))


ints = st.integers(0, 12)


@given(ints, ints, ints, ints, ints, ints, st.integers(1, 5), st.integers(1, 5))
def test_segment_rect_matches_edge_oracle(x0, y0, x1, y1, rx, ry, rw, rh):
    # integer coordinates make grazing contacts common and exact
    r = Occluder(rx, ry, rx + rw, ry + rh)
    assert segment_hits_rect(x0, y0, x1, y1, r) == oracle_hits(x0, y0, x1, y1, r)


def test_segment_grazing_corner_is_blocked():
    r = Occluder(1.0, 1.0, 2.0, 2.0)
    assert segment_hits_rect(0.0, 0.0, 1.0, 1.0, r)
    assert segment_hits_rect(0.0, 2.0, 3.0, 2.0, r)
    assert not segment_hits_rect(0.0, 2.0001, 3.0, 2.0001, r)


def _cells_by_sampling(x0, y0, x1, y1):
    cells = set()
    for t in np.linspace(0, 1, 20001):
        cells.add((int(math.floor(y0 + t * (y1 - y0))), int(math.floor(x0 + t * (x1 - x0)))))
    return cells


coord = st.floats(0.01, 7.99, allow_nan=False)


@given(coord, coord, coord, coord)
def test_traversal_is_a_connected_walk_covering_sampled_cells(x0, y0, x1, y1):
    cells = traverse_cells(x0, y0, x1, y1, 8, 8)
    assert cells[0] == (int(y0), int(x0))
    assert cells[-1] == (int(y1), int(x1))
    for (r0, c0), (r1, c1) in zip(cells, cells[1:]):
        assert abs(r0 - r1) + abs(c0 - c1) == 1
    # dense sampling can only miss cells, never invent them
    assert _cells_by_sampling(x0, y0, x1, y1) <= set(cells)


def test_visibility_blocked_by_wall():
    wall = Occluder(3.0, 0.0, 4.0, 8.0)
    sc = open_scene(occluders=[wall], agents=[AgentPose(1.5, 4.5, 0.0, 100.0)])
    assert visibility(sc.agents[0], (4, 1), sc) == 1.0
    assert visibility(sc.agents[0], (4, 6), sc) == 0.0
    vm = visibility_map(sc, 0)
    assert vm[:, :3].all() and not vm[:, 4:].any()


def test_visibility_respects_range_and_transparent_occluders():
    glass = Occluder(3.0, 0.0, 4.0, 8.0, opaque=False)
    sc = open_scene(occluders=[glass], agents=[AgentPose(0.5, 0.5, 0.0, 3.0)])
    vm = visibility_map(sc, 0)
    x, y = sc.grid.cell_centers()
    assert np.array_equal(vm == 1, np.hypot(x - 0.5, y - 0.5) <= 3.0)


def test_visibility_map_matches_pointwise_oracle():
    occ = [Occluder(2.0, 2.0, 3.5, 4.0), Occluder(5.0, 0.5, 6.0, 1.5)]
    agent = AgentPose(1.2, 6.3, 0.0, 9.0)
    sc = open_scene(occluders=occ, agents=[agent])
    vm = visibility_map(sc, 0)
    for h in range(8):
        for w in range(8):
            tx, ty = w + 0.5, h + 0.5
            expected = math.hypot(tx - agent.x, ty - agent.y) <= 9.0 and not any(
                oracle_hits(agent.x, agent.y, tx, ty, o) for o in occ
            )
            assert vm[h, w] == float(expected), (h, w)


def test_visibility_rejects_cell_outside_grid():
    sc = open_scene()
    with pytest.raises(DimensionError):
        visibility(sc.agents[0], (8, 0), sc)


def test_scenario_validation():
    g = GridShape(4, 4, 8, 1.0)
    with pytest.raises(ConfigError):
        Scenario(g, (AgentPose(5.0, 1.0),))
    car = WorldObject("a", 1, 1, 2, 1)
    with pytest.raises(ConfigError):
        Scenario(g, (AgentPose(1.0, 1.0),), (car, car))
    with pytest.raises(ConfigError):
        AgentPose(0, 0, math.pi)
    with pytest.raises(ConfigError):
        Scenario.from_dict({"grid": g.to_dict(), "agents": [{"x": 1, "y": 1}]})


def test_scenario_save_load_roundtrip(tmp_path):
    sc = open_scene(objects=[WorldObject("car", 4.5, 4.5, 3.0, 1.5, 0.3)], occluders=[Occluder(1, 1, 2, 2)], seed=11)
    path = tmp_path / "s.json"
    sc.save(path)
    assert Scenario.load(path) == sc
    assert json.loads(path.read_text())["rng_seed"] == 11


def test_occupancy_uses_closed_rectangles():
    # a 2x1 axis-aligned box centered on a cell boundary covers both touching centers
    sc = open_scene(objects=[WorldObject("c", 4.0, 4.5, 1.0, 0.5)])
    occ = occupancy(sc)
    assert occ[4, 3] == 1 and occ[4, 4] == 1 and occ.sum() == 2


def test_encode_channel_layout():
    car = WorldObject("c", 4.5, 4.5, 3.0, 1.5, math.pi / 2)
    sc = open_scene(objects=[car])
    f = encode(sc, 0).values
    assert f.shape == (8, 8, 8)
    assert f[4, 4, 0] == 1.0
    assert np.allclose(f[4, 4, 1:7], [0.0, 0.0, math.log(3.0), math.log(1.5), math.cos(math.pi / 2), 1.0])
    # covered cells above and below the center carry offsets back to it
    assert np.isclose(f[3, 4, 2], 1.0) and np.isclose(f[5, 4, 2], -1.0)
    assert f[0, 0, 0] == 0.0 and not f[0, 0, 1:7].any()


def test_encode_texture_is_shared_and_gated_by_visibility():
    wall = Occluder(3.0, 0.0, 4.0, 8.0)
    sc = open_scene(occluders=[wall], agents=[AgentPose(0.5, 4.5, 0.0, 100.0), AgentPose(7.5, 4.5, 0.0, 100.0)])
    a, b = encode(sc, 0).values, encode(sc, 1).values
    tex = scene_texture(sc)[..., 0]
    assert np.array_equal(a[:, :3, 7], tex[:, :3]) and np.array_equal(b[:, 4:, 7], tex[:, 4:])
    assert not a[:, 6:, 7].any() and b[:, 6:, 7].any()
    assert not b[:, :2, 7].any() and a[:, :2, 7].any()


def test_encode_is_deterministic_and_noise_seeded():
    sc = open_scene(objects=[WorldObject("c", 4.5, 4.5, 3.0, 1.5)], seed=5)
    cfg = EncoderConfig(noise_amplitude=0.2)
    assert encode(sc, 0, cfg) == encode(sc, 0, cfg)
    assert encode(sc, 0, cfg) != encode(sc, 1, cfg)
    assert encode(sc, 0) != encode(sc, 0, cfg)
    v = encode(sc, 0, cfg).values[..., 0]
    assert v.min() >= 0 and v.max() <= 1


def test_encode_needs_semantic_channels():
    with pytest.raises(ConfigError):
        encode(open_scene(d=6), 0)


def test_ground_truth_excludes_objects_outside_extent():
    inside = WorldObject("in", 1.0, 1.0, 2.0, 1.0)
    outside = WorldObject("out", 9.0, 1.0, 2.0, 1.0)
    sc = open_scene(objects=[inside, outside])
    assert [o.id for o in ground_truth(sc)] == ["in"]
