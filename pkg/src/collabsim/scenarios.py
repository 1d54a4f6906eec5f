"""Seeded scenario families.

``random``           2-5 agents, scattered buildings and vehicles.
``occlusion``        two agents; one vehicle sits behind a building for agent 0
                     and in plain view of agent 1.
``request_benefit``  two agents sharing an open band of low-index rows full of
                     vehicles both can see, while a wall splits the rest of the
                     map so each agent alone sees the vehicles on its side.
                     Round-0 confidence ranks the shared band first, so a
                     single round spends its budget on cells the partner has.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .gridcore import GridShape
from .world import AgentPose, Occluder, Scenario, WorldObject, occupancy_owner, visibility_map

FAMILIES = ("random", "occlusion", "request_benefit")


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 100 + stream]))


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def _inside_any(x, y, occluders, margin=0.0) -> bool:
    return any(
        o.x_min - margin <= x <= o.x_max + margin and o.y_min - margin <= y <= o.y_max + margin for o in occluders
    )


def _vehicle(rng, oid: str, x: float, y: float, yaw: float | None = None) -> WorldObject:
    return WorldObject(
        id=oid,
        x=x,
        y=y,
        length=float(rng.uniform(3.5, 4.5)),
        width=float(rng.uniform(1.6, 2.0)),
        yaw=_wrap(float(rng.uniform(-math.pi, math.pi)) if yaw is None else yaw),
    )


def random_scenario(
    seed: int,
    n_agents: int | None = None,
    height: int = 32,
    width: int = 32,
    channels: int = 8,
    cell_size: float = 2.0,
    n_objects: int | None = None,
    n_occluders: int | None = None,
    sensing_range: tuple[float, float] = (30.0, 50.0),
    min_spacing: int = 3,
) -> Scenario:
    rng = _rng(seed, 0)
    grid = GridShape(height, width, channels, cell_size)
    ex, ey = grid.extent
    n_agents = int(rng.integers(2, 6)) if n_agents is None else n_agents
    n_objects = int(rng.integers(8, 17)) if n_objects is None else n_objects
    n_occluders = int(rng.integers(3, 7)) if n_occluders is None else n_occluders

    occluders = []
    for _ in range(n_occluders):
        w = rng.uniform(2, 5) * cell_size
        h = rng.uniform(2, 5) * cell_size
        x0 = rng.uniform(0, ex - w)
        y0 = rng.uniform(0, ey - h)
        occluders.append(Occluder(float(x0), float(y0), float(x0 + w), float(y0 + h)))

    agents = []
    while len(agents) < n_agents:
        x, y = rng.uniform(0.05 * ex, 0.95 * ex), rng.uniform(0.05 * ey, 0.95 * ey)
        if _inside_any(x, y, occluders, margin=cell_size):
            continue
        yaw = _wrap(float(rng.uniform(-math.pi, math.pi)))
        agents.append(AgentPose(float(x), float(y), yaw, float(rng.uniform(*sensing_range))))

    objects: list[WorldObject] = []
    taken: list[tuple[int, int]] = []
    for _ in range(50 * n_objects):
        if len(objects) == n_objects:
            break
        r, c = int(rng.integers(1, height - 1)), int(rng.integers(1, width - 1))
        if any(max(abs(r - r2), abs(c - c2)) < min_spacing for r2, c2 in taken):
            continue
        x, y = grid.cell_center(r, c)
        if _inside_any(x, y, occluders, margin=cell_size):
            continue
        if any(math.hypot(x - a.x, y - a.y) < 2 * cell_size for a in agents):
            continue
        taken.append((r, c))
        objects.append(_vehicle(rng, f"v{len(objects)}", x, y))
    return Scenario(grid, tuple(agents), tuple(objects), tuple(occluders), rng_seed=seed, name=f"random-{seed}")


def object_cells(scenario: Scenario, k: int) -> list[tuple[int, int]]:
    owner = occupancy_owner(scenario)
    return [(int(r), int(c)) for r, c in zip(*np.nonzero(owner == k))]


def hidden_from(scenario: Scenario, k: int, agent: int) -> bool:
    vis = visibility_map(scenario, agent)
    cells = object_cells(scenario, k)
    return bool(cells) and all(vis[r, c] == 0 for r, c in cells)


def seen_by(scenario: Scenario, k: int, agent: int) -> bool:
    vis = visibility_map(scenario, agent)
    cells = object_cells(scenario, k)
    return bool(cells) and all(vis[r, c] == 1 for r, c in cells)


def occlusion_scenario(seed: int = 0, channels: int = 8) -> Scenario:
    """Agent 0 cannot see vehicle ``hidden`` behind a building; agent 1 can.

    The remaining vehicles are visible to both agents.
    """
    rng = _rng(seed, 1)
    grid = GridShape(32, 32, channels, 2.0)
    for _ in range(200):
        jitter = int(rng.integers(-3, 4))
        row = 16 + jitter
        y = grid.cell_center(row, 0)[1]
        building = Occluder(18.0, y - 7.0, 24.0, y + 7.0)
        agents = (
            AgentPose(9.0, y, 0.0, 60.0),
            AgentPose(55.0, y + float(rng.uniform(-4, 4)), -math.pi / 2, 60.0),
        )
        hidden = _vehicle(rng, "hidden", *grid.cell_center(row, 15), yaw=0.0)
        others = []
        for k, (r, c) in enumerate(((3, int(rng.integers(8, 24))), (28, int(rng.integers(8, 24))))):
            others.append(_vehicle(rng, f"v{k}", *grid.cell_center(r, c)))
        sc = Scenario(grid, agents, (hidden, *others), (building,), rng_seed=seed, name=f"occlusion-{seed}")
        if hidden_from(sc, 0, 0) and seen_by(sc, 0, 1) and all(seen_by(sc, k, a) for k in (1, 2) for a in (0, 1)):
            return sc
    raise ConfigError(f"could not place an occlusion scenario for seed {seed}")


def request_benefit_scenario(seed: int = 0, channels: int = 8, n_shared: int = 7, n_exclusive: int = 3) -> Scenario:
    rng = _rng(seed, 2)
    grid = GridShape(32, 32, channels, 2.0)
    ex, ey = grid.extent
    wall = Occluder(31.0, 24.0, 33.0, ey)
    agents = (
        AgentPose(float(rng.uniform(10, 20)), float(rng.uniform(18, 22)), 0.0, 70.0),
        AgentPose(float(rng.uniform(44, 54)), float(rng.uniform(18, 22)), math.pi / 2 - 0.1, 70.0),
    )
    base = Scenario(grid, agents, (), (wall,), rng_seed=seed)
    vis = [visibility_map(base, a) for a in range(2)]

    objects: list[WorldObject] = []
    taken: list[tuple[int, int]] = []

    def place(rows, cols, want, count, prefix):
        placed = 0
        for _ in range(400):
            if placed == count:
                return
            r, c = int(rng.integers(*rows)), int(rng.integers(*cols))
            if any(max(abs(r - r2), abs(c - c2)) < 3 for r2, c2 in taken):
                continue
            x, y = grid.cell_center(r, c)
            if any(math.hypot(x - a.x, y - a.y) < 4.0 for a in agents):
                continue
            obj = _vehicle(rng, f"{prefix}{placed}", x, y, yaw=float(rng.choice([0.0, math.pi / 2])))
            trial = Scenario(grid, agents, (obj,), (wall,), rng_seed=seed)
            cells = object_cells(trial, 0)
            if not cells or [all(vis[a][rr, cc] for rr, cc in cells) for a in (0, 1)] != want:
                continue
            taken.append((r, c))
            objects.append(obj)
            placed += 1
        if placed < count:
            raise ConfigError(f"could not place {prefix} objects for seed {seed}")

    place((1, 10), (1, 31), [True, True], n_shared, "s")
    place((15, 31), (1, 14), [True, False], n_exclusive, "a")
    place((15, 31), (18, 31), [False, True], n_exclusive, "b")
    return Scenario(grid, agents, tuple(objects), (wall,), rng_seed=seed, name=f"request-benefit-{seed}")


def make_scenario(family: str, seed: int, **params) -> Scenario:
    if family == "random":
        return random_scenario(seed, **params)
    if family == "occlusion":
        return occlusion_scenario(seed, **params)
    if family == "request_benefit":
        return request_benefit_scenario(seed, **params)
    raise ConfigError(f"unknown scenario family {family!r}; expected one of {FAMILIES}")
