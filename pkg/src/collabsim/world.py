"""Synthetic BEV scenes and the stand-in observation encoder.

A scenario lives in one global frame shared by every agent.  Columns of the
grid run along +x and rows along +y; cell ``(h, w)`` covers
``[w*cs, (w+1)*cs] x [h*cs, (h+1)*cs]``.

Encoder channel layout (D >= 7):

    0      evidence = visibility * occupancy (+ noise), clamped to [0, 1]
    1..4   offset x, offset y (meters, to the object center), log length, log width
    5..6   cos yaw, sin yaw
    7..    scene texture in [-1, 1], zero where the agent sees nothing

Channels 1..6 are stored multiplied by channel 0, so a decoder recovers the
regression targets as ratios ``ch[k] / ch[0]`` no matter how a fusion step
rescaled the whole vector.  With zero noise channel 0 is exactly 0 or 1 and
the stored values equal the raw targets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError
from .gridcore import FeatureMap, GridShape

SEMANTIC_CHANNELS = 7


@dataclass(frozen=True)
class AgentPose:
    x: float
    y: float
    yaw: float = 0.0
    sensing_range: float = 50.0

    def __post_init__(self):
        if not self.sensing_range > 0:
            raise ConfigError(f"sensing_range must be > 0, got {self.sensing_range}")
        if not -math.pi <= self.yaw < math.pi:
            raise ConfigError(f"yaw must lie in [-pi, pi), got {self.yaw}")


@dataclass(frozen=True)
class WorldObject:
    id: str
    x: float
    y: float
    length: float
    width: float
    yaw: float = 0.0

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ConfigError(f"object {self.id!r} needs positive length and width")

    def contains(self, px, py):
        """Closed point-in-rotated-rectangle test; works on arrays."""
        dx = np.asarray(px) - self.x
        dy = np.asarray(py) - self.y
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        u = dx * c + dy * s
        v = -dx * s + dy * c
        return (np.abs(u) <= self.length / 2) & (np.abs(v) <= self.width / 2)


@dataclass(frozen=True)
class Occluder:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    opaque: bool = True

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError(f"degenerate occluder {self}")


@dataclass(frozen=True)
class EncoderConfig:
    noise_amplitude: float = 0.0
    # noise amplitude grows by this factor at the edge of the sensing range
    noise_distance_decay: float = 0.0

    def __post_init__(self):
        if self.noise_amplitude < 0 or self.noise_distance_decay < 0:
            raise ConfigError("encoder noise settings must be >= 0")


@dataclass(frozen=True)
class Scenario:
    grid: GridShape
    agents: tuple[AgentPose, ...]
    objects: tuple[WorldObject, ...] = ()
    occluders: tuple[Occluder, ...] = ()
    rng_seed: int = 0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "occluders", tuple(self.occluders))
        if not self.agents:
            raise ConfigError("a scenario needs at least one agent")
        ex, ey = self.grid.extent
        for i, a in enumerate(self.agents):
            if not (0 <= a.x <= ex and 0 <= a.y <= ey):
                raise ConfigError(f"agent {i} at ({a.x}, {a.y}) lies outside the grid extent")
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ConfigError("object ids must be unique within a scenario")

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rng_seed": self.rng_seed,
            "grid": self.grid.to_dict(),
            "agents": [
                {"x": a.x, "y": a.y, "yaw": a.yaw, "sensing_range": a.sensing_range} for a in self.agents
            ],
            "objects": [
                {"id": o.id, "x": o.x, "y": o.y, "length": o.length, "width": o.width, "yaw": o.yaw}
                for o in self.objects
            ],
            "occluders": [
                {"x_min": o.x_min, "y_min": o.y_min, "x_max": o.x_max, "y_max": o.y_max, "opaque": o.opaque}
                for o in self.occluders
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if "rng_seed" not in d:
            raise ConfigError("scenario is missing the mandatory rng_seed field")
        try:
            return cls(
                grid=GridShape.from_dict(d["grid"]),
                agents=tuple(AgentPose(**a) for a in d["agents"]),
                objects=tuple(WorldObject(**{**o, "id": str(o["id"])}) for o in d.get("objects", [])),
                occluders=tuple(Occluder(**o) for o in d.get("occluders", [])),
                rng_seed=int(d["rng_seed"]),
                name=d.get("name", ""),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"malformed scenario: {e}") from e

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# visibility

def segment_hits_rect(x0, y0, x1, y1, rect: Occluder) -> bool:
    """Liang-Barsky clip of the closed segment against the closed rectangle."""
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, x0 - rect.x_min),
        (dx, rect.x_max - x0),
        (-dy, y0 - rect.y_min),
        (dy, rect.y_max - y0),
    ):
        if p == 0.0:
            if q < 0.0:
                return False
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return False
            if r > t0:
                t0 = r
        else:
            if r < t0:
                return False
            if r < t1:
                t1 = r
    return t0 <= t1


def traverse_cells(x0, y0, x1, y1, height, width):
    """Grid cells crossed by a segment, in order (Amanatides-Woo DDA).

    Coordinates are in cell units.  Both endpoints must lie inside the grid.
    """
    col = min(max(int(math.floor(x0)), 0), width - 1)
    row = min(max(int(math.floor(y0)), 0), height - 1)
    end_col = min(max(int(math.floor(x1)), 0), width - 1)
    end_row = min(max(int(math.floor(y1)), 0), height - 1)
    dx, dy = x1 - x0, y1 - y0
    if dx > 0:
        step_c, t_max_c, t_dc = 1, (col + 1 - x0) / dx, 1.0 / dx
    elif dx < 0:
        step_c, t_max_c, t_dc = -1, (col - x0) / dx, -1.0 / dx
    else:
        step_c, t_max_c, t_dc = 0, math.inf, math.inf
    if dy > 0:
        step_r, t_max_r, t_dr = 1, (row + 1 - y0) / dy, 1.0 / dy
    elif dy < 0:
        step_r, t_max_r, t_dr = -1, (row - y0) / dy, -1.0 / dy
    else:
        step_r, t_max_r, t_dr = 0, math.inf, math.inf

    cells = [(row, col)]
    for _ in range(height + width + 2):
        if row == end_row and col == end_col:
            break
        if t_max_c < t_max_r:
            if t_max_c > 1.0:
                break
            col += step_c
            t_max_c += t_dc
        else:
            if t_max_r > 1.0:
                break
            row += step_r
            t_max_r += t_dr
        if not (0 <= row < height and 0 <= col < width):
            break
        cells.append((row, col))
    return cells


def _occluder_index(scenario: Scenario) -> dict[tuple[int, int], list[Occluder]]:
    """Map each cell to the opaque occluders overlapping its closed box."""
    g = scenario.grid
    index: dict[tuple[int, int], list[Occluder]] = {}
    for occ in scenario.occluders:
        if not occ.opaque:
            continue
        c0 = max(int(math.floor(occ.x_min / g.cell_size)) - 1, 0)
        c1 = min(int(math.floor(occ.x_max / g.cell_size)) + 1, g.width - 1)
        r0 = max(int(math.floor(occ.y_min / g.cell_size)) - 1, 0)
        r1 = min(int(math.floor(occ.y_max / g.cell_size)) + 1, g.height - 1)
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                bx0, bx1 = c * g.cell_size, (c + 1) * g.cell_size
                by0, by1 = r * g.cell_size, (r + 1) * g.cell_size
                if occ.x_min <= bx1 and occ.x_max >= bx0 and occ.y_min <= by1 and occ.y_max >= by0:
                    index.setdefault((r, c), []).append(occ)
    return index


@lru_cache(maxsize=64)
def _cached_index(scenario: Scenario):
    return _occluder_index(scenario)


def _line_of_sight(agent: AgentPose, tx: float, ty: float, scenario: Scenario, index) -> bool:
    g = scenario.grid
    cs = g.cell_size
    for cell in traverse_cells(agent.x / cs, agent.y / cs, tx / cs, ty / cs, g.height, g.width):
        for occ in index.get(cell, ()):
            if segment_hits_rect(agent.x, agent.y, tx, ty, occ):
                return False
    return True


def visibility(agent: AgentPose, cell: tuple[int, int], scenario: Scenario) -> float:
    """1.0 if the agent sees the center of ``cell``, else 0.0."""
    g = scenario.grid
    h, w = cell
    if not (0 <= h < g.height and 0 <= w < g.width):
        raise DimensionError(f"cell {cell} outside a {g.height}x{g.width} grid")
    tx, ty = g.cell_center(h, w)
    if math.hypot(tx - agent.x, ty - agent.y) > agent.sensing_range:
        return 0.0
    return 1.0 if _line_of_sight(agent, tx, ty, scenario, _cached_index(scenario)) else 0.0


def visibility_map(scenario: Scenario, agent_index: int) -> np.ndarray:
    return _visibility_map(scenario, agent_index).copy()


@lru_cache(maxsize=256)
def _visibility_map(scenario: Scenario, agent_index: int) -> np.ndarray:
    g = scenario.grid
    agent = scenario.agents[agent_index]
    x, y = g.cell_centers()
    vis = (np.hypot(x - agent.x, y - agent.y) <= agent.sensing_range).astype(np.float64)
    index = _cached_index(scenario)
    if index:
        for h, w in zip(*np.nonzero(vis)):
            if not _line_of_sight(agent, x[h, w], y[h, w], scenario, index):
                vis[h, w] = 0.0
    vis.setflags(write=False)
    return vis


def occupancy_owner(scenario: Scenario) -> np.ndarray:
    """Index of the first object whose rectangle holds each cell center, -1 if none."""
    g = scenario.grid
    x, y = g.cell_centers()
    owner = np.full((g.height, g.width), -1, dtype=np.int64)
    for k, obj in enumerate(scenario.objects):
        inside = obj.contains(x, y) & (owner < 0)
        owner[inside] = k
    return owner


def occupancy(scenario: Scenario) -> np.ndarray:
    return (occupancy_owner(scenario) >= 0).astype(np.float64)


def _agent_index(scenario: Scenario, agent) -> int:
    if isinstance(agent, (int, np.integer)):
        if not 0 <= agent < scenario.num_agents:
            raise ConfigError(f"agent index {agent} out of range")
        return int(agent)
    try:
        return scenario.agents.index(agent)
    except ValueError:
        raise ConfigError("agent does not belong to the scenario") from None


def scene_texture(scenario: Scenario) -> np.ndarray:
    """Seeded per-cell texture shared by every observer, shape (H, W, D-7)."""
    g = scenario.grid
    rng = np.random.default_rng(np.random.SeedSequence([scenario.rng_seed, 7]))
    return rng.uniform(-1.0, 1.0, size=(g.height, g.width, max(g.channels - SEMANTIC_CHANNELS, 0)))


def encode(scenario: Scenario, agent, config: EncoderConfig | None = None) -> FeatureMap:
    """Deterministic synthetic feature map for one agent.

    ``agent`` is an index into ``scenario.agents`` or the pose itself.
    """
    config = config or EncoderConfig()
    g = scenario.grid
    if g.channels < SEMANTIC_CHANNELS:
        raise ConfigError(f"encoder needs D >= {SEMANTIC_CHANNELS}, got {g.channels}")
    idx = _agent_index(scenario, agent)
    pose = scenario.agents[idx]

    vis = _visibility_map(scenario, idx)
    owner = occupancy_owner(scenario)
    seen = vis * (owner >= 0)
    evidence = seen.copy()
    if config.noise_amplitude > 0:
        x, y = g.cell_centers()
        dist = np.hypot(x - pose.x, y - pose.y)
        amp = config.noise_amplitude * (1.0 + config.noise_distance_decay * dist / pose.sensing_range)
        rng = np.random.default_rng(np.random.SeedSequence([scenario.rng_seed, 1, idx]))
        evidence = evidence + rng.uniform(-1.0, 1.0, size=evidence.shape) * amp
    evidence = np.clip(evidence, 0.0, 1.0)

    out = np.zeros((g.height, g.width, g.channels))
    out[..., 0] = evidence
    xc, yc = g.cell_centers()
    for h, w in zip(*np.nonzero(seen)):
        obj = scenario.objects[owner[h, w]]
        targets = (
            obj.x - xc[h, w],
            obj.y - yc[h, w],
            math.log(obj.length),
            math.log(obj.width),
            math.cos(obj.yaw),
            math.sin(obj.yaw),
        )
        out[h, w, 1:SEMANTIC_CHANNELS] = np.asarray(targets) * evidence[h, w]
    if g.channels > SEMANTIC_CHANNELS:
        out[..., SEMANTIC_CHANNELS:] = scene_texture(scenario) * vis[..., None]
    return FeatureMap(out, g.cell_size)


def ground_truth(scenario: Scenario, agent=None) -> list[WorldObject]:
    """Every object whose center lies inside the grid extent.

    Supervision is scene-global, so occluded objects count for every agent;
    ``agent`` is accepted for symmetry with :func:`encode` and ignored.
    """
    ex, ey = scenario.grid.extent
    return [o for o in scenario.objects if 0 <= o.x < ex and 0 <= o.y < ey]
