"""Small builders shared by the unit tests."""

import numpy as np

from collabsim.gridcore import FeatureMap, GridShape
from collabsim.world import AgentPose, Occluder, Scenario, WorldObject


def open_scene(objects=(), occluders=(), agents=None, h=8, w=8, d=8, cs=1.0, seed=0):
    agents = agents or (AgentPose(0.5, 0.5, 0.0, 100.0), AgentPose(w * cs - 0.5, h * cs - 0.5, 0.0, 100.0))
    return Scenario(GridShape(h, w, d, cs), tuple(agents), tuple(objects), tuple(occluders), rng_seed=seed)


def random_features(rng, h=4, w=5, d=8, cs=1.0):
    return FeatureMap(rng.uniform(-1, 1, (h, w, d)), cs)


__all__ = ["open_scene", "random_features", "AgentPose", "Occluder", "WorldObject", "np"]
