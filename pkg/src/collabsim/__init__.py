"""Bandwidth-limited collaborative perception on a synthetic BEV grid.

Agents encode a shared scene into per-cell feature maps, exchange sparse
confidence-selected cells under a byte budget, fuse what arrives with
per-location attention and decode boxes for AP scoring.
"""

from .config import ExperimentConfig, ProtocolConfig, ScenarioSource
from .errors import CollabSimError, ConfigError, DimensionError, ProtocolError, WireError
from .gridcore import FeatureMap, GridShape, ScalarMap, SelectionMask
from .protocol import TradeoffPoint, no_collaboration, run_experiment
from .scenarios import make_scenario
from .world import AgentPose, Occluder, Scenario, WorldObject, encode

__all__ = [
    "AgentPose", "CollabSimError", "ConfigError", "DimensionError", "ExperimentConfig", "FeatureMap",
    "GridShape", "Occluder", "ProtocolConfig", "ProtocolError", "ScalarMap", "Scenario", "ScenarioSource",
    "SelectionMask", "TradeoffPoint", "WireError", "WorldObject", "encode", "make_scenario",
    "no_collaboration", "run_experiment",
]
