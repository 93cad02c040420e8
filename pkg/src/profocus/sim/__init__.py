"""Synthetic worlds and oracle agents for desk-scale runs."""

from .oracle import (
    OracleDecider,
    OracleOrchestrator,
    OraclePerceiver,
    OracleScanner,
    OracleWorld,
    oracle_backends,
    oracle_scan,
)
from .world import PROFILES, Gate, SceneObject, Trap, WorldSpec, generate_world, load_world

__all__ = [
    "PROFILES",
    "Gate",
    "OracleDecider",
    "OracleOrchestrator",
    "OraclePerceiver",
    "OracleScanner",
    "OracleWorld",
    "SceneObject",
    "Trap",
    "WorldSpec",
    "generate_world",
    "load_world",
    "oracle_backends",
    "oracle_scan",
]
