"""Graph-based instruction-following navigation with active perception and tree search."""

from .agents import STOP, AgentBackends, AgentError, Observation
from .config import RunConfig, load_config, variant
from .harness import EpisodeTrace, StepRecord, run_episode
from .mcts import ScoredCandidate, SearchTree, select_top_k
from .memory import MemoryBank, MultimodalContext
from .metrics import MetricsReport, compute_metrics, episode_metrics
from .navgraph import Episode, NavGraph, Waypoint, geodesic_distance, load_episode, shortest_path
from .perception import Sufficiency, VisualQuery, run_perception_loop
from .semantic_map import Detection, SemanticMap, build_semantic_map, heading_angle, render_map_text

__version__ = "0.1.0"

__all__ = [
    "STOP",
    "AgentBackends",
    "AgentError",
    "Detection",
    "Episode",
    "EpisodeTrace",
    "MemoryBank",
    "MetricsReport",
    "MultimodalContext",
    "NavGraph",
    "Observation",
    "RunConfig",
    "ScoredCandidate",
    "SearchTree",
    "SemanticMap",
    "StepRecord",
    "Sufficiency",
    "VisualQuery",
    "Waypoint",
    "build_semantic_map",
    "compute_metrics",
    "episode_metrics",
    "geodesic_distance",
    "heading_angle",
    "load_config",
    "load_episode",
    "render_map_text",
    "run_episode",
    "run_perception_loop",
    "select_top_k",
    "shortest_path",
    "variant",
]
