"""Agent role interfaces shared by the oracle and HTTP backends."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Mapping, Protocol, Sequence

from .semantic_map import Detection

if TYPE_CHECKING:
    from .mcts import ScoredCandidate
    from .memory import MemoryBank, MultimodalContext
    from .perception import QueryHistory, Sufficiency, VisualQuery

STOP = "STOP"


class AgentError(RuntimeError):
    """An agent call failed after its retries were exhausted."""


@dataclass(frozen=True)
class Observation:
    """Handle on the panorama seen at one waypoint.

    ``image_ref`` points at real imagery when there is any; simulated runs
    leave it empty and perceivers work from the world model instead.
    """

    waypoint_id: str
    heading: float
    width: int
    height: int
    image_ref: str | None = None


class Scanner(Protocol):
    def scan(
        self, at: str, heading: float, views: int, panorama: tuple[int, int]
    ) -> tuple[list[Detection], dict[int, float]]: ...


class Orchestrator(Protocol):
    def generate_query(
        self, map_text: str, trajectory: str, instruction: str, history: QueryHistory
    ) -> VisualQuery: ...

    def check_sufficiency(
        self, map_text: str, history: QueryHistory, instruction: str
    ) -> Sufficiency: ...

    def evaluate_values(
        self, instruction: str, trajectory: str, answers: Sequence[str], candidates: Sequence[str]
    ) -> Mapping[str, float]: ...


class Perceiver(Protocol):
    def perceive(self, observation: Observation, query: VisualQuery) -> str: ...


class Decider(Protocol):
    def decide(
        self,
        candidates: Sequence[ScoredCandidate],
        context: MultimodalContext,
        memory: MemoryBank,
        paths: Mapping[str, Sequence[str]],
    ) -> str: ...


@dataclass
class AgentBackends:
    orchestrator: Orchestrator
    perceiver: Perceiver
    decider: Decider
    scanner: Scanner
    # Backends that talk to a model append one record per call here; the
    # harness moves them into the step trace.
    call_log: list[dict[str, Any]] | None = None
