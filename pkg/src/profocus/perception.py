"""Reasoning-guided perception loop.

The orchestrator asks targeted questions about regions of the panorama, the
perceiver answers them, and the orchestrator decides when it has seen enough
before valuing the newly discovered waypoints. Agent failures never abort an
episode: they degrade to "sufficient" verdicts and neutral values, and each
degradation is recorded as a warning.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .agents import AgentBackends, AgentError, Observation, Orchestrator, Perceiver
from .memory import MultimodalContext

logger = logging.getLogger(__name__)

DEFAULT_QUERY_BUDGET = 3
DEDUP_RETRIES = 2
NEUTRAL_VALUE = 0.5
NO_OBJECTS_ANSWER = "no relevant objects in region"
PERCEPTION_FAILED_ANSWER = "no answer (perception agent unavailable)"


class ConfigError(ValueError):
    pass


class DegenerateQueryError(RuntimeError):
    """The orchestrator kept repeating a question it had already asked."""


class Sufficiency(str, enum.Enum):
    SUFFICIENT = "sufficient"
    INSUFFICIENT = "insufficient"


@dataclass(frozen=True)
class VisualQuery:
    question: str
    focus_region: tuple[float, float, float, float]

    def validate(self, width: float, height: float) -> None:
        x1, y1, x2, y2 = self.focus_region
        if not all(math.isfinite(c) for c in self.focus_region):
            raise ValueError("non-finite focus region")
        if x1 < 0 or y1 < 0 or x2 > width or y2 > height:
            raise ValueError(f"focus region {self.focus_region} outside {width}x{height}")
        if x2 <= x1 or y2 <= y1:
            raise ValueError(f"focus region {self.focus_region} has no area")

    def to_dict(self) -> dict[str, Any]:
        return {"question": self.question, "focus_region": list(self.focus_region)}


@dataclass
class QueryHistory:
    """Question/answer pairs gathered at the current timestep."""

    pairs: list[tuple[VisualQuery, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def append(self, query: VisualQuery, answer: str) -> None:
        self.pairs.append((query, answer))

    def clear(self) -> None:
        self.pairs.clear()

    @property
    def questions(self) -> list[str]:
        return [q.question for q, _ in self.pairs]

    @property
    def answers(self) -> list[str]:
        return [a for _, a in self.pairs]

    def render(self) -> str:
        if not self.pairs:
            return "(none)"
        return "\n".join(f"Q{i + 1}: {q.question}\nA{i + 1}: {a}" for i, (q, a) in enumerate(self.pairs))


def _norm_question(text: str) -> str:
    return " ".join(text.lower().split())


def generate_query(
    orch: Orchestrator,
    map_text: str,
    trajectory: str,
    instruction: str,
    history: QueryHistory,
    *,
    panorama: tuple[int, int],
    retries: int = DEDUP_RETRIES,
) -> VisualQuery:
    """Ask the orchestrator for a question it has not asked yet this timestep.

    Raises:
        AgentError: the backend failed.
        DegenerateQueryError: the backend repeated itself ``retries + 1`` times,
            or produced an unusable focus region.
    """
    seen = {_norm_question(q) for q in history.questions}
    for _ in range(retries + 1):
        query = orch.generate_query(map_text, trajectory, instruction, history)
        if _norm_question(query.question) not in seen:
            try:
                query.validate(*panorama)
            except ValueError as exc:
                raise DegenerateQueryError(str(exc)) from exc
            return query
    raise DegenerateQueryError(f"repeated question: {query.question!r}")


def perceive(perc: Perceiver, observation: Observation, query: VisualQuery) -> str:
    query.validate(observation.width, observation.height)
    return perc.perceive(observation, query)


def check_sufficiency(
    orch: Orchestrator,
    map_text: str,
    history: QueryHistory,
    instruction: str,
    *,
    budget: int | None = None,
    warnings: list[str] | None = None,
) -> Sufficiency:
    if budget is not None and len(history) >= budget:
        return Sufficiency.SUFFICIENT
    try:
        return Sufficiency(orch.check_sufficiency(map_text, history, instruction))
    except (AgentError, ValueError) as exc:
        _warn(warnings, f"sufficiency check failed, treating as sufficient: {exc}")
        return Sufficiency.SUFFICIENT


def clamp_unit(value: Any) -> float | None:
    try:
        v = float(value)
    except (TypeError, ValueError):
        return None
    if math.isnan(v):
        return None
    return min(1.0, max(0.0, v))


def evaluate_semantic_values(
    orch: Orchestrator,
    instruction: str,
    trajectory: str,
    answers: Sequence[str],
    candidates: Sequence[str],
    *,
    warnings: list[str] | None = None,
) -> dict[str, float]:
    """One value in [0, 1] per candidate; anything missing or broken becomes 0.5."""
    if not candidates:
        raise ValueError("no candidates to evaluate")
    try:
        raw: Mapping[str, Any] = orch.evaluate_values(instruction, trajectory, list(answers), list(candidates))
    except AgentError as exc:
        _warn(warnings, f"semantic valuation failed, using neutral values: {exc}")
        return {c: NEUTRAL_VALUE for c in candidates}
    out = {}
    for c in candidates:
        v = clamp_unit(raw.get(c))
        if v is None:
            _warn(warnings, f"no usable value for {c!r}, using {NEUTRAL_VALUE}")
            v = NEUTRAL_VALUE
        out[c] = v
    return out


@dataclass
class PerceptionResult:
    answers: list[str]
    values: dict[str, float]
    history: QueryHistory
    verdicts: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.history)


def run_perception_loop(
    backends: AgentBackends,
    observation: Observation,
    map_text: str,
    trajectory: str,
    instruction: str,
    new_candidates: Sequence[str],
    *,
    budget: int = DEFAULT_QUERY_BUDGET,
    enabled: bool = True,
) -> PerceptionResult:
    """Query, perceive and check until sufficient or ``budget`` questions were asked.

    With ``enabled=False`` no questions are asked and valuation sees no answers.
    """
    if budget < 1:
        raise ConfigError("query budget must be at least 1")
    orch = backends.orchestrator
    panorama = (observation.width, observation.height)
    history = QueryHistory()
    result = PerceptionResult([], {}, history)
    while enabled and len(history) < budget:
        try:
            query = generate_query(orch, map_text, trajectory, instruction, history, panorama=panorama)
        except (AgentError, DegenerateQueryError) as exc:
            _warn(result.warnings, f"query generation stopped the loop: {exc}")
            break
        try:
            answer = perceive(backends.perceiver, observation, query)
        except AgentError as exc:
            _warn(result.warnings, f"perception failed: {exc}")
            answer = PERCEPTION_FAILED_ANSWER
        history.append(query, answer)
        verdict = check_sufficiency(
            orch, map_text, history, instruction, budget=budget, warnings=result.warnings
        )
        result.verdicts.append(verdict.value)
        if verdict is Sufficiency.SUFFICIENT:
            break
    result.answers = history.answers
    if new_candidates:
        result.values = evaluate_semantic_values(
            orch, instruction, trajectory, result.answers, new_candidates, warnings=result.warnings
        )
    return result


def _warn(sink: list[str] | None, message: str) -> None:
    logger.warning(message)
    if sink is not None:
        sink.append(message)


def build_context(
    instruction: str,
    trajectory: str,
    smap_text: str,
    answers: Sequence[str],
    *,
    timestep: int,
    waypoint_id: str,
    semantic_values: Mapping[str, float] | None = None,
) -> MultimodalContext:
    return MultimodalContext(
        timestep=timestep,
        instruction=instruction,
        trajectory_caption=trajectory,
        semantic_map_text=smap_text,
        answers=tuple(answers),
        waypoint_id=waypoint_id,
        semantic_values=dict(semantic_values or {}),
    )
