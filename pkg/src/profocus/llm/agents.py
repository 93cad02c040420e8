"""Orchestrator, perceiver and decider backed by a chat-completion endpoint."""

from __future__ import annotations

import logging
from functools import lru_cache
from importlib import resources
from typing import Any, Mapping, Sequence

from ..agents import AgentBackends, AgentError, Observation, Perceiver, Scanner
from ..memory import FrontierPlaceholder, MemoryBank, MultimodalContext
from ..perception import QueryHistory, Sufficiency, VisualQuery
from .client import ChatClient, Message
from .structured import SCHEMA_HINTS, StructuredOutputError, neutral_default, parse_structured

logger = logging.getLogger(__name__)

PROMPT_VERSION = "v1"


@lru_cache(maxsize=None)
def load_prompt(name: str, version: str = PROMPT_VERSION) -> str:
    return resources.files("profocus").joinpath("prompts").joinpath(f"{name}.{version}.txt").read_text(encoding="utf-8")


def render_prompt(name: str, **fields: Any) -> str:
    return load_prompt(name).format(**fields)


def _or_none(text: str) -> str:
    return text if text.strip() else "(none)"


class _StructuredCaller:
    """Send a prompt, parse the reply, re-prompt once on failure, then fall back."""

    def __init__(self, client: ChatClient, role: str, log: list[dict[str, Any]] | None):
        self.client = client
        self.role = role
        self.log = log

    def _warn(self, message: str) -> None:
        logger.warning(message)
        if self.log is not None:
            self.log.append({"event": "parse_warning", "role": self.role, "message": message})

    def ask(self, prompt: str, schema: str, candidates: Sequence[str] | None = None) -> Any:
        messages = [Message("user", prompt)]
        reply = self.client.chat(self.role, messages)
        try:
            return parse_structured(reply, schema, candidates=candidates, strict=True)
        except StructuredOutputError as exc:
            first_error = exc
        messages += [
            Message("assistant", reply),
            Message("user", f"Your reply could not be parsed ({first_error}). "
                            f"Reply with only a fenced JSON block of the form {SCHEMA_HINTS[schema]}"),
        ]
        reply = self.client.chat(self.role, messages)
        try:
            return parse_structured(reply, schema, candidates=candidates, strict=True)
        except StructuredOutputError as exc:
            self._warn(f"unparseable {schema} output after repair ({exc}); using neutral default")
            return neutral_default(schema, candidates)


class HttpOrchestrator:
    def __init__(self, client: ChatClient, panorama: tuple[int, int], log: list[dict[str, Any]] | None = None):
        self._call = _StructuredCaller(client, "orchestration", log)
        self.panorama = panorama

    def generate_query(self, map_text: str, trajectory: str, instruction: str, history: QueryHistory) -> VisualQuery:
        prompt = render_prompt(
            "orchestrator_query", instruction=instruction, trajectory=_or_none(trajectory),
            semantic_map=map_text, query_history=history.render(),
            width=self.panorama[0], height=self.panorama[1],
        )
        query = self._call.ask(prompt, "query")
        if query is None:
            raise AgentError("orchestrator produced no usable query")
        return query

    def check_sufficiency(self, map_text: str, history: QueryHistory, instruction: str) -> Sufficiency:
        prompt = render_prompt(
            "orchestrator_sufficiency", instruction=instruction, semantic_map=map_text,
            query_history=history.render(),
        )
        return self._call.ask(prompt, "verdict")

    def evaluate_values(
        self, instruction: str, trajectory: str, answers: Sequence[str], candidates: Sequence[str]
    ) -> Mapping[str, float]:
        learned = "\n".join(f"- {a}" for a in answers) or "(nothing asked)"
        prompt = render_prompt(
            "orchestrator_values", instruction=instruction, trajectory=_or_none(trajectory),
            query_history=learned, candidates="\n".join(f"- {c}" for c in candidates),
        )
        return self._call.ask(prompt, "values", list(candidates))


class HttpPerceiver:
    """Sends a crop reference plus the region rectangle; the crop uses a media fragment."""

    def __init__(self, client: ChatClient):
        self.client = client

    @staticmethod
    def crop_reference(image_ref: str, region: Sequence[float]) -> str:
        x1, y1, x2, y2 = (int(round(c)) for c in region)
        return f"{image_ref}#xywh={x1},{y1},{x2 - x1},{y2 - y1}"

    def perceive(self, observation: Observation, query: VisualQuery) -> str:
        x1, y1, x2, y2 = (int(round(c)) for c in query.focus_region)
        image = None
        note = "No image is attached; say that nothing can be seen."
        if observation.image_ref:
            image = self.crop_reference(observation.image_ref, query.focus_region)
            note = "The attached image is that region."
        prompt = render_prompt(
            "perception", x1=x1, y1=y1, x2=x2, y2=y2, width=observation.width,
            height=observation.height, image_note=note, question=query.question,
        )
        return self.client.chat("perception", [Message("user", prompt, image)]).strip()


def _describe_route(items: Sequence[MultimodalContext | FrontierPlaceholder]) -> str:
    parts = []
    for it in items:
        if isinstance(it, FrontierPlaceholder):
            v = "unknown" if it.semantic_value is None else f"{it.semantic_value:.2f}"
            parts.append(f"{it.waypoint_id} (not visited, value {v})")
        else:
            learned = it.answers[0] if it.answers else "nothing asked"
            parts.append(f"{it.waypoint_id} (visited at step {it.timestep}: {learned})")
    return " -> ".join(parts)


class HttpDecider:
    def __init__(self, client: ChatClient, log: list[dict[str, Any]] | None = None):
        self._call = _StructuredCaller(client, "decision", log)

    def decide(self, candidates, context: MultimodalContext, memory: MemoryBank, paths) -> str:
        lines = []
        for c in candidates:
            route = _describe_route(memory.contexts_for_path(paths.get(c.waypoint_id, [c.waypoint_id])))
            lines.append(f"- {c.waypoint_id}: value {c.path_value:.2f}, {c.distance:.1f} m, "
                         f"score {c.score:.2f}\n    {route}")
        learned = "\n".join(f"- {a}" for a in context.answers) or "(nothing asked)"
        prompt = render_prompt(
            "decision", instruction=context.instruction, trajectory=_or_none(context.trajectory_caption),
            waypoint=context.waypoint_id, semantic_map=context.semantic_map_text,
            query_history=learned, candidates="\n".join(lines) or "(none)",
        )
        return self._call.ask(prompt, "decision", [c.waypoint_id for c in candidates])


def http_backends(
    client: ChatClient,
    scanner: Scanner,
    panorama: tuple[int, int],
    perceiver: Perceiver | None = None,
) -> AgentBackends:
    """Model-backed reasoning roles; detection stays with ``scanner``.

    Pass ``perceiver`` to keep perception local, e.g. for simulated worlds that
    have no imagery to send.
    """
    log: list[dict[str, Any]] = []
    previous = client._log

    def record(entry: dict[str, Any]) -> None:
        log.append(entry)
        if previous is not None:
            previous(entry)

    client._log = record
    return AgentBackends(
        orchestrator=HttpOrchestrator(client, panorama, log),
        perceiver=perceiver or HttpPerceiver(client),
        decider=HttpDecider(client, log),
        scanner=scanner,
        call_log=log,
    )
