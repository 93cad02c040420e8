"""Memory bank of per-step multimodal contexts and trajectory captions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .semantic_map import parse_map_text

ANSWER_EXCERPT_CHARS = 120
SAW_OBJECTS = 3


class MemoryBankError(RuntimeError):
    pass


class OrderingError(MemoryBankError):
    pass


class IncompleteMemoryError(MemoryBankError):
    pass


@dataclass(frozen=True)
class MultimodalContext:
    timestep: int
    instruction: str
    trajectory_caption: str
    semantic_map_text: str
    answers: tuple[str, ...]
    waypoint_id: str
    semantic_values: Mapping[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestep": self.timestep,
            "waypoint_id": self.waypoint_id,
            "instruction": self.instruction,
            "trajectory_caption": self.trajectory_caption,
            "semantic_map_text": self.semantic_map_text,
            "answers": list(self.answers),
            "semantic_values": dict(sorted(self.semantic_values.items())),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MultimodalContext:
        return cls(
            timestep=int(data["timestep"]),
            instruction=data["instruction"],
            trajectory_caption=data["trajectory_caption"],
            semantic_map_text=data["semantic_map_text"],
            answers=tuple(data["answers"]),
            waypoint_id=data["waypoint_id"],
            semantic_values={k: float(v) for k, v in data["semantic_values"].items()},
        )


@dataclass(frozen=True)
class FrontierPlaceholder:
    """Stand-in for a waypoint that was seen but never stood on."""

    waypoint_id: str
    semantic_value: float | None


class MemoryBank:
    def __init__(self) -> None:
        self._contexts: list[MultimodalContext] = []
        self._by_waypoint: dict[str, list[int]] = {}
        self._by_timestep: dict[int, MultimodalContext] = {}

    def __len__(self) -> int:
        return len(self._contexts)

    def __iter__(self):
        return iter(self._contexts)

    @property
    def contexts(self) -> list[MultimodalContext]:
        return list(self._contexts)

    def store(self, context: MultimodalContext) -> None:
        if self._contexts and context.timestep <= self._contexts[-1].timestep:
            raise OrderingError(
                f"timestep {context.timestep} not after {self._contexts[-1].timestep}"
            )
        self._contexts.append(context)
        self._by_waypoint.setdefault(context.waypoint_id, []).append(context.timestep)
        self._by_timestep[context.timestep] = context

    def visits(self, waypoint_id: str) -> list[int]:
        return list(self._by_waypoint.get(waypoint_id, []))

    def latest(self, waypoint_id: str) -> MultimodalContext | None:
        ts = self._by_waypoint.get(waypoint_id)
        return self._by_timestep[ts[-1]] if ts else None

    def at(self, timestep: int) -> MultimodalContext | None:
        return self._by_timestep.get(timestep)

    def latest_value(self, waypoint_id: str) -> float | None:
        for ctx in reversed(self._contexts):
            if waypoint_id in ctx.semantic_values:
                return ctx.semantic_values[waypoint_id]
        return None

    def contexts_for_path(self, path: Sequence[str]) -> list[MultimodalContext | FrontierPlaceholder]:
        """Most recent context per path waypoint, placeholders for unvisited ones."""
        out: list[MultimodalContext | FrontierPlaceholder] = []
        for wid in path:
            ctx = self.latest(wid)
            out.append(ctx if ctx is not None else FrontierPlaceholder(wid, self.latest_value(wid)))
        return out

    def reconstruct_trajectory(self, visited: Sequence[str]) -> str:
        """Templated caption, one clause per step in ``visited``."""
        clauses = []
        for t, wid in enumerate(visited):
            ctx = self.at(t)
            if ctx is None or ctx.waypoint_id != wid:
                ctx = self.latest(wid)
            if ctx is None:
                raise IncompleteMemoryError(f"no memory for visited waypoint {wid!r}")
            clauses.append(_clause(t, wid, ctx))
        return "; ".join(clauses)

    def to_records(self) -> list[dict[str, Any]]:
        return [c.to_dict() for c in self._contexts]

    @classmethod
    def from_records(cls, records: Sequence[Mapping[str, Any]]) -> MemoryBank:
        bank = cls()
        for r in records:
            bank.store(MultimodalContext.from_dict(r))
        return bank


def _clause(t: int, wid: str, ctx: MultimodalContext) -> str:
    verb = "started at" if t == 0 else "moved to"
    entries = sorted(parse_map_text(ctx.semantic_map_text), key=lambda e: (e.depth, e.category))
    saw = ", ".join(e.category for e in entries[:SAW_OBJECTS]) or "nothing"
    learned = ctx.answers[0][:ANSWER_EXCERPT_CHARS] if ctx.answers else "nothing new"
    return f"Step {t}: {verb} {wid}; saw {saw}; learned {learned}"
