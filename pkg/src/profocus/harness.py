"""Episode runner: scan, perceive, search, decide, move, remember."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .agents import STOP, AgentBackends, AgentError, Observation
from .config import RunConfig
from .mcts import ScoredCandidate, SearchTree, compute_reward, select_top_k
from .memory import MemoryBank, MultimodalContext
from .navgraph import Episode, NavGraph, navigable_candidates, path_length, shortest_path
from .perception import build_context, run_perception_loop
from .semantic_map import build_semantic_map, render_map_text

logger = logging.getLogger(__name__)

STATUS_STOPPED = "stopped"
STATUS_MAX_STEPS = "max_steps"
STATUS_FAILED = "failed"


@dataclass
class StepRecord:
    timestep: int
    waypoint_id: str
    heading: float
    semantic_map: str
    queries: list[dict[str, Any]]
    verdicts: list[str]
    semantic_values: dict[str, float]
    added: list[str]
    reward: float
    tree: list[dict[str, Any]]
    topk: list[dict[str, Any]] | None
    candidates: list[dict[str, Any]]
    decision: str
    segment: list[str]
    path_length: float
    context: dict[str, Any]
    warnings: list[str] = field(default_factory=list)
    llm_calls: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "type": "step",
            "timestep": self.timestep,
            "waypoint_id": self.waypoint_id,
            "heading": self.heading,
            "semantic_map": self.semantic_map,
            "queries": self.queries,
            "verdicts": self.verdicts,
            "semantic_values": dict(sorted(self.semantic_values.items())),
            "added": self.added,
            "reward": self.reward,
            "tree": {"nodes": self.tree},
            "candidates": self.candidates,
            "decision": self.decision,
            "segment": self.segment,
            "path_length": self.path_length,
            "context": self.context,
            "warnings": self.warnings,
        }
        if self.llm_calls:
            out["llm_calls"] = self.llm_calls
        if self.topk is not None:
            out["topk"] = self.topk
            out["tree"]["topk"] = self.topk
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> StepRecord:
        return cls(
            timestep=d["timestep"],
            waypoint_id=d["waypoint_id"],
            heading=d["heading"],
            semantic_map=d["semantic_map"],
            queries=d["queries"],
            verdicts=d["verdicts"],
            semantic_values=d["semantic_values"],
            added=d["added"],
            reward=d["reward"],
            tree=d["tree"]["nodes"],
            topk=d.get("topk"),
            candidates=d["candidates"],
            decision=d["decision"],
            segment=d["segment"],
            path_length=d["path_length"],
            context=d["context"],
            warnings=d.get("warnings", []),
            llm_calls=d.get("llm_calls", []),
        )


@dataclass
class EpisodeTrace:
    episode_id: str
    config: dict[str, Any]
    steps: list[StepRecord]
    route: list[str]
    path_length: float
    status: str
    reason: str = ""

    @property
    def final_waypoint(self) -> str:
        return self.route[-1]

    @property
    def memory(self) -> MemoryBank:
        return MemoryBank.from_records([s.context for s in self.steps])

    def summary(self) -> dict[str, Any]:
        return {
            "type": "summary",
            "episode_id": self.episode_id,
            "config": self.config,
            "route": self.route,
            "path_length": self.path_length,
            "status": self.status,
            "reason": self.reason,
            "steps": len(self.steps),
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(s.to_dict(), sort_keys=True) for s in self.steps]
        lines.append(json.dumps(self.summary(), sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text: str) -> EpisodeTrace:
        steps, summary = [], None
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec["type"] == "step":
                steps.append(StepRecord.from_dict(rec))
            elif rec["type"] == "summary":
                summary = rec
        if summary is None:
            raise ValueError("trace has no summary record")
        return cls(
            episode_id=summary["episode_id"],
            config=summary["config"],
            steps=steps,
            route=summary["route"],
            path_length=summary["path_length"],
            status=summary["status"],
            reason=summary.get("reason", ""),
        )

    @classmethod
    def read(cls, path: str | Path) -> EpisodeTrace:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


def edge_bearing(graph: NavGraph, a: str, b: str) -> float:
    pa, pb = graph.position(a), graph.position(b)
    return math.atan2(pb[0] - pa[0], pb[1] - pa[1])


def discovered_graph(graph: NavGraph, expanded: Iterable[str]) -> NavGraph:
    """Waypoints stood on and scanned, their neighbours, and the edges touching them."""
    expanded = set(expanded)
    ids = set(expanded)
    edges = []
    for w in expanded:
        for n in graph.neighbors(w):
            ids.add(n)
            if n not in expanded or w < n:
                edges.append((w, n))
    return graph.subgraph(ids, edges)


def run_episode(episode: Episode, backends: AgentBackends, config: RunConfig | None = None) -> EpisodeTrace:
    config = config or RunConfig()
    graph = episode.graph
    max_steps = episode.max_steps if config.max_steps is None else config.max_steps
    width, height = config.panorama

    tree = SearchTree(episode.start_id, config.root_prior, config.prior_visit)
    bank = MemoryBank()
    current = episode.start_id
    heading = episode.heading
    route = [current]
    expanded: list[str] = []
    known_values: dict[str, float] = {}
    travelled = 0.0
    trajectory = ""
    steps: list[StepRecord] = []
    status, reason = STATUS_MAX_STEPS, ""

    for t in range(max_steps):
        expanded.append(current)
        try:
            detections, depths = backends.scanner.scan(current, heading, config.views, config.panorama)
        except AgentError as exc:
            status, reason = STATUS_FAILED, f"scan failed: {exc}"
            break
        smap = build_semantic_map(detections, depths, config.panorama, timestep=t)
        map_text = render_map_text(smap)

        candidates = navigable_candidates(graph, current)
        new = [c for c in candidates if c not in tree]
        perception = run_perception_loop(
            backends,
            Observation(current, heading, width, height),
            map_text,
            trajectory,
            episode.instruction,
            new,
            budget=config.query_budget,
            enabled=not config.no_pp,
        )
        known_values.update(perception.values)
        added = tree.expand(current, new, perception.values)
        reward = compute_reward(tree, current, added, perception.values)
        tree.backpropagate(current, reward)

        known = discovered_graph(graph, expanded)
        topk: list[ScoredCandidate] | None = None
        if config.no_bd_mcts:
            options = [_immediate(c, current, graph, known_values, tree) for c in candidates]
        else:
            topk = select_top_k(
                tree, known, current, config.top_k, config.lam,
                config.max_children_per_parent, exclude=expanded,
            )
            options = topk or [_immediate(c, current, graph, known_values, tree) for c in candidates]

        context = build_context(
            episode.instruction, trajectory, map_text, perception.answers,
            timestep=t, waypoint_id=current, semantic_values=perception.values,
        )
        warnings = list(perception.warnings)
        paths = {c.waypoint_id: tree.path(c.waypoint_id) for c in options if c.waypoint_id in tree}
        try:
            decision = backends.decider.decide(options, context, bank, paths)
        except AgentError as exc:
            status, reason = STATUS_FAILED, f"decision failed: {exc}"
            bank.store(context)
            break
        allowed = {c.waypoint_id for c in options}
        if decision != STOP and decision not in allowed:
            warnings.append(f"decision {decision!r} not among candidates; stopping")
            logger.warning(warnings[-1])
            decision = STOP
        bank.store(context)

        segment = [current]
        if decision != STOP:
            segment = shortest_path(known, current, decision)
            if config.move_policy == "single_edge":
                segment = segment[:2]
            travelled += path_length(graph, segment)
            route.extend(segment[1:])
            heading = edge_bearing(graph, segment[-2], segment[-1])

        steps.append(StepRecord(
            timestep=t,
            waypoint_id=current,
            heading=round(heading, 12),
            semantic_map=map_text,
            queries=[{"iteration": i, **q.to_dict(), "answer": a} for i, (q, a) in enumerate(perception.history)],
            verdicts=perception.verdicts,
            semantic_values=perception.values,
            added=added,
            reward=reward,
            tree=tree.snapshot(),
            topk=None if topk is None else [c.to_dict() for c in topk],
            candidates=[c.to_dict() for c in options],
            decision=decision,
            segment=segment,
            path_length=travelled,
            context=context.to_dict(),
            warnings=warnings,
            llm_calls=_drain(backends.call_log),
        ))
        if decision == STOP:
            status = STATUS_STOPPED
            break
        current = segment[-1]
        trajectory = bank.reconstruct_trajectory(expanded)

    return EpisodeTrace(
        episode_id=episode.episode_id,
        config=config.to_dict(),
        steps=steps,
        route=route,
        path_length=travelled,
        status=status,
        reason=reason,
    )


def _immediate(
    wid: str, current: str, graph: NavGraph, values: Mapping[str, float], tree: SearchTree
) -> ScoredCandidate:
    """A neighbour scored by its latest semantic value alone."""
    if wid in values:
        v = values[wid]
    elif wid in tree:
        v = tree.q(wid)
    else:
        v = 0.0
    return ScoredCandidate(wid, v, graph.edge_weight(current, wid), v, current)


def _drain(log: list[dict[str, Any]] | None) -> list[dict[str, Any]]:
    if not log:
        return []
    out = list(log)
    del log[: len(out)]
    return out


def write_traces(traces: Sequence[EpisodeTrace], directory: str | Path) -> list[Path]:
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for tr in traces:
        p = out_dir / f"{tr.episode_id}.jsonl"
        tr.write(p)
        paths.append(p)
    return paths
