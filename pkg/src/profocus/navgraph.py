"""Navigation graph, episodes and geodesic utilities."""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

DEFAULT_SUCCESS_RADIUS = 3.0
DEFAULT_MAX_STEPS = 20

_REL_TOL = 1e-12
_ABS_TOL = 1e-9


class GraphError(ValueError):
    """Malformed graph or episode."""


class UnknownWaypointError(KeyError):
    pass


class UnreachableError(GraphError):
    pass


@dataclass(frozen=True)
class Waypoint:
    id: str
    position: tuple[float, float, float]

    def __post_init__(self) -> None:
        if len(self.position) != 3:
            raise GraphError(f"waypoint {self.id!r}: position must be a 3-vector")
        if not all(math.isfinite(c) for c in self.position):
            raise GraphError(f"waypoint {self.id!r}: non-finite position")


class NavGraph:
    """Undirected waypoint graph with Euclidean edge weights.

    Immutable after construction. Adjacency lists are kept sorted so every
    traversal order is deterministic.
    """

    def __init__(self, waypoints: Iterable[Waypoint], edges: Iterable[Sequence[str]]):
        self._waypoints: dict[str, Waypoint] = {}
        for wp in waypoints:
            if wp.id in self._waypoints:
                raise GraphError(f"duplicate waypoint id {wp.id!r}")
            self._waypoints[wp.id] = wp
        adj: dict[str, set[str]] = {wid: set() for wid in self._waypoints}
        for edge in edges:
            a, b = edge
            if a not in adj or b not in adj:
                raise GraphError(f"edge ({a!r}, {b!r}) references an unknown waypoint")
            if a == b:
                raise GraphError(f"self-loop on {a!r}")
            adj[a].add(b)
            adj[b].add(a)
        self._adj: dict[str, tuple[str, ...]] = {k: tuple(sorted(v)) for k, v in adj.items()}

    @property
    def ids(self) -> list[str]:
        return sorted(self._waypoints)

    def __contains__(self, wid: object) -> bool:
        return wid in self._waypoints

    def __len__(self) -> int:
        return len(self._waypoints)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NavGraph):
            return NotImplemented
        return self._waypoints == other._waypoints and self._adj == other._adj

    __hash__ = None  # type: ignore[assignment]

    def waypoint(self, wid: str) -> Waypoint:
        try:
            return self._waypoints[wid]
        except KeyError:
            raise UnknownWaypointError(wid) from None

    def position(self, wid: str) -> tuple[float, float, float]:
        return self.waypoint(wid).position

    def neighbors(self, wid: str) -> tuple[str, ...]:
        try:
            return self._adj[wid]
        except KeyError:
            raise UnknownWaypointError(wid) from None

    def edges(self) -> list[tuple[str, str]]:
        return sorted((a, b) for a, nbrs in self._adj.items() for b in nbrs if a < b)

    def has_edge(self, a: str, b: str) -> bool:
        return b in self.neighbors(a)

    def edge_weight(self, a: str, b: str) -> float:
        if not self.has_edge(a, b):
            raise GraphError(f"no edge between {a!r} and {b!r}")
        return euclidean(self.position(a), self.position(b))

    def subgraph(self, ids: Iterable[str], edges: Iterable[Sequence[str]] | None = None) -> NavGraph:
        keep = set(ids)
        wps = [self._waypoints[i] for i in sorted(keep)]
        if edges is None:
            edges = [(a, b) for a, b in self.edges() if a in keep and b in keep]
        return NavGraph(wps, edges)

    def to_dict(self) -> dict[str, Any]:
        return {
            "waypoints": [{"id": w, "pos": list(self._waypoints[w].position)} for w in self.ids],
            "edges": [list(e) for e in self.edges()],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> NavGraph:
        wps = [Waypoint(str(w["id"]), tuple(float(c) for c in w["pos"])) for w in data["waypoints"]]
        return cls(wps, [(str(a), str(b)) for a, b in data["edges"]])


def euclidean(p: Sequence[float], q: Sequence[float]) -> float:
    return math.dist(p, q)


def navigable_candidates(graph: NavGraph, at: str) -> list[str]:
    return list(graph.neighbors(at))


def _dijkstra(graph: NavGraph, source: str) -> dict[str, float]:
    graph.waypoint(source)
    dist = {source: 0.0}
    heap = [(0.0, source)]
    done: set[str] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v in graph.neighbors(u):
            nd = d + graph.edge_weight(u, v)
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def distances_from(graph: NavGraph, source: str) -> dict[str, float]:
    """Geodesic distance from ``source`` to every reachable waypoint."""
    return _dijkstra(graph, source)


def geodesic_distance(graph: NavGraph, source: str, target: str) -> float | None:
    """Shortest weighted path length, or ``None`` when ``target`` is unreachable."""
    graph.waypoint(target)
    if source == target:
        graph.waypoint(source)
        return 0.0
    return _dijkstra(graph, source).get(target)


def shortest_path(graph: NavGraph, source: str, target: str) -> list[str]:
    """Lexicographically smallest id sequence among all shortest paths."""
    graph.waypoint(source)
    to_target = _dijkstra(graph, target)
    if source not in to_target:
        raise UnreachableError(f"{target!r} is not reachable from {source!r}")
    path = [source]
    node = source
    while node != target:
        remaining = to_target[node]
        for nbr in graph.neighbors(node):
            if nbr not in to_target:
                continue
            via = graph.edge_weight(node, nbr) + to_target[nbr]
            if math.isclose(via, remaining, rel_tol=_REL_TOL, abs_tol=_ABS_TOL) and to_target[nbr] < remaining:
                node = nbr
                break
        else:  # pragma: no cover - Dijkstra guarantees a tight neighbour
            raise GraphError("shortest path reconstruction failed")
        path.append(node)
    return path


def path_length(graph: NavGraph, path: Sequence[str]) -> float:
    return sum(graph.edge_weight(a, b) for a, b in zip(path, path[1:]))


def diameter(graph: NavGraph) -> float:
    """Largest finite geodesic distance between any two waypoints."""
    best = 0.0
    for wid in graph.ids:
        d = _dijkstra(graph, wid)
        best = max(best, max(d.values()))
    return best


@dataclass(frozen=True)
class Episode:
    graph: NavGraph
    start_id: str
    goal_id: str
    instruction: str
    success_radius: float = DEFAULT_SUCCESS_RADIUS
    max_steps: int = DEFAULT_MAX_STEPS
    heading: float = 0.0
    episode_id: str = "episode"
    extras: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        for wid in (self.start_id, self.goal_id):
            if wid not in self.graph:
                raise GraphError(f"episode references unknown waypoint {wid!r}")
        if self.success_radius < 0:
            raise GraphError("success_radius must be non-negative")
        if self.max_steps < 0:
            raise GraphError("max_steps must be non-negative")
        if geodesic_distance(self.graph, self.start_id, self.goal_id) is None:
            raise GraphError("goal is not reachable from start")

    @property
    def shortest_length(self) -> float:
        d = geodesic_distance(self.graph, self.start_id, self.goal_id)
        assert d is not None
        return d

    def to_dict(self) -> dict[str, Any]:
        out = self.graph.to_dict()
        out.update(
            id=self.episode_id,
            start=self.start_id,
            goal=self.goal_id,
            instruction=self.instruction,
            success_radius=self.success_radius,
            max_steps=self.max_steps,
            heading=self.heading,
        )
        out.update(self.extras)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Episode:
        known = {"waypoints", "edges", "id", "start", "goal", "instruction",
                 "success_radius", "max_steps", "heading"}
        return cls(
            graph=NavGraph.from_dict(data),
            start_id=str(data["start"]),
            goal_id=str(data["goal"]),
            instruction=str(data.get("instruction", "")),
            success_radius=float(data.get("success_radius", DEFAULT_SUCCESS_RADIUS)),
            max_steps=int(data.get("max_steps", DEFAULT_MAX_STEPS)),
            heading=float(data.get("heading", 0.0)),
            episode_id=str(data.get("id", "episode")),
            extras={k: v for k, v in data.items() if k not in known},
        )


def load_episode(path: str | Path) -> Episode:
    with open(path, encoding="utf-8") as fh:
        return Episode.from_dict(json.load(fh))


def _mp3d_position(pose: Sequence[float]) -> tuple[float, float, float]:
    # row-major 4x4 camera-to-world matrix; translation in the last column
    return (float(pose[3]), float(pose[7]), float(pose[11]))


def graph_from_connectivity(records: Sequence[Mapping[str, Any]]) -> NavGraph:
    """Build a graph from a Matterport-style connectivity list.

    Each record carries ``image_id``, a 16-float ``pose``, an ``unobstructed``
    boolean list aligned with the record order, and ``included``.
    """
    included = [bool(r.get("included", True)) for r in records]
    wps = [
        Waypoint(str(r["image_id"]), _mp3d_position(r["pose"]))
        for r, inc in zip(records, included)
        if inc
    ]
    edges = []
    for i, r in enumerate(records):
        if not included[i]:
            continue
        for j, free in enumerate(r.get("unobstructed", [])):
            if free and j > i and included[j]:
                edges.append((str(r["image_id"]), str(records[j]["image_id"])))
    return NavGraph(wps, edges)


def episode_from_r2r(
    record: Mapping[str, Any],
    connectivity: Sequence[Mapping[str, Any]] | NavGraph,
    instruction_index: int = 0,
    success_radius: float = DEFAULT_SUCCESS_RADIUS,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> Episode:
    """Map an R2R record (``scan``, ``path``, ``heading``, ``instructions``) onto an Episode."""
    graph = connectivity if isinstance(connectivity, NavGraph) else graph_from_connectivity(connectivity)
    path = [str(p) for p in record["path"]]
    if not path:
        raise GraphError("R2R record has an empty path")
    instructions = record.get("instructions") or [""]
    base_id = str(record.get("path_id", record.get("scan", "r2r")))
    return Episode(
        graph=graph,
        start_id=path[0],
        goal_id=path[-1],
        instruction=str(instructions[instruction_index]),
        success_radius=success_radius,
        max_steps=max_steps,
        heading=float(record.get("heading", 0.0)),
        episode_id=f"{base_id}_{instruction_index}",
        extras={"scan": record.get("scan"), "reference_path": path},
    )
