"""Branch-diverse Monte Carlo tree search over discovered waypoints.

Rollouts are replaced by semantic values: a newly discovered waypoint starts
with its semantic value as Q and zero visits, the reward of a step is the
mean value of what it discovered, and that reward is averaged into every
node on the root-to-current path. Candidate selection ranks leaves by a
visit-weighted path value minus a normalised distance penalty and caps how
many leaves any one parent may contribute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Collection, Iterable, Mapping, Sequence

from .navgraph import NavGraph, distances_from, geodesic_distance

DEFAULT_LAMBDA = 0.3
DEFAULT_TOP_K = 5
MAX_CHILDREN_PER_PARENT = 2
VISIT_SMOOTHING = 1.0
ROOT_PRIOR = 0.5


class TreeError(RuntimeError):
    pass


@dataclass
class TreeNode:
    waypoint_id: str
    parent: str | None
    q_value: float
    visit_count: int = 0
    prior: float = 0.0
    children: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class ScoredCandidate:
    waypoint_id: str
    path_value: float
    distance: float
    score: float
    parent: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.waypoint_id, "v_path": self.path_value, "dist": self.distance, "score": self.score}


class SearchTree:
    """Search tree over waypoints; each waypoint appears at most once."""

    def __init__(self, root: str, root_value: float = ROOT_PRIOR, prior_visit: int = 0):
        if prior_visit < 0:
            raise ValueError("prior_visit must be non-negative")
        self.root = root
        self.prior_visit = prior_visit
        self.nodes: dict[str, TreeNode] = {root: TreeNode(root, None, root_value, 0, root_value)}

    def __contains__(self, wid: object) -> bool:
        return wid in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, wid: str) -> TreeNode:
        try:
            return self.nodes[wid]
        except KeyError:
            raise TreeError(f"{wid!r} is not in the search tree") from None

    def q(self, wid: str) -> float:
        return self.node(wid).q_value

    def n(self, wid: str) -> int:
        return self.node(wid).visit_count

    def path(self, wid: str) -> list[str]:
        """Root-to-``wid`` path."""
        out = [wid]
        node = self.node(wid)
        while node.parent is not None:
            out.append(node.parent)
            node = self.nodes[node.parent]
        out.reverse()
        return out

    def leaves(self) -> list[str]:
        return sorted(wid for wid, node in self.nodes.items() if not node.children)

    def expand(self, current: str, candidates: Iterable[str], values: Mapping[str, float]) -> list[str]:
        """Attach unseen candidates under ``current``; waypoints already in the tree are skipped."""
        self.node(current)
        added = []
        for wid in candidates:
            if wid in self.nodes:
                continue
            if wid not in values:
                raise TreeError(f"no semantic value for candidate {wid!r}")
            v = float(values[wid])
            self.nodes[wid] = TreeNode(wid, current, v, self.prior_visit, v)
            self.nodes[current].children.append(wid)
            added.append(wid)
        return added

    def backpropagate(self, current: str, reward: float) -> None:
        for wid in self.path(current):
            node = self.nodes[wid]
            node.visit_count += 1
            node.q_value += (reward - node.q_value) / node.visit_count

    def path_value(self, leaf: str) -> float:
        """Visit-weighted mean of Q along the root-to-``leaf`` path.

        Each node weighs ``N + 1`` so unvisited leaves still count.
        """
        path = self.path(leaf)
        weights = [self.nodes[w].visit_count + VISIT_SMOOTHING for w in path]
        total = sum(weights)
        return sum(wt * self.nodes[w].q_value for wt, w in zip(weights, path)) / total

    def snapshot(self) -> list[dict[str, Any]]:
        return [
            {"id": wid, "parent": node.parent, "q": node.q_value, "n": node.visit_count}
            for wid, node in sorted(self.nodes.items())
        ]

    def check(self) -> None:
        """Raise :class:`TreeError` unless parent/child links form a single tree."""
        if self.nodes[self.root].parent is not None:
            raise TreeError("root has a parent")
        edges = 0
        for wid, node in self.nodes.items():
            if len(set(node.children)) != len(node.children):
                raise TreeError(f"duplicate children under {wid!r}")
            for c in node.children:
                if c not in self.nodes or self.nodes[c].parent != wid:
                    raise TreeError(f"inconsistent link {wid!r} -> {c!r}")
            edges += len(node.children)
            if wid != self.root and (node.parent is None or wid not in self.nodes[node.parent].children):
                raise TreeError(f"{wid!r} is detached")
        seen: set[str] = set()
        stack = [self.root]
        while stack:
            wid = stack.pop()
            if wid in seen:
                raise TreeError(f"cycle through {wid!r}")
            seen.add(wid)
            stack.extend(self.nodes[wid].children)
        if len(seen) != len(self.nodes) or edges != len(self.nodes) - 1:
            raise TreeError("tree is not connected")


def compute_reward(tree: SearchTree, current: str, added: Sequence[str], values: Mapping[str, float]) -> float:
    if added:
        return sum(values[w] for w in added) / len(added)
    return tree.q(current)


def expand(tree: SearchTree, current: str, new_candidates: Iterable[str], values: Mapping[str, float]) -> list[str]:
    return tree.expand(current, new_candidates, values)


def backpropagate(tree: SearchTree, current: str, reward: float) -> None:
    tree.backpropagate(current, reward)


def path_value(tree: SearchTree, leaf: str) -> float:
    return tree.path_value(leaf)


def _score(v_path: float, distance: float, lam: float, max_dist: float) -> float:
    if max_dist <= 0:
        return v_path
    return v_path - lam * distance / max_dist


def score_leaf(
    tree: SearchTree, graph: NavGraph, current: str, leaf: str, lam: float, max_dist: float
) -> ScoredCandidate:
    if max_dist < 0:
        raise ValueError("max_dist must be non-negative")
    d = geodesic_distance(graph, current, leaf)
    if d is None:
        raise TreeError(f"leaf {leaf!r} is unreachable from {current!r}")
    v = tree.path_value(leaf)
    return ScoredCandidate(leaf, v, d, _score(v, d, lam, max_dist), tree.node(leaf).parent)


def rank_key(c: ScoredCandidate) -> tuple:
    return (-c.score, -c.path_value, c.waypoint_id)


def select_top_k(
    tree: SearchTree,
    graph: NavGraph,
    current: str,
    k: int = DEFAULT_TOP_K,
    lam: float = DEFAULT_LAMBDA,
    max_children_per_parent: int = MAX_CHILDREN_PER_PARENT,
    exclude: Collection[str] = (),
) -> list[ScoredCandidate]:
    """Diversity-capped top-``k`` leaves by distance-penalised path value.

    Leaves unreachable from ``current`` in ``graph`` are dropped before
    scoring. The distance normaliser is the largest distance to any
    reachable leaf. ``current`` and anything in ``exclude`` are never
    returned.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    dist = distances_from(graph, current) if current in graph else {}
    reachable = [leaf for leaf in tree.leaves() if leaf in dist]
    if not reachable:
        return []
    max_dist = max(dist[leaf] for leaf in reachable)
    skip = set(exclude) | {current}
    scored = []
    for leaf in reachable:
        if leaf in skip:
            continue
        v = tree.path_value(leaf)
        scored.append(ScoredCandidate(leaf, v, dist[leaf], _score(v, dist[leaf], lam, max_dist), tree.node(leaf).parent))
    scored.sort(key=rank_key)
    taken: dict[str | None, int] = {}
    out = []
    for cand in scored:
        if len(out) == k:
            break
        if taken.get(cand.parent, 0) >= max_children_per_parent:
            continue
        taken[cand.parent] = taken.get(cand.parent, 0) + 1
        out.append(cand)
    return out
