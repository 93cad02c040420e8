"""Seeded synthetic worlds: navigation graphs populated with attributed objects."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from ..navgraph import (
    DEFAULT_MAX_STEPS,
    DEFAULT_SUCCESS_RADIUS,
    Episode,
    NavGraph,
    Waypoint,
    euclidean,
    geodesic_distance,
)

PROFILES = ("corridor", "trap", "landmark", "maze", "r2r-like")

# decoy branches look right for their first two waypoints, then fall off
DECOY_LURE = 0.95
DECOY_DECAY = 0.3
DECOY_DECAY_DEPTH = 2
# value a passive observer gives the two branches of a gated junction
GATE_PASSIVE_CORRECT = 0.2
GATE_PASSIVE_WRONG = 0.9

VISIBILITY_RADIUS = 6.0

CATEGORIES = (
    "sofa", "table", "chair", "lamp", "bench", "clock", "painting", "plant",
    "bed", "cabinet", "rug", "staircase", "sink", "mirror", "shelf", "piano",
    "fireplace", "armchair", "vase", "desk",
)
COLORS = ("brown", "white", "black", "red", "blue", "green", "grey", "yellow", "beige")
MATERIALS = ("wood", "metal", "glass", "fabric", "stone", "leather", "marble")
MATERIAL_ADJECTIVE = {
    "wood": "wooden", "metal": "metal", "glass": "glass", "fabric": "fabric",
    "stone": "stone", "leather": "leather", "marble": "marble",
}
STATES = {"door": ("open", "closed"), "lamp": ("on", "off"), "cabinet": ("open", "closed")}


class WorldError(ValueError):
    pass


@dataclass(frozen=True)
class SceneObject:
    id: str
    category: str
    attributes: Mapping[str, str]
    position: tuple[float, float, float]
    visible_from: frozenset[str]
    size: float = 1.0

    def __post_init__(self) -> None:
        if not self.visible_from:
            raise WorldError(f"object {self.id!r} is visible from nowhere")
        if "color" not in self.attributes:
            raise WorldError(f"object {self.id!r} has no color")

    def phrase(self) -> str:
        """Short attribute description, e.g. ``brown wooden door``."""
        words = [self.attributes["color"]]
        material = self.attributes.get("material")
        if material:
            words.append(MATERIAL_ADJECTIVE.get(material, material))
        words.append(self.category)
        return " ".join(words)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "category": self.category,
            "attributes": dict(sorted(self.attributes.items())),
            "position": list(self.position),
            "visible_from": sorted(self.visible_from),
            "size": self.size,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> SceneObject:
        return cls(
            id=str(d["id"]),
            category=str(d["category"]),
            attributes={str(k): str(v) for k, v in d["attributes"].items()},
            position=tuple(float(c) for c in d["position"]),
            visible_from=frozenset(str(w) for w in d["visible_from"]),
            size=float(d.get("size", 1.0)),
        )


@dataclass(frozen=True)
class Trap:
    """A decoy branch leaving ``junction``; ``depths`` maps decoy waypoints to hop depth."""

    junction: str
    depths: Mapping[str, int]
    lure: float = DECOY_LURE

    def value(self, wid: str) -> float:
        depth = self.depths[wid]
        return self.lure if depth <= DECOY_DECAY_DEPTH else self.lure * DECOY_DECAY


@dataclass(frozen=True)
class Gate:
    """A waypoint whose value is only knowable after looking closely at ``landmark``."""

    waypoint: str
    landmark: str
    passive_value: float


@dataclass
class WorldSpec:
    profile: str
    seed: int
    graph: NavGraph
    objects: list[SceneObject]
    instruction: str
    landmark_ids: list[str]
    start_id: str
    goal_id: str
    heading: float = 0.0
    success_radius: float = DEFAULT_SUCCESS_RADIUS
    max_steps: int = DEFAULT_MAX_STEPS
    traps: list[Trap] = field(default_factory=list)
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = {o.id for o in self.objects}
        missing = [lm for lm in self.landmark_ids if lm not in ids]
        if missing:
            raise WorldError(f"landmarks {missing} are not objects")
        if geodesic_distance(self.graph, self.start_id, self.goal_id) is None:
            raise WorldError("goal unreachable")

    @property
    def episode_id(self) -> str:
        return f"{self.profile}-{self.seed}"

    def object(self, oid: str) -> SceneObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    def landmarks(self) -> list[SceneObject]:
        return [self.object(i) for i in self.landmark_ids]

    def episode(self) -> Episode:
        return Episode(
            graph=self.graph,
            start_id=self.start_id,
            goal_id=self.goal_id,
            instruction=self.instruction,
            success_radius=self.success_radius,
            max_steps=self.max_steps,
            heading=self.heading,
            episode_id=self.episode_id,
        )

    def to_dict(self) -> dict[str, Any]:
        out = self.episode().to_dict()
        out.update(
            profile=self.profile,
            seed=self.seed,
            objects=[o.to_dict() for o in self.objects],
            landmarks=list(self.landmark_ids),
            traps=[
                {"junction": t.junction, "depths": dict(sorted(t.depths.items())), "lure": t.lure}
                for t in self.traps
            ],
            gates=[
                {"waypoint": g.waypoint, "landmark": g.landmark, "passive_value": g.passive_value}
                for g in self.gates
            ],
        )
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> WorldSpec:
        return cls(
            profile=str(d.get("profile", "custom")),
            seed=int(d.get("seed", 0)),
            graph=NavGraph.from_dict(d),
            objects=[SceneObject.from_dict(o) for o in d.get("objects", [])],
            instruction=str(d.get("instruction", "")),
            landmark_ids=[str(x) for x in d.get("landmarks", [])],
            start_id=str(d["start"]),
            goal_id=str(d["goal"]),
            heading=float(d.get("heading", 0.0)),
            success_radius=float(d.get("success_radius", DEFAULT_SUCCESS_RADIUS)),
            max_steps=int(d.get("max_steps", DEFAULT_MAX_STEPS)),
            traps=[Trap(t["junction"], {k: int(v) for k, v in t["depths"].items()}, float(t.get("lure", DECOY_LURE)))
                   for t in d.get("traps", [])],
            gates=[Gate(g["waypoint"], g["landmark"], float(g["passive_value"])) for g in d.get("gates", [])],
        )


def load_world(path: str | Path) -> WorldSpec:
    with open(path, encoding="utf-8") as fh:
        return WorldSpec.from_dict(json.load(fh))


class _Builder:
    """Accumulates waypoints, edges and objects while a profile lays out a world."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.positions: dict[str, tuple[float, float, float]] = {}
        self.edges: list[tuple[str, str]] = []
        self.objects: list[tuple[str, str, dict[str, str], tuple[float, float, float], float]] = []
        self._used_categories: set[str] = set()
        self._next_obj = 0

    def waypoint(self, wid: str, x: float, y: float) -> str:
        self.positions[wid] = (round(x, 3), round(y, 3), 0.0)
        return wid

    def step(self, wid: str, frm: str, bearing: float, length: float | None = None) -> str:
        if length is None:
            length = self.rng.uniform(3.6, 5.0)
        x, y, _ = self.positions[frm]
        # bearings are clockwise from +y
        self.waypoint(wid, x + length * math.sin(bearing), y + length * math.cos(bearing))
        self.edges.append((frm, wid))
        return wid

    def chain(
        self, prefix: str, frm: str, n: int, bearing: float, jitter: float = 0.3, first: float | None = None
    ) -> list[str]:
        out = []
        node = frm
        for i in range(n):
            b = bearing + self.rng.uniform(-jitter, jitter)
            node = self.step(f"{prefix}{i}", node, b, first if i == 0 else None)
            out.append(node)
        return out

    def fresh_category(self) -> str:
        choices = [c for c in CATEGORIES if c not in self._used_categories]
        cat = self.rng.choice(choices)
        self._used_categories.add(cat)
        return cat

    def attributes(self, category: str) -> dict[str, str]:
        attrs = {"color": self.rng.choice(COLORS), "material": self.rng.choice(MATERIALS)}
        if category in STATES:
            attrs["state"] = self.rng.choice(STATES[category])
        return attrs

    def place(
        self,
        anchor: str,
        category: str | None = None,
        attributes: dict[str, str] | None = None,
        bearing: float | None = None,
        distance: float | None = None,
    ) -> str:
        category = category or self.fresh_category()
        self._used_categories.add(category)
        attributes = attributes or self.attributes(category)
        if bearing is None:
            bearing = self.rng.uniform(-math.pi, math.pi)
        if distance is None:
            distance = self.rng.uniform(1.2, 2.5)
        x, y, _ = self.positions[anchor]
        pos = (
            round(x + distance * math.sin(bearing), 3),
            round(y + distance * math.cos(bearing), 3),
            round(self.rng.uniform(0.3, 1.4), 3),
        )
        oid = f"obj{self._next_obj:02d}"
        self._next_obj += 1
        self.objects.append((oid, category, attributes, pos, round(self.rng.uniform(0.6, 1.8), 3)))
        return oid

    def build(self, objects_anchor: Mapping[str, str] | None = None) -> tuple[NavGraph, list[SceneObject]]:
        graph = NavGraph([Waypoint(w, p) for w, p in self.positions.items()], self.edges)
        anchor = dict(objects_anchor or {})
        objs = []
        for oid, cat, attrs, pos, size in self.objects:
            vis = {w for w, p in self.positions.items() if euclidean(p[:2], pos[:2]) <= VISIBILITY_RADIUS}
            if oid in anchor:
                vis.add(anchor[oid])
            if not vis:
                vis.add(min(self.positions, key=lambda w: euclidean(self.positions[w][:2], pos[:2])))
            objs.append(SceneObject(oid, cat, attrs, pos, frozenset(vis), size))
        return graph, objs


def _bearing(graph_positions: Mapping[str, Sequence[float]], a: str, b: str) -> float:
    pa, pb = graph_positions[a], graph_positions[b]
    return math.atan2(pb[0] - pa[0], pb[1] - pa[1])


def _corridor(rng: random.Random, b: _Builder) -> dict[str, Any]:
    heading = rng.uniform(-math.pi, math.pi)
    start = b.waypoint("w00", 0.0, 0.0)
    nodes = [start]
    for i in range(1, 8):
        nodes.append(b.step(f"w{i:02d}", nodes[-1], heading + rng.uniform(-0.35, 0.35)))
    lm = [b.place(nodes[2]), b.place(nodes[4]), b.place(nodes[7])]
    for _ in range(rng.randint(2, 4)):
        b.place(rng.choice(nodes))
    cats = [b.objects[int(o[3:])][1] for o in lm]
    instruction = (
        f"Walk down the hallway past the {cats[0]}, continue past the {cats[1]} "
        f"and stop next to the {cats[2]}."
    )
    return dict(start=start, goal=nodes[7], landmarks=lm, instruction=instruction,
                heading=_bearing(b.positions, nodes[0], nodes[1]))


def _trap(rng: random.Random, b: _Builder) -> dict[str, Any]:
    heading = rng.uniform(-math.pi, math.pi)
    start = b.waypoint("s0", 0.0, 0.0)
    trunk = [start] + b.chain("t", start, rng.randint(2, 3), heading)
    junction = trunk[-1]
    side = rng.choice((-1.0, 1.0))
    true_arm = b.chain("a", junction, rng.randint(3, 4), heading + side * 1.0)
    decoy = b.chain("d", junction, rng.randint(3, 5), heading - side * 1.0)
    lm = [b.place(trunk[1]), b.place(true_arm[0]), b.place(true_arm[-1])]
    # the decoy arm looks like a plausible room
    b.place(decoy[1], category="bed")
    b.place(decoy[-1])
    for _ in range(rng.randint(1, 3)):
        b.place(rng.choice(trunk))
    cats = [b.objects[int(o[3:])][1] for o in lm]
    instruction = (
        f"Go past the {cats[0]}, take the hallway toward the {cats[1]} "
        f"and stop next to the {cats[2]}."
    )
    trap = Trap(junction, {w: i + 1 for i, w in enumerate(decoy)})
    return dict(start=start, goal=true_arm[-1], landmarks=lm, instruction=instruction,
                heading=_bearing(b.positions, trunk[0], trunk[1]), traps=[trap])


def _landmark(rng: random.Random, b: _Builder) -> dict[str, Any]:
    heading = rng.uniform(-math.pi, math.pi)
    start = b.waypoint("s0", 0.0, 0.0)
    trunk = [start] + b.chain("t", start, rng.randint(2, 3), heading)
    junction = trunk[-1]
    side = rng.choice((-1.0, 1.0))
    # equal first hops so only the semantic values separate the two branches
    hop = rng.uniform(3.8, 4.6)
    correct = b.chain("c", junction, rng.randint(3, 4), heading + side * 0.9, first=hop)
    wrong = b.chain("r", junction, 2, heading - side * 0.9, first=hop)
    colors = rng.sample(COLORS, 2)
    materials = rng.sample(MATERIALS, 2)
    good_door = b.place(
        correct[0], "door", {"color": colors[0], "material": materials[0], "state": "open"},
        bearing=_bearing(b.positions, correct[0], junction), distance=1.5,
    )
    bad_door = b.place(
        wrong[0], "door", {"color": colors[1], "material": materials[1], "state": "open"},
        bearing=_bearing(b.positions, wrong[0], junction), distance=1.5,
    )
    lm = [b.place(trunk[1]), good_door, b.place(correct[-1])]
    for _ in range(rng.randint(1, 2)):
        b.place(rng.choice(trunk))
    cats = [b.objects[int(o[3:])][1] for o in lm]
    door = b.objects[int(good_door[3:])]
    phrase = f"{door[2]['color']} {MATERIAL_ADJECTIVE[door[2]['material']]} door"
    instruction = (
        f"Walk past the {cats[0]}, go through the {phrase} "
        f"and stop next to the {cats[2]}."
    )
    gates = [
        Gate(correct[0], good_door, GATE_PASSIVE_CORRECT),
        Gate(wrong[0], bad_door, GATE_PASSIVE_WRONG),
    ]
    return dict(start=start, goal=correct[-1], landmarks=lm, instruction=instruction,
                heading=_bearing(b.positions, trunk[0], trunk[1]), gates=gates,
                anchors={good_door: junction, bad_door: junction})


def _grid_like(rng: random.Random, b: _Builder, rows: int, cols: int, extra: int, jitter: float) -> dict[str, Any]:
    spacing = 4.5
    ids = {}
    for r in range(rows):
        for c in range(cols):
            ids[r, c] = b.waypoint(
                f"m{r}{c}", c * spacing + rng.uniform(-jitter, jitter), r * spacing + rng.uniform(-jitter, jitter)
            )
    cells = list(ids)
    # random spanning tree (randomised DFS), then a few cycle-closing edges
    seen = {cells[0]}
    stack = [cells[0]]
    tree_edges = set()
    while stack:
        r, c = stack[-1]
        nbrs = [(r + dr, c + dc) for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0))
                if (r + dr, c + dc) in ids and (r + dr, c + dc) not in seen]
        if not nbrs:
            stack.pop()
            continue
        nxt = rng.choice(nbrs)
        seen.add(nxt)
        tree_edges.add(tuple(sorted((ids[r, c], ids[nxt]))))
        stack.append(nxt)
    all_edges = {tuple(sorted((ids[r, c], ids[r + dr, c + dc])))
                 for (r, c) in cells for dr, dc in ((0, 1), (1, 0)) if (r + dr, c + dc) in ids}
    spare = sorted(all_edges - tree_edges)
    rng.shuffle(spare)
    b.edges.extend(sorted(tree_edges) + spare[:extra])
    graph = NavGraph([Waypoint(w, p) for w, p in b.positions.items()], b.edges)
    start = ids[0, 0]
    dist = {w: geodesic_distance(graph, start, w) for w in graph.ids}
    goal = max(graph.ids, key=lambda w: (dist[w], w))
    return dict(start=start, goal=goal, graph=graph)


def _maze(rng: random.Random, b: _Builder) -> dict[str, Any]:
    rows, cols = rng.choice(((3, 4), (4, 4), (4, 5)))
    layout = _grid_like(rng, b, rows, cols, extra=rng.randint(1, 3), jitter=0.4)
    return _with_landmarks(rng, b, layout, "Find your way through the rooms past the {0}, then the {1}, and stop at the {2}.")


def _r2r_like(rng: random.Random, b: _Builder) -> dict[str, Any]:
    rows, cols = rng.choice(((3, 5), (4, 4), (4, 5)))
    layout = _grid_like(rng, b, rows, cols, extra=rng.randint(3, 6), jitter=1.2)
    return _with_landmarks(
        rng, b, layout,
        "Exit the room and walk past the {0}. Turn at the {1} and wait by the {2}.",
    )


def _with_landmarks(rng: random.Random, b: _Builder, layout: dict[str, Any], template: str) -> dict[str, Any]:
    from ..navgraph import shortest_path

    graph, start, goal = layout["graph"], layout["start"], layout["goal"]
    route = shortest_path(graph, start, goal)
    picks = [route[len(route) // 3], route[(2 * len(route)) // 3], goal]
    lm = [b.place(p) for p in picks]
    for _ in range(rng.randint(2, 5)):
        b.place(rng.choice(graph.ids))
    cats = [b.objects[int(o[3:])][1] for o in lm]
    return dict(start=start, goal=goal, landmarks=lm, instruction=template.format(*cats),
                heading=_bearing(b.positions, route[0], route[1]) if len(route) > 1 else 0.0)


_GENERATORS = {
    "corridor": _corridor,
    "trap": _trap,
    "landmark": _landmark,
    "maze": _maze,
    "r2r-like": _r2r_like,
}


def generate_world(seed: int, profile: str = "corridor") -> WorldSpec:
    """Build the world for ``(seed, profile)``; a pure function of its arguments."""
    try:
        gen = _GENERATORS[profile]
    except KeyError:
        raise WorldError(f"unknown profile {profile!r}; expected one of {PROFILES}") from None
    rng = random.Random(f"{profile}:{seed}")
    b = _Builder(rng)
    spec = gen(rng, b)
    graph, objects = b.build(spec.get("anchors"))
    return WorldSpec(
        profile=profile,
        seed=seed,
        graph=graph,
        objects=objects,
        instruction=spec["instruction"],
        landmark_ids=spec["landmarks"],
        start_id=spec["start"],
        goal_id=spec["goal"],
        heading=round(spec.get("heading", 0.0), 6),
        traps=spec.get("traps", []),
        gates=spec.get("gates", []),
    )
