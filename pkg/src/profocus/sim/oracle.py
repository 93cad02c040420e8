"""Ground-truth scanner and scripted agents for simulated worlds.

None of these ever fail or touch the network. Their rules:

* the scanner reports every object visible from the waypoint, boxed so that
  the heading formula recovers the true bearing;
* the orchestrator asks about instruction landmarks it has not asked about
  yet, visible ones first, and is satisfied once every landmark noun has
  been asked about;
* semantic value is ``1 - d(u, goal) / diameter`` unless the world overrides
  it (decoy branches, gated junctions);
* the perceiver describes the objects whose boxes touch the focus region;
* the decider stops inside the success radius, otherwise takes the
  best-scored candidate.
"""

from __future__ import annotations

import math
import re
from typing import Mapping, Sequence

from ..agents import STOP, AgentBackends, Observation
from ..mcts import ScoredCandidate, rank_key
from ..memory import MemoryBank, MultimodalContext
from ..navgraph import diameter, distances_from, euclidean
from ..perception import NO_OBJECTS_ANSWER, QueryHistory, Sufficiency, VisualQuery
from ..semantic_map import DEFAULT_PANORAMA, Detection, bbox_center_x, parse_map_text
from .world import SceneObject, WorldSpec

VIEW_OVERLAP = 0.25
FOCUS_INFLATION = 0.2
MIN_FOCUS_PAD = 2.0


def wrap_angle(a: float) -> float:
    """Wrap to [-pi, pi)."""
    return (a + math.pi) % (2 * math.pi) - math.pi


def relative_bearing(at: Sequence[float], target: Sequence[float], heading: float) -> float:
    """Bearing of ``target`` seen from ``at``, clockwise from ``heading``; positive is right."""
    absolute = math.atan2(target[0] - at[0], target[1] - at[1])
    return wrap_angle(absolute - heading)


def object_bbox(
    obj: SceneObject, at: Sequence[float], heading: float, panorama: tuple[int, int]
) -> tuple[tuple[float, float, float, float], float, float]:
    """Panorama box, true bearing and depth of ``obj`` seen from ``at``."""
    width, height = panorama
    bearing = relative_bearing(at, obj.position, heading)
    depth = euclidean(at, obj.position)
    cx = bbox_center_x(bearing, width)
    angular = 2.0 * math.atan2(obj.size / 2.0, depth)
    half = max(1.0, width * angular / (2 * math.pi) / 2.0)
    # keep the box symmetric about cx so the heading is recovered exactly
    half = min(half, cx, width - cx)
    half_h = min(height / 4.0, max(4.0, half * 1.2))
    cy = height / 2.0 - (obj.position[2] - at[2]) / max(depth, 1e-6) * height / math.pi
    cy = min(height - half_h, max(half_h, cy))
    return (cx - half, cy - half_h, cx + half, cy + half_h), bearing, depth


def views_containing(cx: float, views: int, width: float, overlap: float = VIEW_OVERLAP) -> list[int]:
    step = width / views
    reach = step * (1.0 + overlap) / 2.0
    out = []
    for k in range(views):
        centre = (k + 0.5) * step
        gap = abs(cx - centre)
        gap = min(gap, width - gap)
        if gap <= reach:
            out.append(k)
    return out


def _boxes_touch(a: Sequence[float], b: Sequence[float]) -> bool:
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]


def inflate(bbox: Sequence[float], panorama: tuple[int, int], factor: float = FOCUS_INFLATION) -> tuple[float, ...]:
    width, height = panorama
    pad_x = max(MIN_FOCUS_PAD, (bbox[2] - bbox[0]) * factor / 2.0)
    pad_y = max(MIN_FOCUS_PAD, (bbox[3] - bbox[1]) * factor / 2.0)
    return (
        max(0.0, bbox[0] - pad_x),
        max(0.0, bbox[1] - pad_y),
        min(float(width), bbox[2] + pad_x),
        min(float(height), bbox[3] + pad_y),
    )


class OracleWorld:
    """Shared ground truth for the oracle agents of one world."""

    def __init__(self, world: WorldSpec):
        self.world = world
        self.graph = world.graph
        self.to_goal = distances_from(world.graph, world.goal_id)
        self.norm = diameter(world.graph) or 1.0
        self._traps = {w: t for t in world.traps for w in t.depths}
        self._gates = {g.waypoint: g for g in world.gates}

    def visible(self, at: str) -> list[SceneObject]:
        return [o for o in self.world.objects if at in o.visible_from]

    def observe(self, at: str, heading: float, panorama: tuple[int, int]):
        pos = self.graph.position(at)
        return [(o, *object_bbox(o, pos, heading, panorama)) for o in self.visible(at)]

    def base_value(self, wid: str) -> float:
        d = self.to_goal.get(wid)
        if d is None:
            return 0.0
        return min(1.0, max(0.0, 1.0 - d / self.norm))

    def value(self, wid: str, answers: Sequence[str]) -> float:
        if wid in self._traps:
            return self._traps[wid].value(wid)
        gate = self._gates.get(wid)
        if gate is not None:
            phrase = self.world.object(gate.landmark).phrase()
            if not any(phrase in a for a in answers):
                return gate.passive_value
        return self.base_value(wid)


class OracleScanner:
    def __init__(self, truth: OracleWorld):
        self.truth = truth

    def scan(self, at, heading, views, panorama):
        detections: list[Detection] = []
        depths: dict[int, float] = {}
        for obj, bbox, _, depth in self.truth.observe(at, heading, panorama):
            cx = (bbox[0] + bbox[2]) / 2.0
            for k in views_containing(cx, views, panorama[0]) or [0]:
                depths[len(detections)] = depth
                detections.append(Detection(bbox, obj.category, k))
        return detections, depths


_NOUN_Q = "What does the {noun} look like, and what is next to it?"
_SEARCH_Q = "Is there a {noun} anywhere in view? Describe it."


class OracleOrchestrator:
    def __init__(self, truth: OracleWorld, panorama: tuple[int, int] = DEFAULT_PANORAMA):
        self.truth = truth
        self.panorama = panorama
        nouns: list[str] = []
        for obj in truth.world.landmarks():
            if obj.category not in nouns:
                nouns.append(obj.category)
        self.nouns = nouns

    @staticmethod
    def _asked(noun: str, history: QueryHistory) -> bool:
        pat = re.compile(rf"\b{re.escape(noun)}\b")
        return any(pat.search(q) for q in history.questions)

    def uncovered(self, history: QueryHistory) -> list[str]:
        return [n for n in self.nouns if not self._asked(n, history)]

    def generate_query(self, map_text, trajectory, instruction, history):
        entries = parse_map_text(map_text)
        whole = (0.0, 0.0, float(self.panorama[0]), float(self.panorama[1]))
        pending = self.uncovered(history)
        visible = [n for n in pending if any(e.category == n for e in entries)]
        if visible:
            noun = visible[0]
            boxes = [e.bbox for e in entries if e.category == noun]
            union = (min(b[0] for b in boxes), min(b[1] for b in boxes),
                     max(b[2] for b in boxes), max(b[3] for b in boxes))
            return VisualQuery(_NOUN_Q.format(noun=noun), inflate(union, self.panorama))
        if pending:
            return VisualQuery(_SEARCH_Q.format(noun=pending[0]), whole)
        # no landmark left: look at whatever is closest and not yet asked about
        for e in sorted(entries, key=lambda e: (e.depth, e.category)):
            q = _NOUN_Q.format(noun=e.category)
            if q not in history.questions:
                return VisualQuery(q, inflate(e.bbox, self.panorama))
        return VisualQuery(f"Describe the surroundings (look {len(history) + 1}).", whole)

    def check_sufficiency(self, map_text, history, instruction):
        if not history:
            return Sufficiency.INSUFFICIENT
        return Sufficiency.SUFFICIENT if not self.uncovered(history) else Sufficiency.INSUFFICIENT

    def evaluate_values(self, instruction, trajectory, answers, candidates):
        return {c: self.truth.value(c, answers) for c in candidates}


def describe(obj: SceneObject, bearing: float, others: Sequence[tuple[SceneObject, float]]) -> str:
    text = f"a {obj.phrase()}"
    state = obj.attributes.get("state")
    if state:
        text += f", {state}"
    nearest = min(
        ((abs(wrap_angle(b - bearing)), o.category, wrap_angle(b - bearing)) for o, b in others if o.id != obj.id),
        default=None,
    )
    if nearest is not None:
        side = "to the left of" if nearest[2] > 0 else "to the right of"
        text += f", {side} a {nearest[1]}"
    return text


class OraclePerceiver:
    def __init__(self, truth: OracleWorld):
        self.truth = truth

    def perceive(self, observation: Observation, query: VisualQuery) -> str:
        seen = self.truth.observe(
            observation.waypoint_id, observation.heading, (observation.width, observation.height)
        )
        bearings = [(o, b) for o, _, b, _ in seen]
        hits = sorted(
            ((b, o) for o, box, b, _ in seen if _boxes_touch(box, query.focus_region)),
            key=lambda t: (t[0], t[1].id),
        )
        if not hits:
            return NO_OBJECTS_ANSWER
        return "; ".join(describe(o, b, bearings) for b, o in hits)


class OracleDecider:
    def __init__(self, truth: OracleWorld, success_radius: float | None = None):
        self.truth = truth
        self.radius = truth.world.success_radius if success_radius is None else success_radius

    def decide(
        self,
        candidates: Sequence[ScoredCandidate],
        context: MultimodalContext,
        memory: MemoryBank,
        paths: Mapping[str, Sequence[str]] | None = None,
    ) -> str:
        d = self.truth.to_goal.get(context.waypoint_id, math.inf)
        if d <= self.radius or not candidates:
            return STOP
        return min(candidates, key=rank_key).waypoint_id


def oracle_scan(world: WorldSpec, at: str, views: int = 8, panorama: tuple[int, int] = DEFAULT_PANORAMA,
                heading: float = 0.0) -> tuple[list[Detection], dict[int, float]]:
    return OracleScanner(OracleWorld(world)).scan(at, heading, views, panorama)


def oracle_backends(world: WorldSpec, panorama: tuple[int, int] = DEFAULT_PANORAMA) -> AgentBackends:
    truth = OracleWorld(world)
    return AgentBackends(
        orchestrator=OracleOrchestrator(truth, panorama),
        perceiver=OraclePerceiver(truth),
        decider=OracleDecider(truth),
        scanner=OracleScanner(truth),
    )
