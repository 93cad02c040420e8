"""Ego-centric semantic map: per-object headings from panorama boxes, rendered as text."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

DEFAULT_VIEWS = 8
DEFAULT_PANORAMA = (2048, 512)
DEDUP_IOU = 0.5
EMPTY_MAP_TEXT = "no objects detected"

BBox = tuple[float, float, float, float]


class MapError(ValueError):
    pass


class IncompleteInputError(MapError):
    pass


@dataclass(frozen=True)
class Detection:
    """One detector hit; ``bbox`` is already in panorama pixel coordinates."""

    bbox: BBox
    category: str
    view_index: int = 0

    def validate(self, width: float, height: float, views: int | None = None) -> None:
        x1, y1, x2, y2 = self.bbox
        if not all(math.isfinite(c) for c in self.bbox):
            raise MapError(f"non-finite bbox {self.bbox}")
        if x1 > x2 or y1 > y2:
            raise MapError(f"inverted bbox {self.bbox}")
        # boxes straddling the seam keep x1 inside the panorama and spill x2 past it
        if x1 < 0 or y1 < 0 or x1 > width or x2 > 2 * width or y2 > height:
            raise MapError(f"bbox {self.bbox} outside panorama {width}x{height}")
        if views is not None and not 0 <= self.view_index < views:
            raise MapError(f"view_index {self.view_index} outside [0, {views})")

    def to_dict(self, depth: float | None = None) -> dict:
        out = {"view": self.view_index, "bbox": list(self.bbox), "category": self.category}
        if depth is not None:
            out["depth"] = depth
        return out


@dataclass(frozen=True)
class SemanticEntry:
    heading: float
    category: str
    bbox: BBox
    depth: float

    def __post_init__(self) -> None:
        if not -math.pi <= self.heading <= math.pi:
            raise MapError(f"heading {self.heading} outside [-pi, pi]")
        if not (math.isfinite(self.depth) and self.depth > 0):
            raise MapError(f"depth must be positive and finite, got {self.depth}")

    def sort_key(self) -> tuple:
        return (self.heading, self.category, self.depth, self.bbox)


@dataclass(frozen=True)
class SemanticMap:
    timestep: int
    entries: tuple[SemanticEntry, ...] = ()
    panorama_width: int = DEFAULT_PANORAMA[0]
    panorama_height: int = DEFAULT_PANORAMA[1]

    def __len__(self) -> int:
        return len(self.entries)

    def text(self) -> str:
        return render_map_text(self)


def heading_angle(bbox: Sequence[float], panorama_width: float) -> float:
    """Heading of a box centre relative to the panorama centre, in radians.

    Negative is left of centre. Coordinates may run past ``panorama_width``
    (up to twice) for boxes that wrap the seam; the result is clamped to
    [-pi, pi].
    """
    x1, x2 = float(bbox[0]), float(bbox[2])
    f = float(panorama_width)
    if not (math.isfinite(x1) and math.isfinite(x2) and math.isfinite(f)):
        raise MapError("non-finite coordinates")
    if f <= 0:
        raise MapError("panorama width must be positive")
    if x1 < 0 or x2 < 0:
        raise MapError("negative x coordinate")
    if x1 > x2 or x2 > 2 * f:
        raise MapError(f"x-range [{x1}, {x2}] invalid for width {f}")
    h = math.pi * ((x1 + x2 - f) / f)
    return min(math.pi, max(-math.pi, h))


def bbox_center_x(heading: float, panorama_width: float) -> float:
    """Inverse of :func:`heading_angle` for the box centre."""
    return panorama_width * (heading / math.pi + 1.0) / 2.0


def view_to_panorama(
    bbox: Sequence[float],
    view_index: int,
    views: int = DEFAULT_VIEWS,
    panorama_width: float = DEFAULT_PANORAMA[0],
    overlap: float = 0.25,
) -> BBox:
    """Translate a box from view-local pixels to panorama pixels.

    View ``k`` is centred on ``(k + 0.5) * W / K`` and spans
    ``(1 + overlap) * W / K`` pixels, so neighbouring views share a margin.
    The result is wrapped into the panorama and may extend to ``2 W`` when
    a box straddles the seam.
    """
    step = panorama_width / views
    span = step * (1.0 + overlap)
    left = (view_index + 0.5) * step - span / 2.0
    x1 = (bbox[0] + left) % panorama_width
    x2 = x1 + (bbox[2] - bbox[0])
    return (x1, float(bbox[1]), x2, float(bbox[3]))


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    if union <= 0:
        # two degenerate boxes: identical ones count as a full match
        return 1.0 if tuple(a) == tuple(b) else 0.0
    return inter / union


def build_semantic_map(
    detections: Sequence[Detection],
    depths: Mapping[int, float],
    panorama: tuple[int, int] = DEFAULT_PANORAMA,
    timestep: int = 0,
    iou_threshold: float = DEDUP_IOU,
) -> SemanticMap:
    """Merge per-view detections into one map.

    Detections are reduced in view order; a detection of the same category
    overlapping an earlier one by more than ``iou_threshold`` is treated as
    the same object seen from two views and only the nearer copy is kept.
    """
    width, height = panorama
    indexed = []
    for i, det in enumerate(detections):
        if i not in depths:
            raise IncompleteInputError(f"no depth for detection {i}")
        d = float(depths[i])
        if not (math.isfinite(d) and d > 0):
            raise MapError(f"depth for detection {i} must be positive, got {d}")
        det.validate(width, height)
        indexed.append((det.view_index, i, det, d))
    indexed.sort(key=lambda t: (t[0], t[1]))

    kept: list[tuple[Detection, float]] = []
    for _, _, det, d in indexed:
        for j, (other, od) in enumerate(kept):
            if other.category == det.category and iou(other.bbox, det.bbox) > iou_threshold:
                if d < od:
                    kept[j] = (det, d)
                break
        else:
            kept.append((det, d))

    entries = [
        SemanticEntry(heading_angle(det.bbox, width), det.category, tuple(det.bbox), d)
        for det, d in kept
    ]
    entries.sort(key=SemanticEntry.sort_key)
    return SemanticMap(timestep, tuple(entries), width, height)


def _fmt_bbox(bbox: Sequence[float]) -> str:
    return "[" + ",".join(str(int(round(c))) for c in bbox) + "]"


def render_entry(entry: SemanticEntry) -> str:
    degrees = round(math.degrees(entry.heading), 1)
    if degrees == 0:
        direction = "straight ahead"
    elif degrees < 0:
        direction = f"turn left {abs(degrees):.1f} degrees"
    else:
        direction = f"turn right {degrees:.1f} degrees"
    return f"{direction}, {entry.category} (bounding box {_fmt_bbox(entry.bbox)}) at {entry.depth:.1f} meters"


def render_map_text(smap: SemanticMap) -> str:
    if not smap.entries:
        return EMPTY_MAP_TEXT
    return "\n".join(render_entry(e) for e in smap.entries)


_LINE = re.compile(
    r"^(?:(?P<straight>straight ahead)|turn (?P<side>left|right) (?P<deg>\d+(?:\.\d)?) degrees), "
    r"(?P<cat>.+) \(bounding box \[(?P<box>[-\d,]+)\]\) at (?P<depth>\d+(?:\.\d)?) meters$"
)


@dataclass(frozen=True)
class ParsedEntry:
    degrees: float
    category: str
    bbox: tuple[int, int, int, int]
    depth: float


def parse_map_text(text: str) -> list[ParsedEntry]:
    """Recover rounded entries from :func:`render_map_text` output."""
    if text.strip() in ("", EMPTY_MAP_TEXT):
        return []
    out = []
    for line in text.splitlines():
        m = _LINE.match(line)
        if m is None:
            raise MapError(f"unparseable map line: {line!r}")
        if m["straight"]:
            deg = 0.0
        else:
            deg = float(m["deg"]) * (-1 if m["side"] == "left" else 1)
        box = tuple(int(c) for c in m["box"].split(","))
        out.append(ParsedEntry(deg, m["cat"], box, float(m["depth"])))
    return out


@dataclass
class MapBuildInput:
    """Detection JSON records (``{view, bbox, category, depth}``) split into builder inputs."""

    detections: list[Detection] = field(default_factory=list)
    depths: dict[int, float] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: Sequence[Mapping]) -> MapBuildInput:
        out = cls()
        for i, r in enumerate(records):
            out.detections.append(
                Detection(tuple(float(c) for c in r["bbox"]), str(r["category"]), int(r.get("view", 0)))
            )
            if "depth" in r:
                out.depths[i] = float(r["depth"])
        return out

    def to_records(self) -> list[dict]:
        return [d.to_dict(self.depths.get(i)) for i, d in enumerate(self.detections)]
