import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from profocus.semantic_map import (
    EMPTY_MAP_TEXT,
    Detection,
    IncompleteInputError,
    MapBuildInput,
    MapError,
    SemanticEntry,
    SemanticMap,
    bbox_center_x,
    build_semantic_map,
    heading_angle,
    iou,
    parse_map_text,
    render_entry,
    render_map_text,
    view_to_panorama,
)

F = 1024


@pytest.mark.parametrize(
    "x1, x2, expected",
    [(400, 624, 0.0), (0, 0, -math.pi), (256, 512, -math.pi / 4), (1024, 1024, math.pi), (512, 512, 0.0)],
)
def test_heading_examples(x1, x2, expected):
    assert heading_angle((x1, 0, x2, 10), F) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_heading_clamps_wrapped_boxes():
    assert heading_angle((1000, 0, 1200, 10), F) == math.pi


@pytest.mark.parametrize("box", [(-1, 0, 5, 5), (math.nan, 0, 5, 5), (10, 0, 5, 5), (0, 0, 3000, 5)])
def test_heading_rejects_bad_boxes(box):
    with pytest.raises(MapError):
        heading_angle(box, F)


def test_center_inverse():
    assert bbox_center_x(0.0, 2048) == 1024
    assert bbox_center_x(-math.pi / 4, 2048) == 768
    for h in (-3.0, -1.0, 0.3, 2.9):
        cx = bbox_center_x(h, 2048)
        assert heading_angle((cx, 0, cx, 1), 2048) == pytest.approx(h, abs=1e-12)


@given(st.floats(0, F), st.floats(0, F), st.floats(0, F), st.floats(0, F))
def test_heading_monotone_in_center(a1, a2, b1, b2):
    a1, a2 = sorted((a1, a2))
    b1, b2 = sorted((b1, b2))
    assume(a1 + a2 <= b1 + b2)
    assert heading_angle((a1, 0, a2, 1), F) <= heading_angle((b1, 0, b2, 1), F)


@given(st.floats(0, F), st.floats(0, F))
def test_heading_antisymmetric_under_mirror(x1, x2):
    x1, x2 = sorted((x1, x2))
    h = heading_angle((x1, 0, x2, 1), F)
    mirrored = heading_angle((F - x2, 0, F - x1, 1), F)
    assert mirrored == pytest.approx(-h, abs=1e-12)


def test_empty_map():
    smap = build_semantic_map([], {}, (2048, 512))
    assert len(smap) == 0
    assert render_map_text(smap) == EMPTY_MAP_TEXT == "no objects detected"


def test_overlapping_views_deduplicated_to_nearest():
    dets = [Detection((900, 100, 1000, 300), "door", 3), Detection((905, 100, 1005, 300), "door", 4)]
    smap = build_semantic_map(dets, {0: 3.1, 1: 3.0}, (2048, 512))
    assert len(smap) == 1
    assert smap.entries[0].depth == 3.0


def test_different_categories_not_merged():
    dets = [Detection((900, 100, 1000, 300), "door", 3), Detection((900, 100, 1000, 300), "sign", 3)]
    assert len(build_semantic_map(dets, {0: 3.0, 1: 3.0})) == 2


def test_three_detections_three_entries():
    boxes = [(100, 10, 200, 50), (1000, 10, 1048, 50), (1800, 10, 1900, 50)]
    dets = [Detection(b, c, k) for b, c, k in zip(boxes, ("lamp", "sofa", "bed"), (0, 3, 7))]
    smap = build_semantic_map(dets, {0: 1.0, 1: 2.0, 2: 3.0}, (2048, 512))
    assert len(smap) == 3
    expected = sorted(heading_angle(b, 2048) for b in boxes)
    assert [e.heading for e in smap.entries] == expected


def test_missing_depth_is_incomplete():
    with pytest.raises(IncompleteInputError):
        build_semantic_map([Detection((0, 0, 10, 10), "x", 0)], {})


def test_bad_depth_rejected():
    with pytest.raises(MapError):
        build_semantic_map([Detection((0, 0, 10, 10), "x", 0)], {0: 0.0})


def test_render_template_exact():
    entry = SemanticEntry(-0.7854, "sofa", (256, 100, 512, 300), 2.5)
    assert render_entry(entry) == "turn left 45.0 degrees, sofa (bounding box [256,100,512,300]) at 2.5 meters"
    right = SemanticEntry(0.7854, "sofa", (256, 100, 512, 300), 2.5)
    assert render_entry(right).startswith("turn right 45.0 degrees, ")


def test_render_zero_heading():
    entry = SemanticEntry(0.0, "door", (1000, 100, 1048, 300), 4.04)
    assert render_entry(entry) == "straight ahead, door (bounding box [1000,100,1048,300]) at 4.0 meters"


def test_view_translation_and_seam():
    # view 0 of 8 on a 2048 panorama starts 32 px before the seam
    x1, _, x2, _ = view_to_panorama((0, 0, 64, 10), 0, 8, 2048)
    assert (x1, x2) == (2048 - 32, 2048 + 32)
    Detection((x1, 0, x2, 10), "rug", 0).validate(2048, 512)
    x1, _, x2, _ = view_to_panorama((32, 0, 96, 10), 4, 8, 2048)
    assert (x1, x2) == (1024, 1088)


def test_iou_basics():
    assert iou((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0
    assert iou((0, 0, 2, 2), (1, 0, 3, 2)) == pytest.approx(1 / 3)
    assert iou((0, 0, 1, 1), (5, 5, 6, 6)) == 0.0


def test_detection_records_round_trip():
    recs = [{"view": 2, "bbox": [10.0, 20.0, 30.0, 40.0], "category": "plant", "depth": 1.5}]
    inp = MapBuildInput.from_records(recs)
    assert inp.to_records() == recs
    smap = build_semantic_map(inp.detections, inp.depths)
    assert smap.entries[0].category == "plant"


categories = st.sampled_from(["door", "sofa", "potted plant", "table", "tv"])


@st.composite
def entries(draw):
    x1 = draw(st.integers(0, 2000))
    x2 = draw(st.integers(x1, 2048))
    y1 = draw(st.integers(0, 400))
    y2 = draw(st.integers(y1, 512))
    depth = draw(st.floats(0.1, 50.0))
    return SemanticEntry(heading_angle((x1, y1, x2, y2), 2048), draw(categories), (x1, y1, x2, y2), depth)


@given(st.lists(entries(), max_size=12))
def test_render_parse_round_trip(es):
    es = sorted(es, key=SemanticEntry.sort_key)
    smap = SemanticMap(0, tuple(es))
    text = render_map_text(smap)
    assert text == render_map_text(SemanticMap(0, tuple(es)))
    parsed = parse_map_text(text)
    assert len(parsed) == len(es)
    for p, e in zip(parsed, es):
        assert p.category == e.category
        assert p.bbox == e.bbox
        assert p.degrees == round(math.degrees(e.heading), 1) + 0.0
        assert p.depth == float(f"{e.depth:.1f}")
