import json
import math
from pathlib import Path

import pytest

from profocus.config import RunConfig, variant
from profocus.harness import run_episode
from profocus.metrics import aggregate, episode_metrics
from profocus.navgraph import diameter, distances_from
from profocus.sim import (
    PROFILES,
    OracleWorld,
    WorldSpec,
    generate_world,
    load_world,
    oracle_backends,
    oracle_scan,
)
from profocus.sim.oracle import object_bbox, views_containing
from profocus.sim.world import DECOY_DECAY, DECOY_LURE, SceneObject
from worlds import bearing_errors, door_bench_world

GOLDEN = Path(__file__).parent / "golden"
PANO = (2048, 512)


def _chain_order(graph, start):
    order, prev = [start], None
    while True:
        nxt = [n for n in graph.neighbors(order[-1]) if n != prev]
        if not nxt:
            return order
        assert len(nxt) == 1
        prev = order[-1]
        order.append(nxt[0])


@pytest.mark.parametrize("name, seed, profile", [("corridor-42", 42, "corridor"), ("trap-7", 7, "trap")])
def test_golden_worlds(name, seed, profile):
    text = generate_world(seed, profile).to_json() + "\n"
    assert text == (GOLDEN / f"{name}.json").read_text()
    assert load_world(GOLDEN / f"{name}.json").to_json() + "\n" == text


def test_corridor_42_is_an_eight_waypoint_chain():
    w = generate_world(42, "corridor")
    assert len(w.graph) == 8 and len(w.graph.edges()) == 7
    order = _chain_order(w.graph, w.start_id)
    assert len(order) == 8 and order[-1] == w.goal_id


def test_trap_7_decoy_decays_after_depth_two():
    w = generate_world(7, "trap")
    (trap,) = w.traps
    assert len(w.graph.neighbors(trap.junction)) == 3  # Y junction
    truth = OracleWorld(w)
    for wid, depth in trap.depths.items():
        expected = DECOY_LURE if depth <= 2 else DECOY_LURE * DECOY_DECAY
        assert truth.value(wid, []) == pytest.approx(expected)
    # the first decoy waypoint looks better than the true arm's first waypoint
    true_arm = [n for n in w.graph.neighbors(trap.junction) if n not in trap.depths and n != "t1"]
    assert all(truth.value("d0", []) > truth.value(a, []) for a in true_arm)


@pytest.mark.parametrize("profile", PROFILES)
def test_generation_is_pure(profile):
    assert generate_world(5, profile).to_json() == generate_world(5, profile).to_json()
    assert generate_world(5, profile).to_json() != generate_world(6, profile).to_json()


def test_unknown_profile():
    with pytest.raises(ValueError):
        generate_world(0, "castle")


def test_world_round_trip():
    for profile in PROFILES:
        w = generate_world(3, profile)
        assert WorldSpec.from_dict(json.loads(w.to_json())).to_json() == w.to_json()


def test_scan_box_positions():
    w = door_bench_world()
    ahead = SceneObject("x", "vase", {"color": "red"}, (0.0, 5.0, 0.0), frozenset({"s"}))
    box, bearing, depth = object_bbox(ahead, (0.0, 0.0, 0.0), 0.0, PANO)
    assert bearing == 0.0 and depth == 5.0
    assert (box[0] + box[2]) / 2 == 1024
    left = SceneObject("y", "vase", {"color": "red"}, (-3.0, 3.0, 0.0), frozenset({"s"}))
    box, bearing, _ = object_bbox(left, (0.0, 0.0, 0.0), 0.0, PANO)
    assert bearing == pytest.approx(-math.pi / 4)
    assert (box[0] + box[2]) / 2 == pytest.approx(768)
    dets, depths = oracle_scan(w, "g", 8, PANO)
    assert {d.category for d in dets} == {"lamp"}


def test_views_containing_overlap():
    assert views_containing(1024, 8, 2048) == [3, 4]
    assert views_containing(1024 + 128, 8, 2048) == [4]
    assert views_containing(0, 8, 2048) == [0, 7]


@pytest.mark.parametrize("seed", range(0, 100, 9))
def test_bearing_round_trip(seed):
    errors = bearing_errors(generate_world(seed, "r2r-like"))
    assert errors and max(errors) <= 1e-6


@pytest.mark.parametrize("profile", ["corridor", "maze"])
def test_trap_free_worlds_always_succeed(profile):
    per = []
    for seed in range(100):
        w = generate_world(seed, profile)
        assert len(w.graph) <= 20
        ep = w.episode()
        per.append(episode_metrics(run_episode(ep, oracle_backends(w), RunConfig()), ep))
    assert aggregate(per).sr == 100.0


def test_trap_world_backtracks_with_search_and_fails_without():
    w = generate_world(7, "trap")
    ep = w.episode()
    full = run_episode(ep, oracle_backends(w), RunConfig())
    assert episode_metrics(full, ep).success
    (trap,) = w.traps
    route = full.route
    entered = next(i for i, x in enumerate(route) if x in trap.depths)
    assert trap.junction in route[entered:]  # walked back out of the decoy
    greedy = run_episode(ep, oracle_backends(w), variant(RunConfig(), "no_bd_mcts"))
    assert not episode_metrics(greedy, ep).success


def test_oracle_value_uses_diameter():
    w = generate_world(1, "maze")
    truth = OracleWorld(w)
    assert truth.norm == diameter(w.graph)
    d = distances_from(w.graph, w.goal_id)
    for wid in w.graph.ids:
        assert truth.value(wid, []) == pytest.approx(max(0.0, 1 - d[wid] / truth.norm))
