import json

import pytest

from profocus.agents import STOP, AgentBackends, AgentError
from profocus.config import RunConfig, variant
from profocus.harness import (
    STATUS_FAILED,
    STATUS_MAX_STEPS,
    STATUS_STOPPED,
    EpisodeTrace,
    run_episode,
    write_traces,
)
from profocus.metrics import episode_metrics
from profocus.navgraph import path_length
from profocus.sim import generate_world, oracle_backends


def run(seed, profile, cfg=None):
    w = generate_world(seed, profile)
    ep = w.episode()
    return w, ep, run_episode(ep, oracle_backends(w), cfg or RunConfig())


def test_corridor_stops_at_goal():
    w, ep, tr = run(42, "corridor")
    assert tr.status == STATUS_STOPPED
    assert tr.steps[-1].decision == STOP
    assert tr.final_waypoint == w.goal_id
    assert episode_metrics(tr, ep).success


def test_zero_steps_terminates_immediately():
    w, ep, tr = run(3, "maze", RunConfig(max_steps=0))
    assert tr.steps == [] and tr.status == STATUS_MAX_STEPS
    m = episode_metrics(tr, ep)
    assert m.ne == pytest.approx(ep.shortest_length)
    assert m.path_length == 0.0


@pytest.mark.parametrize("profile", ["trap", "maze", "landmark", "r2r-like"])
@pytest.mark.parametrize("name", ["full", "no_bd_mcts", "no_pp"])
def test_step_invariants(profile, name):
    w, ep, tr = run(11, profile, variant(RunConfig(), name))
    g = w.graph
    walked = [tr.route[0]]
    total, last = 0.0, 0.0
    for s in tr.steps:
        assert s.path_length >= last
        last = s.path_length
        assert s.segment[0] == s.waypoint_id == walked[-1]
        assert all(g.has_edge(a, b) for a, b in zip(s.segment, s.segment[1:]))
        total += path_length(g, s.segment)
        assert s.path_length == pytest.approx(total, abs=1e-9)
        walked.extend(s.segment[1:])
        allowed = {c["id"] for c in s.candidates}
        assert s.decision == STOP or s.decision in allowed
        if name == "no_bd_mcts":
            assert s.topk is None
            assert allowed == set(g.neighbors(s.waypoint_id))
        else:
            assert s.topk is not None
            # an exhausted tree falls back to the immediate neighbours
            want = {c["id"] for c in s.topk} if s.topk else set(g.neighbors(s.waypoint_id))
            assert allowed == want
        if name == "no_pp":
            assert s.queries == [] and s.context["answers"] == []
    assert walked == tr.route
    assert tr.path_length == pytest.approx(path_length(g, tr.route), abs=1e-9)


def test_no_pp_trace_has_no_query_records_and_no_bd_mcts_no_topk():
    _, _, tr = run(2, "trap", variant(RunConfig(), "no_pp"))
    assert all(not json.loads(line).get("queries") for line in tr.to_jsonl().splitlines())
    _, _, tr = run(2, "trap", variant(RunConfig(), "no_bd_mcts"))
    text = tr.to_jsonl()
    assert '"topk"' not in text


def test_replay_is_byte_identical(tmp_path):
    _, _, a = run(9, "landmark")
    _, _, b = run(9, "landmark")
    a.write(tmp_path / "a.jsonl")
    b.write(tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    back = EpisodeTrace.read(tmp_path / "a.jsonl")
    assert back.to_jsonl() == a.to_jsonl()


def test_trace_shape():
    _, _, tr = run(4, "trap")
    lines = [json.loads(x) for x in tr.to_jsonl().splitlines()]
    assert [x["type"] for x in lines] == ["step"] * len(tr.steps) + ["summary"]
    step = lines[0]
    assert set(step["tree"]) == {"nodes", "topk"}
    assert set(step["tree"]["nodes"][0]) == {"id", "parent", "q", "n"}
    assert set(step["topk"][0]) == {"id", "v_path", "dist", "score"}
    assert {"iteration", "question", "focus_region", "answer"} <= set(step["queries"][0])


def test_memory_rebuilt_from_trace_matches_captions():
    _, _, tr = run(5, "trap")
    bank = tr.memory
    assert len(bank) == len(tr.steps)
    expanded = [s.waypoint_id for s in tr.steps]
    for i, s in enumerate(tr.steps[1:], start=1):
        assert s.context["trajectory_caption"] == bank.reconstruct_trajectory(expanded[:i])


def test_single_edge_policy():
    _, _, tr = run(7, "trap", RunConfig(move_policy="single_edge", max_steps=30))
    assert all(len(s.segment) <= 2 for s in tr.steps)


class _Broken:
    def __init__(self, inner, what):
        self.inner, self.what = inner, what

    def __getattr__(self, name):
        if name == self.what:
            def fail(*a, **k):
                raise AgentError("backend down")
            return fail
        return getattr(self.inner, name)


def test_decider_failure_marks_episode_failed():
    w = generate_world(1, "corridor")
    be = oracle_backends(w)
    be = AgentBackends(be.orchestrator, be.perceiver, _Broken(be.decider, "decide"), be.scanner)
    tr = run_episode(w.episode(), be, RunConfig())
    assert tr.status == STATUS_FAILED and "decision failed" in tr.reason


def test_scanner_failure_marks_episode_failed():
    w = generate_world(1, "corridor")
    be = oracle_backends(w)
    be = AgentBackends(be.orchestrator, be.perceiver, be.decider, _Broken(be.scanner, "scan"))
    tr = run_episode(w.episode(), be, RunConfig())
    assert tr.status == STATUS_FAILED and tr.route == [w.start_id]


def test_decision_outside_candidates_becomes_stop():
    class Rogue:
        def decide(self, candidates, context, memory, paths):
            return "not-a-waypoint"

    w = generate_world(1, "corridor")
    be = oracle_backends(w)
    tr = run_episode(w.episode(), AgentBackends(be.orchestrator, be.perceiver, Rogue(), be.scanner))
    assert tr.status == STATUS_STOPPED and tr.steps[0].decision == STOP
    assert tr.steps[0].warnings


def test_write_traces(tmp_path):
    traces = [run(s, "corridor")[2] for s in range(3)]
    paths = write_traces(traces, tmp_path / "out")
    assert [p.name for p in paths] == ["corridor-0.jsonl", "corridor-1.jsonl", "corridor-2.jsonl"]
