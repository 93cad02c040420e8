import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_graph
from profocus.bench import run_benchmark
from profocus.config import RunConfig
from profocus.harness import EpisodeTrace
from profocus.metrics import (
    EpisodeMetrics,
    MetricsError,
    MetricsReport,
    aggregate,
    compute_metrics,
    episode_metrics,
    spl,
)
from profocus.navgraph import Episode


def test_spl_hand_examples():
    assert spl(True, 10.0, 12.0) == pytest.approx(10 / 12, abs=1e-9)
    assert spl(True, 10.0, 12.0) == pytest.approx(0.833, abs=5e-4)
    assert spl(True, 10.0, 8.0) == 1.0
    assert spl(False, 10.0, 10.0) == 0.0
    assert spl(True, 0.0, 4.0) == 1.0


def _episode():
    # goal G sits 2 m past B; C branches off B, 5 m from the goal by graph
    g = make_graph({"A": (0, 0), "B": (8, 0), "G": (10, 0), "C": (8, 3)},
                   [("A", "B"), ("B", "G"), ("B", "C")])
    return Episode(g, "A", "G", "go", episode_id="e")


def _trace(route, length, eid="e"):
    return EpisodeTrace(eid, {}, [], route, length, "stopped")


def test_oracle_success_without_success():
    m = episode_metrics(_trace(["A", "B", "C"], 11.0), _episode())
    assert m.oracle_success and not m.success
    assert m.ne == 5.0 and m.spl == 0.0


def test_success_spl():
    m = episode_metrics(_trace(["A", "B", "C", "B", "G"], 16.0), _episode())
    assert m.success and m.ne == 0.0
    assert m.spl == pytest.approx(10 / 16, abs=1e-9)


def test_compute_metrics_validates_alignment():
    ep = _episode()
    with pytest.raises(MetricsError):
        compute_metrics([_trace(["A"], 0.0)], [ep, ep])
    with pytest.raises(MetricsError):
        compute_metrics([_trace(["A"], 0.0, eid="other")], [ep])
    rep = compute_metrics([_trace(["A", "B", "G"], 10.0), _trace(["A"], 0.0)], [ep, ep])
    assert (rep.sr, rep.osr, rep.spl) == (50.0, 50.0, 50.0)
    assert rep.ne == pytest.approx(5.0)


def test_check_rejects_disorder():
    with pytest.raises(MetricsError):
        MetricsReport((), ne=0.0, sr=40.0, osr=30.0, spl=10.0).check()
    with pytest.raises(MetricsError):
        MetricsReport((), ne=0.0, sr=40.0, osr=50.0, spl=45.0).check()


@st.composite
def episode_rows(draw):
    shortest = draw(st.floats(0.5, 50))
    taken = draw(st.floats(0, 200))
    success = draw(st.booleans())
    oracle = success or draw(st.booleans())
    return EpisodeMetrics("e", draw(st.floats(0, 30)), success, oracle, spl(success, shortest, taken), taken, shortest)


@given(st.lists(episode_rows(), max_size=40))
def test_metric_ordering_law(rows):
    rep = aggregate(rows)
    assert 0 <= rep.spl <= rep.sr + 1e-9 <= rep.osr + 2e-9 <= 100 + 3e-9
    assert rep.ne >= 0


def test_empty_benchmark():
    rep = run_benchmark(["trap"], [])
    assert rep.results == {} and rep.deltas() == {}


def test_corridor_sweep_all_configs_succeed():
    rep = run_benchmark(["corridor"], range(100))
    for name, r in rep.results["corridor"].items():
        assert r.sr == 100.0, name


def test_benchmark_deterministic_and_parallel_safe():
    a = run_benchmark(["trap", "landmark"], range(6))
    b = run_benchmark(["trap", "landmark"], range(6), workers=2)
    assert a.to_json() == b.to_json()
    assert set(a.deltas()["trap"]) == {"no_bd_mcts", "no_pp"}
    table = a.table()
    assert "trap" in table and "no_bd_mcts" in table


def test_base_config_carries_into_matrix():
    rep = run_benchmark(["corridor"], [0], ["full"], base=RunConfig(max_steps=0))
    assert rep.results["corridor"]["full"].sr == 0.0
