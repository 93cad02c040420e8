"""Navigation metrics: NE, SR, OSR and SPL."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Sequence

from .harness import EpisodeTrace
from .navgraph import Episode, distances_from


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeMetrics:
    episode_id: str
    ne: float
    success: bool
    oracle_success: bool
    spl: float
    path_length: float
    shortest_length: float


def spl(success: bool, shortest: float, taken: float) -> float:
    """Success weighted by ``shortest / max(taken, shortest)``."""
    if not success:
        return 0.0
    if shortest <= 0:
        return 1.0
    return shortest / max(taken, shortest)


def episode_metrics(trace: EpisodeTrace, episode: Episode) -> EpisodeMetrics:
    to_goal = distances_from(episode.graph, episode.goal_id)
    missing = [w for w in trace.route if w not in to_goal]
    if missing:
        raise MetricsError(f"route leaves the goal's component at {missing[0]!r}")
    ne = to_goal[trace.final_waypoint]
    success = ne <= episode.success_radius
    oracle = any(to_goal[w] <= episode.success_radius for w in trace.route)
    shortest = to_goal[episode.start_id]
    return EpisodeMetrics(
        episode_id=episode.episode_id,
        ne=ne,
        success=success,
        oracle_success=oracle,
        spl=spl(success, shortest, trace.path_length),
        path_length=trace.path_length,
        shortest_length=shortest,
    )


@dataclass(frozen=True)
class MetricsReport:
    episodes: tuple[EpisodeMetrics, ...]
    ne: float
    sr: float
    osr: float
    spl: float

    @property
    def count(self) -> int:
        return len(self.episodes)

    def check(self) -> None:
        eps = 1e-9
        if not (0 - eps <= self.spl <= self.sr + eps and self.sr <= self.osr + eps and self.osr <= 100 + eps):
            raise MetricsError(f"metric ordering violated: SPL={self.spl} SR={self.sr} OSR={self.osr}")
        if self.ne < 0:
            raise MetricsError("negative navigation error")

    def to_dict(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "ne": self.ne,
            "sr": self.sr,
            "osr": self.osr,
            "spl": self.spl,
            "episodes": [asdict(e) for e in self.episodes],
        }


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def aggregate(per_episode: Sequence[EpisodeMetrics]) -> MetricsReport:
    report = MetricsReport(
        episodes=tuple(per_episode),
        ne=_mean([e.ne for e in per_episode]),
        sr=100.0 * _mean([float(e.success) for e in per_episode]),
        osr=100.0 * _mean([float(e.oracle_success) for e in per_episode]),
        spl=100.0 * _mean([e.spl for e in per_episode]),
    )
    report.check()
    return report


def compute_metrics(traces: Sequence[EpisodeTrace], episodes: Sequence[Episode]) -> MetricsReport:
    if len(traces) != len(episodes):
        raise MetricsError(f"{len(traces)} traces for {len(episodes)} episodes")
    for tr, ep in zip(traces, episodes):
        if tr.episode_id != ep.episode_id:
            raise MetricsError(f"trace {tr.episode_id!r} paired with episode {ep.episode_id!r}")
    return aggregate([episode_metrics(tr, ep) for tr, ep in zip(traces, episodes)])
