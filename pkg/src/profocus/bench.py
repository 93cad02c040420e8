"""Ablation benchmark over seeded synthetic worlds."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .config import RunConfig, variant
from .harness import EpisodeTrace, run_episode
from .metrics import MetricsReport, aggregate, episode_metrics
from .sim import generate_world, oracle_backends

DEFAULT_MATRIX = ("full", "no_bd_mcts", "no_pp")


def run_world(seed: int, profile: str, config: RunConfig) -> tuple[EpisodeTrace, Any]:
    world = generate_world(seed, profile)
    episode = world.episode()
    trace = run_episode(episode, oracle_backends(world, config.panorama), config)
    return trace, episode_metrics(trace, episode)


def _job(args: tuple[int, str, RunConfig]):
    return run_world(*args)[1]


@dataclass
class BenchmarkReport:
    results: dict[str, dict[str, MetricsReport]] = field(default_factory=dict)

    def deltas(self) -> dict[str, dict[str, dict[str, float]]]:
        out: dict[str, dict[str, dict[str, float]]] = {}
        for profile, by_cfg in self.results.items():
            base = by_cfg.get("full")
            if base is None:
                continue
            out[profile] = {
                name: {m: getattr(rep, m) - getattr(base, m) for m in ("ne", "sr", "osr", "spl")}
                for name, rep in by_cfg.items()
                if name != "full"
            }
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "results": {
                p: {c: {k: v for k, v in r.to_dict().items() if k != "episodes"} for c, r in by.items()}
                for p, by in self.results.items()
            },
            "deltas": self.deltas(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def table(self) -> str:
        rows = [f"{'profile':<10} {'config':<12} {'n':>4} {'NE':>7} {'OSR':>7} {'SR':>7} {'SPL':>7}"]
        for p, by in self.results.items():
            for c, r in by.items():
                rows.append(f"{p:<10} {c:<12} {r.count:>4} {r.ne:>7.2f} {r.osr:>7.1f} {r.sr:>7.1f} {r.spl:>7.1f}")
        return "\n".join(rows)


def run_benchmark(
    profiles: Sequence[str],
    seeds: Iterable[int],
    matrix: Sequence[str] = DEFAULT_MATRIX,
    base: RunConfig | None = None,
    workers: int = 1,
) -> BenchmarkReport:
    """Run every (profile, configuration) over ``seeds``; results are ordered by seed."""
    base = base or RunConfig()
    seeds = list(seeds)
    report = BenchmarkReport()
    if not seeds:
        return report
    for profile in profiles:
        by_cfg: dict[str, MetricsReport] = {}
        for name in matrix:
            cfg = variant(base, name)
            jobs = [(s, profile, cfg) for s in seeds]
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    per_episode = list(pool.map(_job, jobs))
            else:
                per_episode = [_job(j) for j in jobs]
            by_cfg[cfg.name] = aggregate(per_episode)
        report.results[profile] = by_cfg
    return report
