"""Command-line entry point: run, bench, metrics and world."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .bench import DEFAULT_MATRIX, run_benchmark
from .config import RunConfig, load_toml
from .harness import EpisodeTrace, run_episode
from .metrics import MetricsError, compute_metrics
from .navgraph import load_episode
from .sim import PROFILES, OraclePerceiver, OracleScanner, OracleWorld, WorldSpec, generate_world, load_world
from .sim.oracle import oracle_backends

log = logging.getLogger("profocus")


def parse_world(spec: str, seed: int | None = None) -> WorldSpec:
    """``seed:profile``, a bare profile name, or a world JSON file."""
    if Path(spec).is_file():
        return load_world(spec)
    if ":" in spec:
        s, profile = spec.split(":", 1)
        return generate_world(int(s), profile)
    if spec in PROFILES:
        return generate_world(seed or 0, spec)
    raise argparse.ArgumentTypeError(f"not a world file, profile or seed:profile: {spec!r}")


def parse_seeds(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _split(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _base_config(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    raw = load_toml(args.config) if args.config else {}
    cfg = RunConfig.from_mapping(raw)
    overrides = {}
    for flag, key in (("lam", "lam"), ("topk", "top_k"), ("seed", "seed"), ("max_steps", "max_steps")):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "no_bd_mcts", False):
        overrides["no_bd_mcts"] = True
    if getattr(args, "no_pp", False):
        overrides["no_pp"] = True
    return cfg.replace(**overrides), raw


def _write(path: str, text: str) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")


def cmd_run(args: argparse.Namespace) -> int:
    cfg, raw = _base_config(args)
    world = parse_world(args.world, args.seed)
    if args.backend == "oracle":
        backends = oracle_backends(world, cfg.panorama)
    else:
        from .llm import ChatClient, EndpointConfig, http_backends

        endpoint = EndpointConfig.from_mapping(raw.get("llm", {}))
        truth = OracleWorld(world)
        # Simulated worlds carry no imagery, so detection and region answers stay local.
        backends = http_backends(ChatClient(endpoint), OracleScanner(truth), cfg.panorama,
                                 perceiver=OraclePerceiver(truth))
    trace = run_episode(world.episode(), backends, cfg)
    if args.out:
        _write(args.out, trace.to_jsonl())
    else:
        sys.stdout.write(trace.to_jsonl())
    log.info("%s: %s after %d steps, %.2f m", trace.episode_id, trace.status, len(trace.steps), trace.path_length)
    return 0 if trace.status != "failed" else 1


def cmd_bench(args: argparse.Namespace) -> int:
    cfg, _ = _base_config(args)
    report = run_benchmark(_split(args.profiles), parse_seeds(args.seeds), _split(args.matrix),
                           base=cfg, workers=args.workers)
    if args.report:
        _write(args.report, report.to_json() + "\n")
    print(report.table())
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    traces = [EpisodeTrace.read(p) for p in sorted(Path(args.traces).glob("*.jsonl"))]
    episodes = {}
    for p in sorted(Path(args.episodes).glob("*.json")):
        ep = load_episode(p)
        episodes[ep.episode_id] = ep
    missing = [t.episode_id for t in traces if t.episode_id not in episodes]
    if missing:
        raise MetricsError(f"no episode file for traces {missing}")
    report = compute_metrics(traces, [episodes[t.episode_id] for t in traces])
    print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    return 0


def cmd_world(args: argparse.Namespace) -> int:
    world = parse_world(args.world, args.seed)
    text = world.to_json() + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="profocus", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", help="TOML file with run settings and an optional [llm] table")
        sp.add_argument("--no-bd-mcts", action="store_true", help="greedy choice over immediate neighbours")
        sp.add_argument("--no-pp", action="store_true", help="skip the perception loop")
        sp.add_argument("--lambda", dest="lam", type=float, help="distance penalty weight")
        sp.add_argument("--topk", type=int, help="number of candidate leaves handed to the decider")
        sp.add_argument("--max-steps", type=int)
        sp.add_argument("--seed", type=int)

    r = sub.add_parser("run", help="run one episode and write its trace")
    r.add_argument("--world", required=True, help="world JSON file, profile name or seed:profile")
    r.add_argument("--backend", choices=("oracle", "http"), default="oracle")
    r.add_argument("--out", help="trace JSONL path (default: stdout)")
    run_opts(r)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="ablation matrix over seeded worlds")
    b.add_argument("--profiles", default="corridor,trap")
    b.add_argument("--seeds", default="0..99", help="e.g. 0..99 or 1,2,5")
    b.add_argument("--matrix", default=",".join(DEFAULT_MATRIX))
    b.add_argument("--report", help="write the JSON report here")
    b.add_argument("--workers", type=int, default=1)
    run_opts(b)
    b.set_defaults(func=cmd_bench)

    m = sub.add_parser("metrics", help="score saved traces against their episodes")
    m.add_argument("--traces", required=True, help="directory of *.jsonl traces")
    m.add_argument("--episodes", required=True, help="directory of *.json episode or world files")
    m.set_defaults(func=cmd_metrics)

    w = sub.add_parser("world", help="write a generated world as JSON")
    w.add_argument("--world", required=True, help="profile name or seed:profile")
    w.add_argument("--seed", type=int)
    w.add_argument("--out")
    w.set_defaults(func=cmd_world)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (argparse.ArgumentTypeError, ValueError, KeyError, OSError) as exc:
        parser.exit(2, f"profocus: error: {exc}\n")


if __name__ == "__main__":
    raise SystemExit(main())
