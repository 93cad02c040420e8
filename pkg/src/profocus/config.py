"""Run configuration and its TOML loader."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .mcts import DEFAULT_LAMBDA, DEFAULT_TOP_K, MAX_CHILDREN_PER_PARENT, ROOT_PRIOR
from .perception import DEFAULT_QUERY_BUDGET, ConfigError
from .semantic_map import DEFAULT_PANORAMA, DEFAULT_VIEWS

MOVE_POLICIES = ("traverse", "single_edge")


@dataclass(frozen=True)
class RunConfig:
    lam: float = DEFAULT_LAMBDA
    top_k: int = DEFAULT_TOP_K
    query_budget: int = DEFAULT_QUERY_BUDGET
    max_steps: int | None = None  # None defers to the episode
    no_bd_mcts: bool = False
    no_pp: bool = False
    max_children_per_parent: int = MAX_CHILDREN_PER_PARENT
    prior_visit: int = 0
    root_prior: float = ROOT_PRIOR
    move_policy: str = "traverse"
    views: int = DEFAULT_VIEWS
    panorama_width: int = DEFAULT_PANORAMA[0]
    panorama_height: int = DEFAULT_PANORAMA[1]
    seed: int = 0

    def __post_init__(self) -> None:
        if self.query_budget < 1:
            raise ConfigError("query_budget must be >= 1")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.lam < 0:
            raise ConfigError("lam must be >= 0")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0")
        if self.max_children_per_parent < 1:
            raise ConfigError("max_children_per_parent must be >= 1")
        if self.prior_visit < 0:
            raise ConfigError("prior_visit must be >= 0")
        if self.move_policy not in MOVE_POLICIES:
            raise ConfigError(f"move_policy must be one of {MOVE_POLICIES}")
        if self.views < 1 or self.panorama_width <= 0 or self.panorama_height <= 0:
            raise ConfigError("views and panorama size must be positive")

    @property
    def panorama(self) -> tuple[int, int]:
        return (self.panorama_width, self.panorama_height)

    @property
    def name(self) -> str:
        if self.no_bd_mcts and self.no_pp:
            return "no_bd_mcts+no_pp"
        if self.no_bd_mcts:
            return "no_bd_mcts"
        if self.no_pp:
            return "no_pp"
        return "full"

    def replace(self, **changes: Any) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> RunConfig:
        # accept either a flat table or a [run] section; [llm] belongs to the HTTP client
        data = dict(data["run"]) if "run" in data else {k: v for k, v in data.items() if k != "llm"}
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**data)


def load_toml(path: str | Path) -> dict[str, Any]:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_config(path: str | Path) -> RunConfig:
    return RunConfig.from_mapping(load_toml(path))


ABLATIONS = {
    "full": {},
    "no_bd_mcts": {"no_bd_mcts": True},
    "no_pp": {"no_pp": True},
}


def variant(base: RunConfig, name: str) -> RunConfig:
    key = name.replace("-", "_")
    if key not in ABLATIONS:
        raise ConfigError(f"unknown configuration {name!r}; expected one of {sorted(ABLATIONS)}")
    return base.replace(**{"no_bd_mcts": False, "no_pp": False, **ABLATIONS[key]})
