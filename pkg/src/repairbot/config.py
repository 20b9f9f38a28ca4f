"""Operator configuration: defaults < state/config.json < REPAIRBOT_* env < flags."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

from .minilang.interp import DEFAULT_BUDGET
from .patch import ENGINE_ORDER, Engine
from .pipeline.repair import RepairConfig
from .pipeline.storage import read_json

CONFIG_FILE = "config.json"
ENV_PREFIX = "REPAIRBOT_"


class ConfigError(ValueError):
    pass


def parse_engines(value: Any) -> tuple[Engine, ...]:
    names = value.split(",") if isinstance(value, str) else list(value)
    by_name = {e.value.lower(): e for e in Engine}
    out = []
    for name in (x.strip().lower() for x in names):
        if not name:
            continue
        if name not in by_name:
            raise ConfigError(f"unknown engine {name!r}; choose from {', '.join(by_name)}")
        if by_name[name] not in out:
            out.append(by_name[name])
    if not out:
        raise ConfigError("at least one engine must be enabled")
    return tuple(sorted(out, key=ENGINE_ORDER.index))


@dataclass(frozen=True)
class Config:
    state_dir: Path = Path("state")
    inbox_dir: Path = Path("inbox")
    proposals_dir: Optional[Path] = None  # defaults to <state>/proposals
    engines: tuple[Engine, ...] = ENGINE_ORDER
    budget_engine_secs: float = 120.0
    budget_build_secs: float = 600.0
    step_budget: int = DEFAULT_BUDGET
    workers: int = os.cpu_count() or 1
    seed: int = 42
    max_diff_lines: int = 50
    poll_secs: float = 60.0

    def __post_init__(self):
        if self.poll_secs < 1:
            raise ConfigError("poll interval must be at least 1 second")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.budget_engine_secs <= 0 or self.budget_build_secs <= 0 or self.step_budget <= 0:
            raise ConfigError("budgets must be positive")
        if self.max_diff_lines < 1:
            raise ConfigError("max diff lines must be at least 1")

    @property
    def proposals(self) -> Path:
        return self.proposals_dir or self.state_dir / "proposals"

    def repair_config(self) -> RepairConfig:
        return RepairConfig(
            engines=self.engines,
            engine_budget_secs=self.budget_engine_secs,
            build_budget_secs=self.budget_build_secs,
            step_budget=self.step_budget,
            seed=self.seed,
            max_diff_lines=self.max_diff_lines,
        )

    def ensure_dirs(self) -> None:
        for d in (self.state_dir, self.proposals):
            try:
                d.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise ConfigError(f"cannot create {d}: {exc}") from exc
            if not os.access(d, os.W_OK):
                raise ConfigError(f"{d} is not writable")


_CONVERTERS = {
    "state_dir": Path,
    "inbox_dir": Path,
    "proposals_dir": Path,
    "engines": parse_engines,
    "budget_engine_secs": float,
    "budget_build_secs": float,
    "step_budget": int,
    "workers": int,
    "seed": int,
    "max_diff_lines": int,
    "poll_secs": float,
}

# config-file / env names that differ from the field names
_ALIASES = {"state": "state_dir", "inbox": "inbox_dir", "proposals": "proposals_dir"}


def _normalize(raw: Mapping[str, Any], source: str) -> dict:
    out = {}
    for key, value in raw.items():
        name = _ALIASES.get(key.lower(), key.lower())
        if name not in _CONVERTERS:
            raise ConfigError(f"{source}: unknown setting {key!r}")
        if value is None:
            continue
        try:
            out[name] = _CONVERTERS[name](value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: bad value for {key}: {value!r}") from exc
    return out


def from_env(env: Mapping[str, str]) -> dict:
    raw = {k[len(ENV_PREFIX):]: v for k, v in env.items() if k.startswith(ENV_PREFIX)}
    return _normalize(raw, "environment")


def load_config(flags: Optional[Mapping[str, Any]] = None, env: Optional[Mapping[str, str]] = None) -> Config:
    """Merge the layers; the state directory is resolved first since it holds the file."""
    flags = _normalize({k: v for k, v in (flags or {}).items() if v is not None}, "flags")
    env_values = from_env(os.environ if env is None else env)
    state = flags.get("state_dir") or env_values.get("state_dir") or Config.state_dir
    path = Path(state) / CONFIG_FILE
    try:
        file_raw = read_json(path, {})
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(file_raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    merged = {**_normalize(file_raw, str(path)), **env_values, **flags, "state_dir": Path(state)}
    return dataclasses.replace(Config(), **merged)
