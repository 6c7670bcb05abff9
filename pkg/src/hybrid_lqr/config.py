# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Run configuration.

A run is described by one JSON document. Top-level fields:

    task              analyze | simulate | zeno | lqr | aqr | hlqr-temporal
                      | hlqr-spatial | dp | compare | preset
    preset            name of a canned scenario, or
    scenario          an inline scenario (system, cost, horizon, x0, ...)
    out               output directory (default: HLQR_OUTPUT_DIR/<task>)
    seed              seed for sampled checks
    step              integration step
    x0, horizon       override the scenario's values
    solver            spatial solver options
    grid              DP grid {"x": [[start, stop, num], ...], "t": [...], "u": [...]}
    schedule          jump times for hlqr-temporal
    max_jumps         jump budget for simulate and zeno
    explore_branches  hlqr-spatial: also solve every single-jump branch flip
    residual_samples  dp: nodes sampled for the Bellman residual
    zeno              zeno: parameter overrides, {"a", "b", "c"} or {"g", "e"}

Command-line flags override fields of the file.
"""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from .context import get_context
from .core.presets import PRESETS, ScenarioPreset, get_preset, zeno_with_params
from .errors import ConfigError, HybridControlError, InvalidModelError
from .utils.serialization import parse_json, read_json

logger = logging.getLogger(__name__)

TASKS = (
    "analyze",
    "simulate",
    "zeno",
    "lqr",
    "aqr",
    "hlqr-temporal",
    "hlqr-spatial",
    "dp",
    "compare",
    "preset",
)

BRANCHES = ("plus", "minus")


@dataclass(frozen=True)
class RunConfig:
    task: str
    preset: Optional[str] = None
    scenario: Optional[dict] = None
    out: Optional[str] = None
    seed: int = 0
    step: Optional[float] = None
    x0: Optional[list] = None
    horizon: Optional[list] = None
    solver: dict = field(default_factory=dict)
    grid: Optional[dict] = None
    schedule: list = field(default_factory=list)
    max_jumps: Optional[int] = None
    explore_branches: bool = False
    residual_samples: int = 200
    zeno: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}", {"field": "task", "allowed": list(TASKS)})
        if self.preset is not None and self.scenario is not None:
            raise ConfigError("give either preset or scenario, not both", {"field": "preset"})
        if self.task != "preset" and self.preset is None and self.scenario is None:
            raise ConfigError(f"task {self.task!r} needs a preset or a scenario", {"field": "scenario"})
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {self.preset!r}", {"field": "preset", "available": sorted(PRESETS)}
            )
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}", {"field": "seed"})
        if self.step is not None and not (isinstance(self.step, (int, float)) and self.step > 0):
            raise ConfigError(f"step must be positive, got {self.step!r}", {"field": "step"})
        if self.max_jumps is not None and not (isinstance(self.max_jumps, int) and self.max_jumps > 0):
            raise ConfigError(f"max_jumps must be a positive integer, got {self.max_jumps!r}", {"field": "max_jumps"})
        if not isinstance(self.solver, dict):
            raise ConfigError("solver must be an object", {"field": "solver"})
        if not isinstance(self.zeno, dict):
            raise ConfigError("zeno must be an object", {"field": "zeno"})
        if self.task == "hlqr-temporal" and not self.schedule:
            raise ConfigError("hlqr-temporal needs a non-empty schedule", {"field": "schedule"})

    @classmethod
    def from_dict(cls, data: Any, source: str = "<config>") -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be a JSON object", {"source": source})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{source}: unknown field(s) {unknown}", {"source": source, "fields": unknown})
        if "task" not in data:
            raise ConfigError(f"{source}: missing field 'task'", {"source": source, "field": "task"})
        try:
            return cls(**data)
        except ConfigError as e:
            e.details.setdefault("source", source)
            raise

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(read_json(path), str(path))

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Return a copy with top-level fields replaced; None values are ignored."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        if not updates:
            return self
        unknown = sorted(set(updates) - {f.name for f in fields(self)})
        if unknown:
            raise ConfigError(f"unknown field(s) {unknown}", {"fields": unknown})
        if "preset" in updates and "scenario" not in updates:
            updates["scenario"] = None
        if "scenario" in updates and "preset" not in updates:
            updates["preset"] = None
        return replace(self, **updates)

    def with_zeno_param(self, option: str) -> "RunConfig":
        """Add a "name=value" Zeno parameter override."""
        key, sep, raw = option.partition("=")
        try:
            value = float(raw)
        except ValueError:
            sep = ""
        if not sep or not key.strip():
            raise ConfigError(f"Zeno parameter must look like <name>=<number>, got {option!r}", {"field": "zeno"})
        return replace(self, zeno={**self.zeno, key.strip(): value})

    def with_branch_override(self, option: str) -> "RunConfig":
        """Add a "jump_index:plus|minus" override to the solver options."""
        index, _, branch = option.partition(":")
        try:
            jump = int(index)
        except ValueError:
            jump = -1
        if jump < 0 or branch not in BRANCHES:
            raise ConfigError(
                f"branch override must look like <jump_index>:plus|minus, got {option!r}",
                {"field": "branch_override"},
            )
        solver = dict(self.solver)
        solver["branch_overrides"] = {**dict(solver.get("branch_overrides", {})), str(jump): branch}
        return replace(self, solver=solver)

    def load_scenario(self) -> ScenarioPreset:
        """Resolve the preset or inline scenario and apply zeno / x0 / horizon / grid / solver overrides."""
        try:
            if self.preset is not None:
                scenario = get_preset(self.preset)
            else:
                scenario = ScenarioPreset.from_config(self.scenario)
        except HybridControlError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid scenario: {e}", {"field": "scenario", **e.details}) from e
        updates: dict[str, Any] = {}
        if self.x0 is not None:
            updates["x0"] = tuple(float(v) for v in self.x0)
        if self.zeno:
            try:
                scenario = zeno_with_params(scenario, self.zeno, updates.pop("x0", None))
            except InvalidModelError as e:
                raise ConfigError(f"invalid Zeno parameters: {e}", {"field": "zeno", **e.details}) from e
        if self.horizon is not None:
            if len(self.horizon) != 2:
                raise ConfigError("horizon must be [t0, tf]", {"field": "horizon"})
            updates["horizon"] = (float(self.horizon[0]), float(self.horizon[1]))
        if self.grid is not None:
            updates["grid"] = self.grid
        if self.solver:
            updates["solver"] = {**scenario.solver, **self.solver}
        return replace(scenario, **updates) if updates else scenario

    def output_dir(self) -> Path:
        """Create and return the output directory; unwritable locations are a ConfigError."""
        target = Path(self.out).expanduser() if self.out else get_context().output_dir / self.task
        try:
            target.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create output directory {target}: {e.strerror}", {"field": "out"}) from e
        if not os.access(target, os.W_OK):
            raise ConfigError(f"output directory {target} is not writable", {"field": "out"})
        return target


def parse_set_option(option: str) -> tuple[str, Any]:
    """Parse --set key=value; the value is read as JSON, falling back to a plain string."""
    key, sep, raw = option.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects key=value, got {option!r}", {"field": "set"})
    try:
        value = parse_json(raw, f"--set {key}")
    except ConfigError:
        value = raw
    return key.strip(), value


__all__ = ["BRANCHES", "TASKS", "RunConfig", "parse_set_option"]
