# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Artifact formats shared by the CLI and the MCP tools.

- JSON documents (reports, scenario configs) are written with sorted keys so
  identical inputs give identical bytes.
- Trajectories become one table with the columns
  t, x1..xn, p1..pn, u1..um, jump, beating_depth, branch. The row that
  starts the arc after a reset carries jump = 1, the depth and the branch.
  Missing co-states or controls are NaN.
- Jump tables (zeno task) have the columns jump, t, dwell_time.
- CSV uses 17 significant digits; parquet uses an explicit schema.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd
import pyarrow as pa

from ..core.hybrid_system import Branch, HybridTrajectory
from ..errors import ConfigError

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy containers, enums and tuples to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, Branch):
        return value.value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n"


def write_json(data: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(dumps(data), encoding="utf-8")
    logger.debug("Wrote %s", path)
    return path


def parse_json(text: str, source: str = "<config>") -> Any:
    """json.loads with the error position turned into a ConfigError."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"{source}:{e.lineno}:{e.colno}: {e.msg}",
            {"source": source, "line": e.lineno, "column": e.colno},
        ) from e


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}", {"source": str(path)}) from e
    return parse_json(text, str(path))


# =============================================================================
# Trajectory tables
# =============================================================================


def _columns(prefix: str, count: int) -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(count)]


def trajectory_frame(traj: HybridTrajectory, n: int, m: int) -> pd.DataFrame:
    """Flatten a trajectory into one row per sample.

    Args:
        traj: trajectory to flatten
        n: state dimension
        m: control dimension

    Returns:
        DataFrame with the trajectory.csv columns in order
    """
    blocks = []
    pending = list(traj.jumps)
    for i, arc in enumerate(traj.arcs):
        rows = arc.times.size
        block = {"t": arc.times.astype(float)}
        for j, name in enumerate(_columns("x", n)):
            block[name] = arc.states[:, j]
        costates = arc.costates if arc.costates is not None else np.full((rows, n), np.nan)
        for j, name in enumerate(_columns("p", n)):
            block[name] = costates[:, j]
        controls = arc.controls
        if controls is None or controls.shape[1] != m:
            controls = np.full((rows, m), np.nan)
        for j, name in enumerate(_columns("u", m)):
            block[name] = controls[:, j]
        jump = np.zeros(rows, dtype=np.int32)
        depth = np.zeros(rows, dtype=np.int32)
        branch = np.full(rows, "", dtype=object)
        if i > 0 and pending and rows and pending[0].t == arc.times[0]:
            record = pending.pop(0)
            jump[0] = 1
            depth[0] = record.beating_depth
            branch[0] = record.branch.value
        block["jump"] = jump
        block["beating_depth"] = depth
        block["branch"] = branch
        blocks.append(pd.DataFrame(block))
    if pending:
        logger.warning("%d jump records did not line up with an arc start", len(pending))
    columns = ["t", *_columns("x", n), *_columns("p", n), *_columns("u", m), "jump", "beating_depth", "branch"]
    if not blocks:
        return pd.DataFrame(columns=columns)
    return pd.concat(blocks, ignore_index=True)[columns]


def trajectory_schema(n: int, m: int) -> pa.Schema:
    fields = [("t", pa.float64())]
    fields += [(name, pa.float64()) for name in _columns("x", n) + _columns("p", n) + _columns("u", m)]
    fields += [("jump", pa.int32()), ("beating_depth", pa.int32()), ("branch", pa.string())]
    return pa.schema(fields)


def write_trajectory_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
    return path


def read_trajectory_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, keep_default_na=False, na_values=["nan"], dtype={"branch": str})


def state_deltas(a: pd.DataFrame, b: pd.DataFrame, n: int, times: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Per-time-sample state differences a − b, each trajectory sampled by linear interpolation.

    Sampling at a reset time takes the post-reset row, since the trajectory
    tables list the pre-reset sample first.
    """
    if times is None:
        times = np.unique(b["t"].to_numpy())
    out = {"t": times}
    for name in _columns("x", n):
        xa = _sample(a["t"].to_numpy(), a[name].to_numpy(), times)
        xb = _sample(b["t"].to_numpy(), b[name].to_numpy(), times)
        out[f"d{name}"] = xa - xb
    frame = pd.DataFrame(out)
    frame["norm"] = np.sqrt((frame[[f"d{name}" for name in _columns("x", n)]] ** 2).sum(axis=1))
    return frame


def _sample(t: np.ndarray, values: np.ndarray, at: np.ndarray) -> np.ndarray:
    # np.interp needs strictly increasing abscissae; keep the last row per time.
    keep = np.append(t[1:] != t[:-1], True)
    return np.interp(at, t[keep], values[keep])


# =============================================================================
# Jump tables
# =============================================================================


def jump_times_frame(jump_times, dwell_times) -> pd.DataFrame:
    """One row per reset: jump (0-based), t, dwell_time."""
    times = np.asarray(jump_times, dtype=float)
    dwell = np.asarray(dwell_times, dtype=float)
    if dwell.shape != times.shape:
        raise ValueError(f"got {times.size} jump times but {dwell.size} dwell times")
    return pd.DataFrame({"jump": np.arange(times.size, dtype=np.int32), "t": times, "dwell_time": dwell})


def write_jump_times_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.debug("Wrote %s", path)
    return path


def finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


__all__ = [
    "CSV_FLOAT_FORMAT",
    "dumps",
    "finite_or_none",
    "jump_times_frame",
    "parse_json",
    "read_json",
    "read_trajectory_csv",
    "state_deltas",
    "to_jsonable",
    "trajectory_frame",
    "trajectory_schema",
    "write_jump_times_csv",
    "write_json",
    "write_trajectory_csv",
]
