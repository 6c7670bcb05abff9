# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Report builders for run artifacts.

This module provides:
1. BaseReportBuilder - message collection and table saving shared by all builders
2. TrajectoryReportBuilder - trajectory.csv / trajectory.parquet plus a summary
3. ComparisonReportBuilder - MP-vs-DP cost table and per-sample state deltas

All builders follow the same pattern:
1. Initialize with the output directory
2. Check the inputs, collecting warnings and errors instead of raising
3. Write the tables
4. Return a JSON-able summary that includes the collected messages
"""

import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from ..core.dp_oracle import DPRollout
from ..core.hybrid_system import HybridTrajectory
from .serialization import (
    CSV_FLOAT_FORMAT,
    finite_or_none,
    state_deltas,
    trajectory_frame,
    trajectory_schema,
    write_trajectory_csv,
)

logger = logging.getLogger(__name__)

MIN_DWELL_WARNING = 1e-9
COST_GAP_TOLERANCE = 0.10


class BaseReportBuilder(ABC):
    """Base class for builders that turn solver results into artifacts."""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.errors: list[str] = []
        self.warnings: list[str] = []
        self.artifacts: list[Path] = []

    def _add_error(self, msg: str):
        """Log and store an error message."""
        self.errors.append(msg)
        logger.error(msg)

    def _add_warning(self, msg: str):
        """Log and store a warning message."""
        self.warnings.append(msg)
        logger.warning(msg)

    def reset_messages(self):
        """Reset errors, warnings and artifacts for a new build."""
        self.errors = []
        self.warnings = []
        self.artifacts = []

    def messages(self) -> dict:
        return {"errors": list(self.errors), "warnings": list(self.warnings)}

    # =========================================================================
    # Table saving utilities
    # =========================================================================

    def save_csv(self, df: pd.DataFrame, name: str) -> Path:
        path = self.output_dir / name
        df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
        self.artifacts.append(path)
        return path

    def save_parquet(self, df: pd.DataFrame, name: str, schema: pa.Schema) -> Path:
        path = self.output_dir / name
        table = pa.Table.from_pandas(df, schema=schema, preserve_index=False)
        pq.write_table(table, path)
        self.artifacts.append(path)
        return path

    @abstractmethod
    def build(self, *args, **kwargs) -> dict:
        """Write the builder's artifacts and return a summary."""


class TrajectoryReportBuilder(BaseReportBuilder):
    """Writes a trajectory as CSV and parquet and summarizes its jumps."""

    def build(
        self,
        traj: HybridTrajectory,
        n: int,
        m: int,
        cost: Optional[float] = None,
        prefix: str = "",
    ) -> dict:
        """Write <prefix>trajectory.csv and <prefix>trajectory.parquet.

        Args:
            traj: trajectory to export
            n, m: state and control dimensions
            cost: evaluated cost of the trajectory, if any
            prefix: file name prefix, used when one run writes several trajectories

        Returns:
            Summary dict with jump data, artifacts and collected messages
        """
        self.reset_messages()
        df = trajectory_frame(traj, n, m)
        write_trajectory_csv(df, self.output_dir / f"{prefix}trajectory.csv")
        self.artifacts.append(self.output_dir / f"{prefix}trajectory.csv")
        self.save_parquet(df, f"{prefix}trajectory.parquet", trajectory_schema(n, m))

        beating = [j for j in traj.jumps if j.beating_depth > 0]
        if beating:
            self._add_warning(f"{len(beating)} resets were beating (depth >= 1)")
        if traj.jumps and traj.min_dwell_time < MIN_DWELL_WARNING:
            self._add_warning(f"minimum dwell time {traj.min_dwell_time:.3e} is below {MIN_DWELL_WARNING:g}")
        if not np.all(np.isfinite(traj.final_state)):
            self._add_error("final state is not finite")

        return {
            "rows": int(len(df)),
            "jump_count": traj.jump_count,
            "jump_times": [j.t for j in traj.jumps],
            "min_dwell_time": finite_or_none(traj.min_dwell_time) if traj.jumps else None,
            "final_time": traj.final_time,
            "final_state": traj.final_state.tolist(),
            "cost": cost,
            "artifacts": [p.name for p in self.artifacts],
            **self.messages(),
        }


class ComparisonReportBuilder(BaseReportBuilder):
    """Side-by-side view of a maximum-principle solution and a DP rollout."""

    def build(
        self,
        mp_traj: HybridTrajectory,
        mp_cost: float,
        rollout: DPRollout,
        n: int,
    ) -> dict:
        """Write cost_table.csv and state_deltas.csv.

        State deltas are taken at the DP time samples, MP minus DP.
        """
        self.reset_messages()
        mp_jumps = mp_traj.jump_count
        dp_jumps = rollout.jump_count
        gap = abs(mp_cost - rollout.cost) / max(abs(mp_cost), np.finfo(float).tiny)

        table = pd.DataFrame(
            {
                "method": ["mp", "dp"],
                "cost": [mp_cost, rollout.cost],
                "jump_count": [mp_jumps, dp_jumps],
            }
        )
        self.save_csv(table, "cost_table.csv")

        mp_df = trajectory_frame(mp_traj, n, 0)
        dp_df = trajectory_frame(rollout.trajectory, n, 0)
        deltas = state_deltas(mp_df, dp_df, n)
        self.save_csv(deltas, "state_deltas.csv")

        if rollout.truncated:
            self._add_error("DP rollout left the grid before the end of the horizon")
        if mp_jumps != dp_jumps:
            self._add_warning(f"jump counts differ: mp={mp_jumps}, dp={dp_jumps}")
        if not gap <= COST_GAP_TOLERANCE:
            self._add_warning(f"relative cost gap {gap:.3g} exceeds {COST_GAP_TOLERANCE:g}")

        return {
            "jump_count_mp": mp_jumps,
            "jump_count_dp": dp_jumps,
            "cost_mp": mp_cost,
            "cost_dp": rollout.cost,
            "relative_cost_gap": gap if math.isfinite(gap) else None,
            "max_state_delta": float(deltas["norm"].max()) if len(deltas) else 0.0,
            "final_state_delta": float(deltas["norm"].iloc[-1]) if len(deltas) else 0.0,
            "artifacts": [p.name for p in self.artifacts],
            **self.messages(),
        }


__all__ = ["BaseReportBuilder", "ComparisonReportBuilder", "TrajectoryReportBuilder"]
