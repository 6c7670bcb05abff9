# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Numerical core: system models, guard analysis, Zeno diagnostics, the
Riccati and hybrid LQR solvers, the DP oracle and the canned scenarios.
"""

from .dp_oracle import GridSpec, ValueGrid, bellman_residual, dp_rollout, dp_solve, load_value_grid, save_value_grid
from .guard_analysis import beating_flag, has_war, invariant_guard_report, is_trivially_blocking
from .hybrid_system import (
    AffineHybridSystem,
    HybridSystem,
    HybridTrajectory,
    JumpRecord,
    LinearHybridSystem,
    apply_reset,
    first_return_time,
    simulate,
    system_from_dict,
)
from .lqr_core import QuadraticCost, reconstruct, solve_riccati_backward, tilde, trajectory_cost
from .presets import PRESETS, ScenarioPreset, get_preset
from .spatial_hlqr import SpatialSolverOptions, explore_branches, multiplier_coefficients, solve_spatial
from .temporal_hlqr import JumpSchedule, reconstruct_temporal, solve_temporal_costate
from .zeno_models import estimate_zeno_time, zeno_time_first_order, zeno_time_second_order

__all__ = [
    "PRESETS",
    "AffineHybridSystem",
    "GridSpec",
    "HybridSystem",
    "HybridTrajectory",
    "JumpRecord",
    "JumpSchedule",
    "LinearHybridSystem",
    "QuadraticCost",
    "ScenarioPreset",
    "SpatialSolverOptions",
    "ValueGrid",
    "apply_reset",
    "beating_flag",
    "bellman_residual",
    "dp_rollout",
    "dp_solve",
    "estimate_zeno_time",
    "explore_branches",
    "first_return_time",
    "get_preset",
    "has_war",
    "invariant_guard_report",
    "is_trivially_blocking",
    "load_value_grid",
    "multiplier_coefficients",
    "reconstruct",
    "reconstruct_temporal",
    "save_value_grid",
    "simulate",
    "solve_riccati_backward",
    "solve_spatial",
    "solve_temporal_costate",
    "system_from_dict",
    "tilde",
    "trajectory_cost",
    "zeno_time_first_order",
    "zeno_time_second_order",
]
