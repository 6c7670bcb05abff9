# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
MCP tools for the Riccati-based solvers: classical LQR/AQR and the
temporally and spatially triggered hybrid regulators.
"""

from typing import Optional

from .common import run_task


def register_solver_tools(mcp):
    """Register LQR and hybrid LQR solver tools."""

    @mcp.tool()
    async def solve_lqr(
        preset: str = "",
        scenario: Optional[dict] = None,
        affine: bool = False,
        step: Optional[float] = None,
        out: str = "",
        dry_run: bool = True,
    ) -> dict:
        """Finite-horizon LQR (or AQR with the scenario's drift) ignoring resets.

        Args:
            preset: Preset name (or give scenario)
            scenario: Inline scenario document
            affine: Include the drift b (AQR)
            step: Riccati integration step
            out: Output directory
            dry_run: If True, validate only (default: True)
        """
        return await run_task("aqr" if affine else "lqr", dry_run, preset, scenario, step=step, out=out)

    @mcp.tool()
    async def solve_temporal_hlqr(
        schedule: list[float],
        preset: str = "",
        scenario: Optional[dict] = None,
        step: Optional[float] = None,
        out: str = "",
        dry_run: bool = True,
    ) -> dict:
        """Hybrid LQR with resets at prescribed times.

        Args:
            schedule: Strictly increasing jump times inside the horizon
            preset: Preset name (or give scenario)
            scenario: Inline scenario document
            step: Riccati integration step
            out: Output directory
            dry_run: If True, validate only (default: True)
        """
        return await run_task("hlqr-temporal", dry_run, preset, scenario, schedule=schedule, step=step, out=out)

    @mcp.tool()
    async def solve_spatial_hlqr(
        preset: str = "",
        scenario: Optional[dict] = None,
        branch_overrides: Optional[dict[str, str]] = None,
        explore_branches: bool = False,
        max_iter: Optional[int] = None,
        step: Optional[float] = None,
        out: str = "",
        dry_run: bool = True,
    ) -> dict:
        """Hybrid LQR with resets on the guard, solved by forward-backward iteration.

        Args:
            preset: Preset name (or give scenario)
            scenario: Inline scenario document
            branch_overrides: Map of 0-based jump index to "plus" or "minus"
            explore_branches: Also solve every single-jump branch flip and keep the cheapest
            max_iter: Iteration limit of the solver
            step: Integration step
            out: Output directory
            dry_run: If True, validate only (default: True)
        """
        solver = {}
        if branch_overrides:
            solver["branch_overrides"] = branch_overrides
        if max_iter is not None:
            solver["max_iter"] = max_iter
        return await run_task(
            "hlqr-spatial",
            dry_run,
            preset,
            scenario,
            solver=solver,
            explore_branches=explore_branches or None,
            step=step,
            out=out,
        )


__all__ = ["register_solver_tools"]
