# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
MCP tools for the dynamic-programming oracle and the MP-vs-DP comparison.
"""

from typing import Optional

from .common import run_task


def register_dp_tools(mcp):
    """Register DP oracle tools."""

    @mcp.tool()
    async def solve_dp(
        preset: str = "",
        scenario: Optional[dict] = None,
        grid: Optional[dict] = None,
        residual_samples: Optional[int] = None,
        seed: Optional[int] = None,
        out: str = "",
        dry_run: bool = True,
    ) -> dict:
        """Grid DP value function, Bellman residual and greedy rollout from x0.

        Writes value_grid.bin (with a JSON summary) next to trajectory.csv.
        The full-resolution grids of the planar presets take tens of seconds.

        Args:
            preset: Preset name (or give scenario)
            scenario: Inline scenario document
            grid: {"x": [[start, stop, num], ...], "t": [start, stop, num], "u": [[start, stop, num], ...]}
            residual_samples: Nodes sampled for the Bellman residual
            seed: Seed for the residual sample
            out: Output directory
            dry_run: If True, validate only (default: True)
        """
        return await run_task(
            "dp", dry_run, preset, scenario, grid=grid, residual_samples=residual_samples, seed=seed, out=out
        )

    @mcp.tool()
    async def compare_mp_dp(
        preset: str = "",
        scenario: Optional[dict] = None,
        grid: Optional[dict] = None,
        out: str = "",
        dry_run: bool = True,
    ) -> dict:
        """Spatial hybrid LQR against the DP rollout: cost table, jump counts and state deltas.

        Args:
            preset: Preset name (or give scenario)
            scenario: Inline scenario document
            grid: DP grid override
            out: Output directory
            dry_run: If True, validate only (default: True)
        """
        return await run_task("compare", dry_run, preset, scenario, grid=grid, out=out)


__all__ = ["register_dp_tools"]
