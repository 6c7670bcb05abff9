# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
MCP tools for guard analysis, simulation and Zeno diagnostics.

All task tools follow the same pattern:
1. Resolve the preset or inline scenario
2. With dry_run=True (the default) only validate and summarize
3. Otherwise run the task and return the report plus artifact paths
"""

from typing import Optional

from .common import run_task


def register_analysis_tools(mcp):
    """Register analysis and simulation tools."""

    @mcp.tool()
    async def analyze_guard(
        preset: str = "", scenario: Optional[dict] = None, out: str = "", dry_run: bool = True
    ) -> dict:
        """Beating sets, trivial blocking, invariant guard and WAR check for a scenario.

        Args:
            preset: Preset name (or give scenario)
            scenario: Inline scenario document
            out: Output directory (default: HLQR_OUTPUT_DIR/analyze)
            dry_run: If True, validate only (default: True)
        """
        return await run_task("analyze", dry_run, preset, scenario, out=out)

    @mcp.tool()
    async def simulate_hybrid(
        preset: str = "",
        scenario: Optional[dict] = None,
        x0: Optional[list[float]] = None,
        horizon: Optional[list[float]] = None,
        step: Optional[float] = None,
        max_jumps: Optional[int] = None,
        out: str = "",
        dry_run: bool = True,
    ) -> dict:
        """Simulate the uncontrolled hybrid flow and write trajectory.csv.

        Args:
            preset: Preset name (or give scenario)
            scenario: Inline scenario document
            x0: Initial state override
            horizon: [t0, tf] override
            step: Integration step
            max_jumps: Jump budget before a suspected-Zeno stop
            out: Output directory
            dry_run: If True, validate only (default: True)
        """
        return await run_task(
            "simulate", dry_run, preset, scenario, x0=x0, horizon=horizon, step=step, max_jumps=max_jumps, out=out
        )

    @mcp.tool()
    async def estimate_zeno(
        preset: str = "",
        scenario: Optional[dict] = None,
        max_jumps: Optional[int] = None,
        params: Optional[dict] = None,
        out: str = "",
        dry_run: bool = True,
    ) -> dict:
        """Simulate until jumps accumulate and extrapolate the Zeno time.

        Closed-form Zeno times are included for the two Zeno presets.

        Args:
            preset: Preset name, e.g. first-order-zeno
            scenario: Inline scenario document
            max_jumps: Jumps to simulate before extrapolating (default 20)
            params: Zeno parameter overrides, e.g. {"e": 0.8} or {"c": 0.3}
            out: Output directory
            dry_run: If True, validate only (default: True)
        """
        return await run_task("zeno", dry_run, preset, scenario, max_jumps=max_jumps, zeno=params, out=out)


__all__ = ["register_analysis_tools"]
