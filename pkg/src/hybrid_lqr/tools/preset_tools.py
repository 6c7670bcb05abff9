# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
MCP tools for browsing the canned scenarios.
"""

import logging

from ..core.presets import PRESETS, ScenarioPreset, get_preset, list_presets
from ..errors import HybridControlError
from ..utils.serialization import to_jsonable

logger = logging.getLogger(__name__)


def register_preset_tools(mcp):
    """Register preset discovery tools with the FastMCP server."""

    @mcp.tool()
    async def list_scenario_presets() -> dict:
        """List the canned scenarios usable as `preset` in every task tool."""
        presets = list_presets()
        return {"status": "ok", "count": len(presets), "presets": presets}

    @mcp.tool()
    async def get_scenario_config(preset: str) -> dict:
        """Return a preset as a scenario document.

        The document can be edited and passed back as `scenario` to any task tool.

        Args:
            preset: Preset name (see list_scenario_presets)
        """
        try:
            scenario = get_preset(preset)
        except HybridControlError as e:
            return to_jsonable(e.to_dict())
        return {"status": "ok", "scenario": to_jsonable(scenario.to_config())}

    @mcp.tool()
    async def validate_scenario(scenario: dict) -> dict:
        """Check that an inline scenario document parses into a valid system and cost.

        Args:
            scenario: Scenario document with system, cost, horizon and x0
        """
        try:
            parsed = ScenarioPreset.from_config(scenario)
        except HybridControlError as e:
            return {"status": "validation_failed", "error": str(e), "details": to_jsonable(e.details)}
        return {
            "status": "validation_passed",
            "name": parsed.name,
            "n": parsed.system.n,
            "m": parsed.system.m,
            "affine": parsed.system.is_affine,
            "known_presets": sorted(PRESETS),
        }


__all__ = ["register_preset_tools"]
