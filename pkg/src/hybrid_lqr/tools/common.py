# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Shared plumbing for the MCP tools: build a RunConfig from tool arguments,
validate it on dry runs, and run the task off the event loop otherwise.
"""

import asyncio
import logging
from typing import Any, Optional

from ..config import RunConfig
from ..errors import HybridControlError
from ..runner import check_scenario, run
from ..utils.serialization import to_jsonable

logger = logging.getLogger(__name__)


def build_config(task: str, preset: str = "", scenario: Optional[dict] = None, **fields: Any) -> RunConfig:
    """Empty strings and None mean "not given"."""
    data: dict[str, Any] = {"task": task}
    if preset:
        data["preset"] = preset
    if scenario:
        data["scenario"] = scenario
    data.update({k: v for k, v in fields.items() if v not in (None, "", [], {})})
    return RunConfig.from_dict(data, "<tool arguments>")


async def run_task(task: str, dry_run: bool, preset: str = "", scenario: Optional[dict] = None, **fields: Any) -> dict:
    """Validate or run one task and return a JSON-able result with a "status" key."""
    try:
        config = build_config(task, preset, scenario, **fields)
    except HybridControlError as e:
        return to_jsonable(e.to_dict())

    if dry_run:
        validation = check_scenario(config)
        if validation["errors"]:
            return {"status": "validation_failed", "validation": validation}
        return {
            "status": "validation_passed",
            "message": "Dry run passed. Set dry_run=False to run the task.",
            "validation": validation,
        }

    try:
        result = await asyncio.to_thread(run, config)
    except HybridControlError as e:
        logger.exception("Task %s failed", task)
        return to_jsonable(e.to_dict())
    return {
        "status": "completed",
        "report_path": str(result.report_path),
        "artifacts": [str(p) for p in result.artifacts],
        "report": to_jsonable(result.report),
    }


__all__ = ["build_config", "run_task"]
