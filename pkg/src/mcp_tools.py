# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
A FastMCP server exposing the hybrid LQR solvers: guard analysis,
simulation, Zeno diagnostics, classical and hybrid LQR, and the DP oracle.

Configuration:
    Set MCP_TOOL_FILTER environment variable to filter tools and prompts:
    - "analysis" : Presets, guard analysis, simulation and Zeno tools
    - "solvers"  : Presets, LQR / hybrid LQR solvers and the DP oracle
    - "all"      : All tools (default)

    Set MCP_TRANSPORT environment variable to choose transport mode:
    - "stdio" (default): Standard input/output, used by VS Code, Cursor, Claude Desktop
    - "http": Streamable HTTP, accessible via HTTP requests

    For HTTP transport, configure:
    - MCP_HTTP_HOST: Host to bind to (default: localhost)
    - MCP_HTTP_PORT: Port to listen on (default: 5000)

The environment variables can be set in a .env file or
passed directly to the MCP server as input parameters.
"""

import logging
import os
from pathlib import Path

from fastmcp import FastMCP
from fastmcp.utilities.logging import configure_logging

from hybrid_lqr.core.presets import list_presets
from hybrid_lqr.tools import (
    register_analysis_tools,
    register_dp_tools,
    register_filesystem_tools,
    register_preset_tools,
    register_solver_tools,
)
from hybrid_lqr.utils.serialization import dumps

logger = logging.getLogger(__name__)

TRANSPORT = os.getenv("MCP_TRANSPORT", "stdio").lower()
VALID_TRANSPORTS = ["stdio", "http"]

if TRANSPORT not in VALID_TRANSPORTS:
    logging.warning("Invalid MCP_TRANSPORT '%s', defaulting to 'stdio'", TRANSPORT)
    TRANSPORT = "stdio"

if TRANSPORT == "http":
    HTTP_HOST = os.getenv("MCP_HTTP_HOST", "localhost")
    try:
        HTTP_PORT = int(os.getenv("MCP_HTTP_PORT", "5000"))
    except ValueError:
        logging.warning("Invalid MCP_HTTP_PORT '%s', defaulting to 5000", os.getenv("MCP_HTTP_PORT"))
        HTTP_PORT = 5000

TOOL_FILTER = os.getenv("MCP_TOOL_FILTER", "all").lower()
VALID_TOOL_FILTERS = ["analysis", "solvers", "all"]

if TOOL_FILTER not in VALID_TOOL_FILTERS:
    logging.warning("Invalid MCP_TOOL_FILTER '%s', defaulting to 'all'", TOOL_FILTER)
    TOOL_FILTER = "all"

server_name = "Hybrid LQR MCP Server" if TOOL_FILTER == "all" else f"Hybrid LQR MCP Server ({TOOL_FILTER})"
mcp = FastMCP(server_name)

configure_logging(tracebacks_max_frames=20)


def _get_formats_reference_content() -> str:
    """Load the artifact format reference from a markdown file."""
    reference_path = Path(__file__).parent / "hybrid_lqr" / "FORMATS.md"
    try:
        return reference_path.read_text(encoding="utf-8")
    except FileNotFoundError:
        logging.error("Formats reference file not found at %s", reference_path)
        return "Artifact format reference is currently unavailable."


# =============================================================================
# Tools - Conditionally registered based on TOOL_FILTER
# =============================================================================

register_preset_tools(mcp)
register_filesystem_tools(mcp)

if TOOL_FILTER in ["all", "analysis"]:
    register_analysis_tools(mcp)
if TOOL_FILTER in ["all", "solvers"]:
    register_solver_tools(mcp)
    register_dp_tools(mcp)

logger.info("%s configured with tool filter '%s'", server_name, TOOL_FILTER)

# =============================================================================
# Resources
# =============================================================================


@mcp.resource("hybrid-lqr://reference/formats")
def get_formats_reference() -> str:
    """Scenario document schema, trajectory.csv columns, report.json and value grid layouts."""
    return _get_formats_reference_content()


@mcp.resource("hybrid-lqr://presets")
def get_presets_catalog() -> str:
    """Names and descriptions of the canned scenarios."""
    return dumps(list_presets())


# =============================================================================
# Prompts - Conditionally registered based on TOOL_FILTER
# =============================================================================

if TOOL_FILTER in ["all", "analysis"]:

    @mcp.prompt(name="analysis_prompt")
    def analysis_prompt() -> str:
        """Prompt for structural analysis and simulation of hybrid systems."""
        return """\
        You are an assistant for analysing linear hybrid systems: continuous flow
        ẋ = Ax + Bu (+ b), a guard hyperplane λ⊤x = a, and a reset x⁺ = Cx⁻ (+ κ).

        ## Recommended Workflow

        ### Step 1: Pick a scenario
        ```
        list_scenario_presets()
        get_scenario_config(preset="section6-contracting")
        ```
        Edit the returned document and pass it as `scenario` to use your own system.

        ### Step 2: Structural checks
        ```
        analyze_guard(preset="section6-contracting", dry_run=False)
        ```
        Report whether the system is trivially blocking, the beating-set dimensions,
        the invariant guard and whether resets are weakly actuated (λ⊤B = 0).

        ### Step 3: Simulate
        ```
        simulate_hybrid(preset="mechanical-spring", dry_run=False)
        preview_csv_file(file_path="simulate/trajectory.csv")
        ```

        ### Step 4: Zeno diagnostics
        ```
        estimate_zeno(preset="first-order-zeno", dry_run=False)
        ```
        A suspected-Zeno stop is expected here; report the extrapolated Zeno time
        next to the closed form.

        Always validate with dry_run=True first when using an inline scenario.
        If a tool returns an error status, return the full error message and details.
        """


if TOOL_FILTER in ["all", "solvers"]:

    @mcp.prompt(name="solvers_prompt")
    def solvers_prompt() -> str:
        """Prompt for optimal control of hybrid systems."""
        return """\
        You are an assistant for optimal control of hybrid systems with quadratic cost
        ½∫(x⊤Qx + u⊤Ru + 2x⊤Nu)dt + ½x(T)⊤Fx(T).

        ## Tools

        | Tool | Problem |
        |------|---------|
        | **solve_lqr** | Classical LQR / AQR, no resets |
        | **solve_temporal_hlqr** | Resets at prescribed times |
        | **solve_spatial_hlqr** | Resets when the state hits the guard |
        | **solve_dp** | Grid dynamic programming (verification oracle) |
        | **compare_mp_dp** | Spatial solver against the DP rollout |

        ## Recommended Workflow

        1. `solve_spatial_hlqr(preset="section6-contracting", dry_run=True)` to validate
        2. Run it with `dry_run=False`; read jump_count, branch_choices and cost
        3. If a jump has two extremal branches, try `explore_branches=True` or
           `branch_overrides={"0": "minus"}` and compare costs
        4. `compare_mp_dp(preset="section6-contracting", dry_run=False)` to check
           against the DP oracle (slow at full resolution)

        Error statuses such as no_extremal_jump, beating_encountered or
        non_convergence are solver outcomes, not tool failures: report them with details.
        """


# =============================================================================
# Main Entry Point
# =============================================================================

if __name__ == "__main__":
    logger.info("Starting Hybrid LQR MCP Server in %s mode", TRANSPORT.upper())

    if TRANSPORT == "http":
        logger.info("HTTP server will listen on %s:%s", HTTP_HOST, HTTP_PORT)
        mcp.run(
            transport="http",
            host=HTTP_HOST,
            port=HTTP_PORT,
        )
    else:
        mcp.run()
