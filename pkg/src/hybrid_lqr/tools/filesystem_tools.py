# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
MCP tools for the run artifact directory.

These tools manage the configured output directory and enable:
- Listing artifacts written by earlier runs
- Previewing trajectory and comparison CSV files
- Reading report.json documents

Configuration:
- Set HLQR_OUTPUT_DIR environment variable to specify the output directory
"""

from datetime import datetime
from pathlib import Path

from ..context import get_context
from ..errors import ConfigError
from ..utils.serialization import read_json, read_trajectory_csv, to_jsonable


def _get_output_directory() -> Path:
    return get_context().output_dir


def _resolve(file_path: str) -> Path:
    path = Path(file_path).expanduser()
    if not path.is_absolute():
        path = _get_output_directory() / path
    return path


def register_filesystem_tools(mcp):
    """Register artifact directory tools with the FastMCP server."""

    # ==========================================================================
    # Configuration and Discovery Tools
    # ==========================================================================

    @mcp.tool()
    async def configure_output_directory(directory_path: str = "") -> dict:
        """Get or set the directory where run artifacts are written.

        Can be set via the HLQR_OUTPUT_DIR environment variable.

        Args:
            directory_path: New directory path to configure (leave empty to just check current)
        """
        context = get_context()
        if directory_path:
            new_path = Path(directory_path).expanduser()
            if new_path.exists() and not new_path.is_dir():
                return {
                    "error": f"Not a directory: {directory_path}",
                    "current_directory": str(context.output_dir),
                    "status": "invalid",
                }
            context.output_dir = new_path
            return {
                "configured_directory": str(new_path),
                "exists": new_path.exists(),
                "instruction": f"Set HLQR_OUTPUT_DIR={directory_path} in your .env file to persist this setting",
                "status": "configured",
            }

        return {
            "current_directory": str(context.output_dir),
            "exists": context.output_dir.exists(),
            "env_var": "HLQR_OUTPUT_DIR",
            "status": "current",
        }

    @mcp.tool()
    async def list_output_files(file_pattern: str = "*", recursive: bool = True) -> dict:
        """List artifacts in the output directory.

        Args:
            file_pattern: Glob pattern for files (default: *)
            recursive: Search subdirectories (default: True)
        """
        out_dir = _get_output_directory()
        if not out_dir.exists():
            return {"error": f"Output directory does not exist: {out_dir}", "status": "directory_missing"}

        files = sorted(p for p in (out_dir.rglob(file_pattern) if recursive else out_dir.glob(file_pattern)))
        file_info = []
        for f in files:
            if not f.is_file():
                continue
            stat = f.stat()
            file_info.append(
                {
                    "path": str(f),
                    "relative_path": str(f.relative_to(out_dir)),
                    "name": f.name,
                    "size_bytes": stat.st_size,
                    "modified": datetime.fromtimestamp(stat.st_mtime).isoformat(),
                }
            )

        return {
            "output_directory": str(out_dir),
            "pattern": file_pattern,
            "recursive": recursive,
            "file_count": len(file_info),
            "files": file_info,
        }

    # ==========================================================================
    # Artifact Preview Tools
    # ==========================================================================

    @mcp.tool()
    async def preview_csv_file(file_path: str, max_rows: int = 10) -> dict:
        """Preview a trajectory or comparison CSV.

        Args:
            file_path: Path to CSV file (absolute or relative to the output directory)
            max_rows: Maximum rows to preview
        """
        path = _resolve(file_path)
        if not path.exists():
            return {"error": f"File not found: {path}", "status": "file_missing"}

        try:
            df = read_trajectory_csv(path)
        except Exception as e:
            return {"error": str(e), "status": "parse_error"}

        columns = []
        for col in df.columns:
            col_info = {
                "name": col,
                "dtype": str(df[col].dtype),
                "non_null_count": int(df[col].count()),
                "null_count": int(df[col].isnull().sum()),
            }
            if df[col].dtype.kind in "fi" and df[col].count():
                col_info["min"] = float(df[col].min())
                col_info["max"] = float(df[col].max())
            columns.append(col_info)

        info = {
            "file_path": str(path),
            "total_rows": len(df),
            "total_columns": len(df.columns),
            "columns": columns,
            "sample_data": df.head(max_rows).astype(object).where(df.head(max_rows).notna(), None).to_dict("records"),
        }
        if "jump" in df.columns:
            info["jump_rows"] = [int(i) for i in df.index[df["jump"] == 1]]
        return to_jsonable(info)

    @mcp.tool()
    async def read_report(file_path: str = "report.json") -> dict:
        """Read a report.json written by a run.

        Args:
            file_path: Path to the report (absolute or relative to the output directory)
        """
        path = _resolve(file_path)
        if not path.exists():
            return {"error": f"File not found: {path}", "status": "file_missing"}
        try:
            return {"status": "ok", "file_path": str(path), "report": read_json(path)}
        except ConfigError as e:
            return {"error": str(e), "status": "parse_error"}


__all__ = ["register_filesystem_tools"]
