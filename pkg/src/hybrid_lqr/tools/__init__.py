# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
MCP tools for the hybrid LQR solvers.
"""

from .analysis_tools import register_analysis_tools
from .dp_tools import register_dp_tools
from .filesystem_tools import register_filesystem_tools
from .preset_tools import register_preset_tools
from .solver_tools import register_solver_tools

__all__ = [
    "register_analysis_tools",
    "register_dp_tools",
    "register_filesystem_tools",
    "register_preset_tools",
    "register_solver_tools",
]
