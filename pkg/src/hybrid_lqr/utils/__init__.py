# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Utility modules for artifact serialization and report building.
"""

from .report_builders import BaseReportBuilder, ComparisonReportBuilder, TrajectoryReportBuilder
from .serialization import (
    dumps,
    parse_json,
    read_json,
    to_jsonable,
    trajectory_frame,
    write_json,
    write_trajectory_csv,
)

__all__ = [
    "BaseReportBuilder",
    "ComparisonReportBuilder",
    "TrajectoryReportBuilder",
    "dumps",
    "parse_json",
    "read_json",
    "to_jsonable",
    "trajectory_frame",
    "write_json",
    "write_trajectory_csv",
]
