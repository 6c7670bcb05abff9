# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Configuration and context management for the hybrid LQR solvers.

This module loads environment variables (optionally from a .env file at the
repository root), and holds the numerical tolerances and artifact directory
shared by the CLI and the MCP tools.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Look for .env in the project root (parent of src directory)
env_path = Path(__file__).parent.parent.parent / ".env"
load_dotenv(dotenv_path=env_path)

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG if os.environ.get("DEBUG") == "1" else logging.INFO)


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name, "")
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning("Invalid %s '%s', defaulting to %s", name, raw, default)
        return default


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "")
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning("Invalid %s '%s', defaulting to %s", name, raw, default)
        return default


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every solver.

    guard_rtol scales with the state: a point is on the guard when
    |λ⊤x − a| ≤ guard_rtol·(‖λ‖·‖x‖ + |a|).
    """

    guard_rtol: float = 1e-10
    rank_rtol: float = 1e-10
    det_rtol: float = 1e-12
    symmetry_rtol: float = 1e-12
    hamiltonian_rtol: float = 1e-8
    double_root_rtol: float = 1e-12
    beta_rtol: float = 1e-10
    max_jumps: int = 10_000
    refine_maxiter: int = 60


@dataclass
class SolverContext:
    """Process-wide defaults: tolerances and where artifacts are written."""

    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: Path = field(default_factory=lambda: Path(__file__).parent.parent.parent / "output")

    @classmethod
    def from_env(cls) -> "SolverContext":
        tolerances = Tolerances(
            guard_rtol=_env_float("HLQR_GUARD_RTOL", Tolerances.guard_rtol),
            rank_rtol=_env_float("HLQR_RANK_RTOL", Tolerances.rank_rtol),
            max_jumps=_env_int("HLQR_MAX_JUMPS", Tolerances.max_jumps),
        )
        output_dir = os.getenv("HLQR_OUTPUT_DIR", "")
        ctx = cls(tolerances=tolerances)
        if output_dir:
            ctx.output_dir = Path(output_dir).expanduser()
        logger.debug("Solver context: %s, output %s", tolerances, ctx.output_dir)
        return ctx

    def with_tolerances(self, **overrides) -> "SolverContext":
        return SolverContext(tolerances=replace(self.tolerances, **overrides), output_dir=self.output_dir)

    def ensure_output_dir(self, subdir: Optional[str] = None) -> Path:
        target = self.output_dir / subdir if subdir else self.output_dir
        target.mkdir(parents=True, exist_ok=True)
        return target


_context: Optional[SolverContext] = None


def get_context() -> SolverContext:
    """Return the shared context, creating it from the environment on first use."""
    global _context
    if _context is None:
        _context = SolverContext.from_env()
    return _context


def default_tolerances() -> Tolerances:
    return get_context().tolerances
