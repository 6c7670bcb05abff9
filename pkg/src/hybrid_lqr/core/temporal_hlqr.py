# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Hybrid LQR/AQR with jumps at prescribed times.

The backward sweep never looks at a state trajectory: at every scheduled
time it applies S⁻ = C⊤S⁺C and c⁻ = C⊤(S⁺κ + c⁺), and the forward pass then
resets x⁺ = Cx⁻ + κ at the same times. C may be singular here.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..context import Tolerances, default_tolerances
from ..errors import IllConditionedError, InvalidModelError
from .hybrid_system import Branch, HybridTrajectory, JumpRecord
from .lqr_core import (
    QuadraticCost,
    RiccatiSolution,
    SweepSegment,
    closed_loop_arc,
    default_step,
    integrate_riccati,
    tilde,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JumpSchedule:
    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if any(not np.isfinite(t) for t in times):
            raise InvalidModelError("jump times must be finite")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidModelError(f"jump times must be strictly increasing, got {list(times)}")
        object.__setattr__(self, "times", times)

    @property
    def min_gap(self) -> float:
        gaps = np.diff(self.times)
        return float(gaps.min()) if gaps.size else float("inf")

    def validate_horizon(self, t_span: tuple[float, float]):
        t0, tf = float(t_span[0]), float(t_span[1])
        outside = [t for t in self.times if not t0 < t < tf]
        if outside:
            raise InvalidModelError(
                f"jump times must lie strictly inside ({t0}, {tf})", {"outside": outside}
            )


def _affine_parts(n: int, affine: Optional[tuple]) -> tuple[np.ndarray, np.ndarray]:
    if affine is None:
        return np.zeros(n), np.zeros(n)
    b, kappa = affine
    return np.asarray(b, dtype=float).reshape(n), np.asarray(kappa, dtype=float).reshape(n)


def _jump_map(C: np.ndarray, kappa: np.ndarray, S_plus: np.ndarray, c_plus: np.ndarray):
    S_minus = C.T @ S_plus @ C
    return 0.5 * (S_minus + S_minus.T), C.T @ (S_plus @ kappa + c_plus)


def check_jump_identity(
    sol: RiccatiSolution, C: np.ndarray, kappa: np.ndarray, tol: Optional[Tolerances] = None
):
    """Verify S⁻ = C⊤S⁺C and c⁻ = C⊤(S⁺κ + c⁺) at every jump of sol.

    Raises:
        IllConditionedError: an identity fails beyond symmetry_rtol.
    """
    tol = tol or default_tolerances()
    C = np.asarray(C, dtype=float)
    kappa = np.asarray(kappa, dtype=float).reshape(C.shape[0])
    for t_jump in sol.jump_times:
        (S_m, c_m), (S_p, c_p) = sol.one_sided(t_jump)
        S_chk, c_chk = _jump_map(C, kappa, S_p, c_p)
        S_err = float(np.linalg.norm(S_m - S_chk))
        c_err = float(np.linalg.norm(c_m - c_chk))
        S_bad = S_err > tol.symmetry_rtol * (1.0 + np.linalg.norm(S_chk))
        c_bad = c_err > tol.symmetry_rtol * (1.0 + np.linalg.norm(c_chk))
        if S_bad or c_bad:
            raise IllConditionedError(
                f"co-state jump identity fails at t={t_jump:.10g}",
                {"t": t_jump, "S_error": S_err, "c_error": c_err},
            )


def solve_temporal_costate(
    A: np.ndarray,
    B: np.ndarray,
    cost: QuadraticCost,
    sched: JumpSchedule,
    C: np.ndarray,
    t_span: tuple[float, float],
    step: Optional[float] = None,
    affine: Optional[tuple] = None,
) -> RiccatiSolution:
    """Backward sweep restarted at every scheduled jump.

    Args:
        affine: optional (b, κ) pair for the AQR variant.

    Returns:
        RiccatiSolution holding both one-sided values at each jump time.
    """
    t0, tf = float(t_span[0]), float(t_span[1])
    if not tf > t0:
        raise InvalidModelError(f"horizon must satisfy t0 < tf, got {t_span}")
    sched.validate_horizon(t_span)
    C = np.asarray(C, dtype=float)
    if C.shape != (cost.n, cost.n):
        raise InvalidModelError(f"C must be {cost.n}x{cost.n}, got {C.shape}")
    td = tilde(cost, A, B)
    b, kappa = _affine_parts(cost.n, affine)
    step = default_step(t_span) if step is None else float(step)

    S, c = cost.F, cost.r
    hi = tf
    segments: list[SweepSegment] = []
    for t_jump in reversed(sched.times):
        seg = integrate_riccati(td, b, S, c, hi, t_jump, step)
        segments.append(seg)
        S, c = _jump_map(C, kappa, seg.S[0], seg.c[0])
        hi = t_jump
    segments.append(integrate_riccati(td, b, S, c, hi, t0, step))
    segments.reverse()

    sol = RiccatiSolution.from_segments(segments, sched.times)
    check_jump_identity(sol, C, kappa)
    logger.debug("Temporal sweep with %d jumps on [%g, %g]", len(sched.times), t0, tf)
    return sol


def reconstruct_temporal(
    A: np.ndarray,
    B: np.ndarray,
    cost: QuadraticCost,
    sched: JumpSchedule,
    C: np.ndarray,
    sol: RiccatiSolution,
    x0: Sequence[float],
    affine: Optional[tuple] = None,
) -> HybridTrajectory:
    """Forward closed loop with x⁺ = Cx⁻ + κ at every scheduled time."""
    if tuple(sol.jump_times) != tuple(sched.times):
        raise InvalidModelError("solution was produced for a different schedule")
    td = tilde(cost, A, B)
    C = np.asarray(C, dtype=float)
    b, kappa = _affine_parts(cost.n, affine)

    x = np.asarray(x0, dtype=float)
    arcs, jumps = [], []
    last = sol.t0
    for lo, hi in sol.segment_bounds:
        times = sol.grid[lo : hi + 1]
        arc = closed_loop_arc(td, b, sol.evaluate, x, times)
        arcs.append(arc)
        t_end = float(times[-1])
        if t_end in sched.times:
            x_pre = arc.states[-1]
            x = C @ x_pre + kappa
            jumps.append(JumpRecord(t=t_end, x_pre=x_pre, x_post=x, branch=Branch.NA, dwell_time=t_end - last))
            last = t_end
    return HybridTrajectory(arcs=tuple(arcs), jumps=tuple(jumps), t0=sol.t0, tf=sol.tf)


__all__ = ["JumpSchedule", "check_jump_identity", "reconstruct_temporal", "solve_temporal_costate"]
