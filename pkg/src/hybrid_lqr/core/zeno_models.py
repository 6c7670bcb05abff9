# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Zeno diagnostics for affine hybrid systems.

Two closed-form Zeno times (a first-order sliding example and the bouncing
ball), exact jump-time generators for both, and a geometric-tail estimator
that turns any suspected-Zeno jump history into an extrapolated Zeno time.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InvalidModelError
from .hybrid_system import ZenoReport

logger = logging.getLogger(__name__)

UNRELIABLE_RESIDUAL = 1e-3
MIN_JUMPS_FOR_ESTIMATE = 8


@dataclass(frozen=True)
class SecondOrderZenoTimes:
    """Bouncing-ball Zeno time with the printed coefficient 3 and with the series coefficient 1 + e."""

    printed: float
    series: float

    @property
    def gap(self) -> float:
        return self.printed - self.series

    def to_dict(self) -> dict:
        return {"printed": self.printed, "series": self.series, "gap": self.gap}


@dataclass(frozen=True)
class ZenoEstimate:
    jump_times: tuple[float, ...]
    partial_sums: tuple[float, ...]
    extrapolated_time: float
    ratio: float
    residual: float
    reliable: bool

    def to_dict(self) -> dict:
        return {
            "jump_times": list(self.jump_times),
            "partial_sums": list(self.partial_sums),
            "extrapolated_time": self.extrapolated_time,
            "ratio": self.ratio,
            "residual": self.residual,
            "reliable": self.reliable,
        }


def _check_first_order(a: float, b: float, c: float, x0: float, y0: float):
    if not (a > 0 and b > 0):
        raise InvalidModelError(f"first-order Zeno needs a, b > 0, got a={a}, b={b}")
    if not 0 < c < 1:
        raise InvalidModelError(f"first-order Zeno needs 0 < c < 1, got c={c}")
    if x0 < 0 or y0 < 0 or (x0 == 0 and y0 == 0):
        raise InvalidModelError(f"initial state must be nonnegative and nonzero, got ({x0}, {y0})")


def _check_second_order(g: float, e: float, x0: float, y0: float):
    if not g > 0:
        raise InvalidModelError(f"gravity g must be positive, got {g}")
    if not 0 < e < 1:
        raise InvalidModelError(f"restitution e must lie in (0, 1), got {e}")
    if x0 < 0:
        raise InvalidModelError(f"height x0 must be nonnegative, got {x0}")


def zeno_time_first_order(a: float, b: float, c: float, x0: float, y0: float) -> Optional[float]:
    """ζ₁ for ẋ = a, ẏ = −b with reset (x, 0) ↦ (0, c·x); None when ca ≥ b (not Zeno)."""
    _check_first_order(a, b, c, x0, y0)
    if c * a >= b:
        return None
    return y0 / b + c / (b - c * a) * (x0 + (a / b) * y0)


def zeno_time_second_order(g: float, e: float, x0: float, y0: float) -> SecondOrderZenoTimes:
    """Bouncing-ball Zeno time from height x0 and velocity y0."""
    _check_second_order(g, e, x0, y0)
    root = math.sqrt(y0 * y0 + 2 * g * x0)
    return SecondOrderZenoTimes(
        printed=y0 / g + 3 / (g * (1 - e)) * root,
        series=y0 / g + (1 + e) / (g * (1 - e)) * root,
    )


def first_order_zeno_report(
    a: float, b: float, c: float, x0: float, y0: float, max_jumps: int = 40, t0: float = 0.0
) -> ZenoReport:
    """Exact jump history of the first-order example from piecewise-linear arcs."""
    _check_first_order(a, b, c, x0, y0)
    x, y, t = float(x0), float(y0), float(t0)
    jump_times, dwell = [], []
    for _ in range(max_jumps):
        tau = y / b
        if tau <= 0 and jump_times:
            break
        x, t = x + a * tau, t + tau
        jump_times.append(t)
        dwell.append(tau)
        x, y = 0.0, c * x
    return ZenoReport(tuple(jump_times), tuple(dwell), t, "closed_form")


def second_order_zeno_report(
    g: float, e: float, x0: float, y0: float, max_jumps: int = 40, t0: float = 0.0
) -> ZenoReport:
    """Exact bounce times of the ball from parabolic arcs."""
    _check_second_order(g, e, x0, y0)
    speed = math.sqrt(y0 * y0 + 2 * g * x0)
    t = t0 + (y0 + speed) / g
    jump_times, dwell = [t], [t - t0]
    for _ in range(max_jumps - 1):
        speed *= e
        tau = 2 * speed / g
        if tau <= 0:
            break
        t += tau
        jump_times.append(t)
        dwell.append(tau)
    return ZenoReport(tuple(jump_times), tuple(dwell), t, "closed_form")


def estimate_zeno_time(report: ZenoReport) -> ZenoEstimate:
    """Fit a geometric ratio to the last half of the inter-jump gaps and sum the tail.

    The estimate is flagged unreliable when the log-linear fit residual exceeds
    UNRELIABLE_RESIDUAL or the fitted ratio is not in (0, 1).
    """
    jump_times = np.asarray(report.jump_times, dtype=float)
    if jump_times.size < MIN_JUMPS_FOR_ESTIMATE:
        raise InvalidModelError(
            f"need at least {MIN_JUMPS_FOR_ESTIMATE} jump times, got {jump_times.size}",
            {"jump_count": int(jump_times.size)},
        )
    if np.any(np.diff(jump_times) < 0):
        raise InvalidModelError("jump times must be non-decreasing")

    gaps = np.asarray(report.dwell_times[1:], dtype=float)
    tail = gaps[-math.ceil(gaps.size / 2) :]
    tail = tail[tail > 0]
    if tail.size < 2:
        return ZenoEstimate(tuple(jump_times), _partial_sums(report), math.inf, math.nan, math.inf, False)

    k = np.arange(tail.size, dtype=float)
    slope, intercept = np.polyfit(k, np.log(tail), 1)
    fitted = slope * k + intercept
    residual = float(np.sqrt(np.mean((np.log(tail) - fitted) ** 2)))
    ratio = float(math.exp(slope))
    reliable = residual <= UNRELIABLE_RESIDUAL and 0 < ratio < 1
    if 0 < ratio < 1:
        extrapolated = float(jump_times[-1] + tail[-1] * ratio / (1 - ratio))
    else:
        extrapolated = math.inf
    if not reliable:
        logger.warning("Zeno estimate unreliable: ratio=%.6g residual=%.3e", ratio, residual)
    return ZenoEstimate(
        jump_times=tuple(float(t) for t in jump_times),
        partial_sums=_partial_sums(report),
        extrapolated_time=extrapolated,
        ratio=ratio,
        residual=residual,
        reliable=reliable,
    )


def _partial_sums(report: ZenoReport) -> tuple[float, ...]:
    return tuple(float(s) for s in np.cumsum(report.dwell_times))


__all__ = [
    "SecondOrderZenoTimes",
    "ZenoEstimate",
    "estimate_zeno_time",
    "first_order_zeno_report",
    "second_order_zeno_report",
    "zeno_time_first_order",
    "zeno_time_second_order",
]
