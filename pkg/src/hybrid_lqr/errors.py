# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Exception hierarchy for the hybrid LQR solvers.

Every failure family has its own class and its own process exit code so that
CLI runs and MCP tool results can be told apart without parsing messages.

| family                  | exit code |
|-------------------------|-----------|
| ConfigError             | 2         |
| InvalidModelError       | 3         |
| BlockedStateError       | 4         |
| SuspectedZenoError      | 5         |
| NoExtremalJumpError     | 6         |
| IllConditionedError     | 7         |
| TangentialImpactError   | 8         |
| BeatingEncounteredError | 9         |
| NonConvergenceError     | 10        |
| DivergenceError         | 11        |
| GridError               | 12        |
"""

from typing import Any, Optional


class HybridControlError(Exception):
    """Base class for all solver failures."""

    exit_code: int = 1
    family: str = "error"

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.details: dict[str, Any] = dict(details or {})

    def to_dict(self) -> dict[str, Any]:
        return {"status": self.family, "error": str(self), "exit_code": self.exit_code, "details": self.details}


class ConfigError(HybridControlError):
    """Run configuration could not be parsed or validated."""

    exit_code = 2
    family = "config_error"


class InvalidModelError(HybridControlError, ValueError):
    """A system, cost, schedule, grid or argument violates its invariants."""

    exit_code = 3
    family = "invalid_model"


class BlockedStateError(HybridControlError):
    """The reset map could not move the state off the guard within n applications."""

    exit_code = 4
    family = "blocked_state"

    def __init__(self, message: str, orbit: list, details: Optional[dict[str, Any]] = None):
        super().__init__(message, details)
        self.orbit = orbit
        self.details.setdefault("orbit", [list(map(float, x)) for x in orbit])


class SuspectedZenoError(HybridControlError):
    """Jump accumulation detected; carries the jump history for Zeno-time estimation."""

    exit_code = 5
    family = "suspected_zeno"

    def __init__(self, message: str, report, details: Optional[dict[str, Any]] = None):
        super().__init__(message, details)
        self.report = report
        self.details.setdefault("jump_count", len(report.jump_times))
        self.details.setdefault("reason", report.reason)


class NoExtremalJumpError(HybridControlError):
    """The multiplier quadratic has a negative discriminant at the impact point."""

    exit_code = 6
    family = "no_extremal_jump"


class IllConditionedError(HybridControlError):
    """Double root of the multiplier quadratic or Hamiltonian mismatch after a jump."""

    exit_code = 7
    family = "ill_conditioned"


class TangentialImpactError(HybridControlError):
    """Weakly actuated reset with vanishing normal velocity."""

    exit_code = 8
    family = "tangential_impact"


class BeatingEncounteredError(HybridControlError):
    """An impact point lies in a beating set; the co-state boundary problem is not solved."""

    exit_code = 9
    family = "beating_encountered"


class NonConvergenceError(HybridControlError):
    """The forward-backward iteration did not settle; carries the best iterate."""

    exit_code = 10
    family = "non_convergence"

    def __init__(self, message: str, best=None, details: Optional[dict[str, Any]] = None):
        super().__init__(message, details)
        self.best = best


class DivergenceError(HybridControlError):
    """Non-finite state or Riccati solution encountered."""

    exit_code = 11
    family = "divergence"


class GridError(HybridControlError):
    """The dynamic-programming grid cannot represent any admissible transition."""

    exit_code = 12
    family = "grid_error"


EXIT_CODES: dict[str, int] = {
    cls.family: cls.exit_code
    for cls in (
        ConfigError,
        InvalidModelError,
        BlockedStateError,
        SuspectedZenoError,
        NoExtremalJumpError,
        IllConditionedError,
        TangentialImpactError,
        BeatingEncounteredError,
        NonConvergenceError,
        DivergenceError,
        GridError,
    )
}
