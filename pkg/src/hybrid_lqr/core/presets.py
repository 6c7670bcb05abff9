# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Canned scenarios: the planar rotation example with a quarter-turn reset,
the block-form mechanical impact system, and the two Zeno examples.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import InvalidModelError
from .hybrid_system import AffineHybridSystem, HybridSystem, LinearHybridSystem, system_from_dict
from .lqr_core import QuadraticCost

logger = logging.getLogger(__name__)

CONTRACTING_X0 = (0.4883, 0.3903)
EXPANDING_X0 = (0.4925, 0.3640)
UNCONTROLLED_X0 = (0.5, 0.5)

FIRST_ORDER_DEFAULTS = {"a": 1.0, "b": 2.0, "c": 0.5, "x0": (1.0, 1.0)}
SECOND_ORDER_DEFAULTS = {"g": 1.0, "e": 0.5, "x0": (1.0, 0.0)}


@dataclass(frozen=True, eq=False)
class ScenarioPreset:
    name: str
    system: HybridSystem
    cost: QuadraticCost
    horizon: tuple[float, float]
    x0: tuple[float, ...]
    expected: dict = field(default_factory=dict)
    grid: Optional[dict] = None
    solver: dict = field(default_factory=dict)
    description: str = ""

    def to_config(self) -> dict:
        data = {
            "name": self.name,
            "description": self.description,
            "system": self.system.to_dict(),
            "cost": self.cost.to_dict(),
            "horizon": [float(self.horizon[0]), float(self.horizon[1])],
            "x0": [float(v) for v in self.x0],
            "expected": self.expected,
            "solver": self.solver,
        }
        if self.grid is not None:
            data["grid"] = self.grid
        return data

    @classmethod
    def from_config(cls, data: dict) -> "ScenarioPreset":
        try:
            horizon = data["horizon"]
            return cls(
                name=str(data.get("name", "custom")),
                system=system_from_dict(data["system"]),
                cost=QuadraticCost.from_dict(data["cost"]),
                horizon=(float(horizon[0]), float(horizon[1])),
                x0=tuple(float(v) for v in data["x0"]),
                expected=dict(data.get("expected", {})),
                grid=data.get("grid"),
                solver=dict(data.get("solver", {})),
                description=str(data.get("description", "")),
            )
        except KeyError as e:
            raise InvalidModelError(f"scenario is missing field {e.args[0]!r}") from e


# =============================================================================
# Planar rotation example
# =============================================================================


def section6_coefficients(a: float, x: float, px: float, py: float) -> tuple[float, float, float]:
    """Closed forms of (α, β, γ) for the guard point (x, 0) and post-jump co-state (px, py)."""
    return -0.5, -x + px, (1.0 - a) * x * px + 0.5 * (py * py - px * px)


def section6_discriminant_matrix(a: float) -> list[list[float]]:
    """𝒟 on (x, px, py) for guard points (x, 0)."""
    return [[1.0, -a, 0.0], [-a, 0.0, 0.0], [0.0, 0.0, 1.0]]


def _reference_grid(t_points: int, u_points: int) -> dict:
    return {
        "x": [[0.01, 2.5, 150], [0.01, 2.5, 150]],
        "t": [0.0, 2.0, t_points],
        "u": [[-10.0, 0.0, u_points]],
    }


def section6(
    a: float,
    x0: Optional[Sequence[float]] = None,
    name: Optional[str] = None,
    jump_count: Optional[int] = None,
    grid: Optional[dict] = None,
) -> ScenarioPreset:
    """ẋ = x + y, ẏ = −x + y + u with the reset (x, 0) ↦ (0, a·x) on y = 0.

    Only descending crossings of the x-axis reset, which keeps the orbit in
    the first quadrant.
    """
    a = float(a)
    if not a > 0:
        raise InvalidModelError(f"reset gain a must be positive, got {a}")
    system = LinearHybridSystem(
        A=[[1.0, 1.0], [-1.0, 1.0]],
        B=[[0.0], [1.0]],
        C=[[0.0, -1.0], [a, 0.0]],
        lam=[0.0, 1.0],
        crossing_direction=-1,
    )
    cost = QuadraticCost(Q=np.zeros((2, 2)), R=[[1.0]], F=np.diag([1.0, a**-2]))
    expected = {
        "alpha": -0.5,
        "beta": "-x + p_x",
        "gamma": "(1 - a) x p_x + (p_y^2 - p_x^2) / 2",
        "discriminant_matrix": section6_discriminant_matrix(a),
        "trivially_blocking": True,
    }
    if jump_count is not None:
        expected["jump_count"] = jump_count
    return ScenarioPreset(
        name=name or f"section6-a{a:g}",
        system=system,
        cost=cost,
        horizon=(0.0, 2.0),
        x0=tuple(float(v) for v in (x0 if x0 is not None else CONTRACTING_X0)),
        expected=expected,
        grid=grid,
        description=f"planar rotation with quarter-turn reset, a = {a:g}",
    )


def section6_contracting() -> ScenarioPreset:
    return section6(0.75, CONTRACTING_X0, "section6-contracting", jump_count=2, grid=_reference_grid(150, 150))


def section6_expanding() -> ScenarioPreset:
    return section6(1.25, EXPANDING_X0, "section6-expanding", jump_count=3, grid=_reference_grid(300, 250))


def section6_uncontrolled() -> ScenarioPreset:
    preset = section6(1.5, UNCONTROLLED_X0, "section6-uncontrolled")
    system = LinearHybridSystem(
        A=preset.system.A, B=np.zeros((2, 0)), C=preset.system.C, lam=preset.system.lam, crossing_direction=-1
    )
    cost = QuadraticCost(Q=np.zeros((2, 2)), R=np.zeros((0, 0)), F=preset.cost.F)
    return ScenarioPreset(
        name=preset.name,
        system=system,
        cost=cost,
        horizon=(0.0, 6.0),
        x0=preset.x0,
        expected={"trivially_blocking": True},
        description="uncontrolled flow of the planar example, a = 1.5",
    )


# =============================================================================
# Mechanical impacts
# =============================================================================


def mechanical(
    V: Sequence[Sequence[float]],
    K: Sequence[Sequence[float]],
    Btilde: Sequence[Sequence[float]],
    lambda_tilde: Sequence[float],
    restitution: float = 1.0,
    x0: Optional[Sequence[float]] = None,
    horizon: tuple[float, float] = (0.0, 5.0),
    name: str = "mechanical",
) -> ScenarioPreset:
    """q̇ = v, v̇ = Vq + Kv + B̃u with impacts on λ̃⊤q = 0 reversing the velocity.

    λ = (λ̃, 0) never sees the input, so the resets are weakly actuated.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Bt = np.asarray(Btilde, dtype=float)
    d = V.shape[0]
    Bt = Bt.reshape(d, -1) if Bt.size else np.zeros((d, 0))
    lam_t = np.asarray(lambda_tilde, dtype=float).reshape(-1)
    if V.shape != (d, d) or K.shape != (d, d) or lam_t.shape != (d,):
        raise InvalidModelError(f"V, K must be {d}x{d} and lambda_tilde of length {d}")
    if not restitution >= 0:
        raise InvalidModelError(f"restitution must be nonnegative, got {restitution}")
    m = Bt.shape[1]
    A = np.block([[np.zeros((d, d)), np.eye(d)], [V, K]])
    B = np.vstack([np.zeros((d, m)), Bt])
    C = np.diag(np.concatenate([np.ones(d), -restitution * np.ones(d)]))
    system = LinearHybridSystem(
        A=A,
        B=B,
        C=C,
        lam=np.concatenate([lam_t, np.zeros(d)]),
        crossing_direction=-1,
        allow_singular_reset=restitution == 0,
    )
    cost = QuadraticCost(Q=np.eye(2 * d), R=np.eye(m), F=np.eye(2 * d))
    if x0 is None:
        x0 = np.concatenate([lam_t / float(lam_t @ lam_t), np.zeros(d)])
    return ScenarioPreset(
        name=name,
        system=system,
        cost=cost,
        horizon=(float(horizon[0]), float(horizon[1])),
        x0=tuple(float(v) for v in x0),
        expected={"alpha": 0.0, "beta": "lambda^T A x", "war": True},
        description=f"{d}-DOF mechanical system with impacts, restitution {restitution:g}",
    )


def mechanical_spring() -> ScenarioPreset:
    return mechanical([[-1.0]], [[0.0]], [[1.0]], [1.0], x0=(1.0, 0.0), name="mechanical-spring")


# =============================================================================
# Zeno examples
# =============================================================================


def first_order_zeno(a: float = 1.0, b: float = 2.0, c: float = 0.5, x0=(1.0, 1.0)) -> ScenarioPreset:
    """ẋ = a, ẏ = −b with (x, 0) ↦ (0, c·x); C is singular, so simulation only."""
    from .zeno_models import zeno_time_first_order

    base = LinearHybridSystem(
        A=np.zeros((2, 2)),
        B=np.zeros((2, 0)),
        C=[[0.0, 0.0], [c, 0.0]],
        lam=[0.0, 1.0],
        crossing_direction=-1,
        allow_singular_reset=True,
    )
    system = AffineHybridSystem(base=base, b=[a, -b], kappa=[0.0, 0.0], a=0.0)
    zeta = zeno_time_first_order(a, b, c, x0[0], x0[1])
    return ScenarioPreset(
        name="first-order-zeno",
        system=system,
        cost=QuadraticCost(Q=np.zeros((2, 2)), R=np.zeros((0, 0)), F=np.eye(2)),
        horizon=(0.0, 2.0),
        x0=tuple(float(v) for v in x0),
        expected={"zeno_time": zeta, "simulation_only": True, "params": {"a": a, "b": b, "c": c}},
        description="first-order Zeno example",
    )


def second_order_zeno(g: float = 1.0, e: float = 0.5, x0=(1.0, 0.0)) -> ScenarioPreset:
    """Bouncing ball: ẋ = y, ẏ = −g, with y⁺ = −e·y⁻ when the height reaches 0 while falling."""
    from .zeno_models import zeno_time_second_order

    base = LinearHybridSystem(
        A=[[0.0, 1.0], [0.0, 0.0]],
        B=np.zeros((2, 0)),
        C=np.diag([1.0, -e]),
        lam=[1.0, 0.0],
        crossing_direction=-1,
        allow_singular_reset=e == 0,
    )
    system = AffineHybridSystem(base=base, b=[0.0, -g], kappa=[0.0, 0.0], a=0.0)
    times = zeno_time_second_order(g, e, x0[0], x0[1])
    return ScenarioPreset(
        name="second-order-zeno",
        system=system,
        cost=QuadraticCost(Q=np.zeros((2, 2)), R=np.zeros((0, 0)), F=np.eye(2)),
        horizon=(0.0, math.ceil(times.printed) + 1.0),
        x0=tuple(float(v) for v in x0),
        expected={"zeno_time": times.to_dict(), "simulation_only": True, "params": {"g": g, "e": e}},
        description="bouncing ball",
    )


def zeno_with_params(scenario: ScenarioPreset, overrides: dict, x0: Optional[Sequence[float]] = None) -> ScenarioPreset:
    """Rebuild a Zeno scenario with some of its parameters replaced.

    Raises:
        InvalidModelError: the scenario carries no Zeno parameters, a key is
            not one of them, or the new values leave the admissible range.
    """
    params = dict(scenario.expected.get("params", {}))
    if not params:
        raise InvalidModelError(f"{scenario.name} has no Zeno parameters to override")
    unknown = sorted(set(overrides) - set(params))
    if unknown:
        raise InvalidModelError(f"unknown Zeno parameter(s) {unknown}", {"allowed": sorted(params)})
    try:
        params.update({key: float(value) for key, value in overrides.items()})
    except (TypeError, ValueError) as e:
        raise InvalidModelError(f"Zeno parameters must be numbers: {e}") from e
    builder = first_order_zeno if "c" in params else second_order_zeno
    rebuilt = builder(**params, x0=tuple(scenario.x0 if x0 is None else x0))
    logger.debug("Rebuilt %s with %s", scenario.name, params)
    return replace(rebuilt, name=scenario.name)


def zeno_presets() -> tuple[ScenarioPreset, ScenarioPreset]:
    return first_order_zeno(**FIRST_ORDER_DEFAULTS), second_order_zeno(**SECOND_ORDER_DEFAULTS)


PRESETS: dict[str, Callable[[], ScenarioPreset]] = {
    "section6-contracting": section6_contracting,
    "section6-expanding": section6_expanding,
    "section6-uncontrolled": section6_uncontrolled,
    "mechanical-spring": mechanical_spring,
    "first-order-zeno": lambda: zeno_presets()[0],
    "second-order-zeno": lambda: zeno_presets()[1],
}


def get_preset(name: str) -> ScenarioPreset:
    try:
        factory = PRESETS[name]
    except KeyError as e:
        raise InvalidModelError(f"unknown preset {name!r}", {"available": sorted(PRESETS)}) from e
    return factory()


def list_presets() -> list[dict]:
    return [{"name": name, "description": PRESETS[name]().description} for name in sorted(PRESETS)]


__all__ = [
    "PRESETS",
    "ScenarioPreset",
    "first_order_zeno",
    "get_preset",
    "list_presets",
    "mechanical",
    "mechanical_spring",
    "second_order_zeno",
    "section6",
    "section6_coefficients",
    "section6_contracting",
    "section6_discriminant_matrix",
    "section6_expanding",
    "section6_uncontrolled",
    "zeno_presets",
    "zeno_with_params",
]
