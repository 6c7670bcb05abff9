# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Linear and affine hybrid systems: flow, guard, reset and event-driven simulation.

A linear hybrid system flows along ẋ = Ax + Bu until λ⊤x = 0 and then jumps
x⁺ = Cx⁻. The affine variant adds a drift b, a jump bias κ and a guard offset
a (λ⊤x = a). Uncontrolled arcs are stepped exactly with the matrix
exponential of the augmented matrix [[A, b], [0, 0]]; controlled arcs use
fixed-step RK4 with cubic Hermite dense output for event refinement.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import expm
from scipy.optimize import brentq

from ..context import Tolerances, default_tolerances
from ..errors import BlockedStateError, DivergenceError, InvalidModelError, SuspectedZenoError

logger = logging.getLogger(__name__)

_DEPARTURE_HALVINGS = 60

Feedback = Callable[[float, np.ndarray], np.ndarray]


def _frozen(value: np.ndarray) -> np.ndarray:
    value = np.array(value, dtype=float)
    value.setflags(write=False)
    return value


def _as_matrix(name: str, value: Any, rows: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.size == 0:
        arr = np.zeros((rows if rows is not None else 0, 0))
    elif arr.ndim == 1 and rows is not None and arr.shape[0] == rows:
        arr = arr.reshape(rows, 1)
    if arr.ndim != 2:
        raise InvalidModelError(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidModelError(f"{name} contains non-finite entries")
    return _frozen(arr)


def _as_vector(name: str, value: Any, n: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise InvalidModelError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidModelError(f"{name} contains non-finite entries")
    return _frozen(arr)


@dataclass(frozen=True, eq=False)
class LinearHybridSystem:
    """ẋ = Ax + Bu off the guard λ⊤x = 0, x⁺ = Cx⁻ on it.

    crossing_direction restricts which crossings trigger a reset, with the
    same meaning as an ODE event direction: -1 only when λ⊤x decreases
    through the guard, +1 only when it increases, 0 for both.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    lam: np.ndarray
    crossing_direction: int = 0
    allow_singular_reset: bool = False

    def __post_init__(self):
        A = _as_matrix("A", self.A)
        n = A.shape[0]
        if n < 1 or A.shape != (n, n):
            raise InvalidModelError(f"A must be square with n >= 1, got shape {A.shape}")
        B = _as_matrix("B", self.B, rows=n)
        if B.shape[0] != n:
            raise InvalidModelError(f"B must have {n} rows, got shape {B.shape}")
        C = _as_matrix("C", self.C)
        if C.shape != (n, n):
            raise InvalidModelError(f"C must be {n}x{n}, got shape {C.shape}")
        lam = _as_vector("lambda", self.lam, n)
        if not np.any(lam):
            raise InvalidModelError("lambda must be nonzero")
        if self.crossing_direction not in (-1, 0, 1):
            raise InvalidModelError(f"crossing_direction must be -1, 0 or 1, got {self.crossing_direction}")
        if not self.allow_singular_reset:
            tol = default_tolerances()
            det_tol = tol.det_rtol * np.linalg.norm(C, 2) ** n
            if abs(np.linalg.det(C)) <= det_tol:
                raise InvalidModelError(
                    "jump map C is singular", {"det": float(np.linalg.det(C)), "det_tol": float(det_tol)}
                )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def base(self) -> "LinearHybridSystem":
        return self

    @property
    def drift(self) -> np.ndarray:
        return np.zeros(self.n)

    @property
    def jump_bias(self) -> np.ndarray:
        return np.zeros(self.n)

    @property
    def offset(self) -> float:
        return 0.0

    @property
    def is_affine(self) -> bool:
        return False

    def to_dict(self) -> dict:
        data = {
            "n": self.n,
            "m": self.m,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "lambda": self.lam.tolist(),
        }
        if self.crossing_direction:
            data["crossing_direction"] = self.crossing_direction
        if self.allow_singular_reset:
            data["allow_singular_reset"] = True
        return data


@dataclass(frozen=True, eq=False)
class AffineHybridSystem:
    """ẋ = Ax + Bu + b off the guard λ⊤x = a, x⁺ = Cx⁻ + κ on it."""

    base: LinearHybridSystem
    b: np.ndarray
    kappa: np.ndarray
    a: float = 0.0

    def __post_init__(self):
        n = self.base.n
        object.__setattr__(self, "b", _as_vector("b", self.b, n))
        object.__setattr__(self, "kappa", _as_vector("kappa", self.kappa, n))
        if not math.isfinite(float(self.a)):
            raise InvalidModelError("guard offset a must be finite")
        object.__setattr__(self, "a", float(self.a))

    A = property(lambda self: self.base.A)
    B = property(lambda self: self.base.B)
    C = property(lambda self: self.base.C)
    lam = property(lambda self: self.base.lam)
    n = property(lambda self: self.base.n)
    m = property(lambda self: self.base.m)
    crossing_direction = property(lambda self: self.base.crossing_direction)
    allow_singular_reset = property(lambda self: self.base.allow_singular_reset)

    @property
    def drift(self) -> np.ndarray:
        return self.b

    @property
    def jump_bias(self) -> np.ndarray:
        return self.kappa

    @property
    def offset(self) -> float:
        return self.a

    @property
    def is_affine(self) -> bool:
        return True

    def to_dict(self) -> dict:
        data = self.base.to_dict()
        data.update({"b": self.b.tolist(), "kappa": self.kappa.tolist(), "a": self.a})
        return data


HybridSystem = Union[LinearHybridSystem, AffineHybridSystem]


def system_from_dict(data: dict) -> HybridSystem:
    """Build a system from its JSON document; b, kappa or a make it affine."""
    try:
        base = LinearHybridSystem(
            A=data["A"],
            B=data.get("B", []),
            C=data["C"],
            lam=data["lambda"],
            crossing_direction=int(data.get("crossing_direction", 0)),
            allow_singular_reset=bool(data.get("allow_singular_reset", False)),
        )
    except KeyError as e:
        raise InvalidModelError(f"system document is missing field {e.args[0]!r}") from e
    for key, expected in (("n", base.n), ("m", base.m)):
        if key in data and int(data[key]) != expected:
            raise InvalidModelError(f"system field {key}={data[key]} disagrees with matrix shapes ({expected})")
    if any(key in data for key in ("b", "kappa", "a")):
        return AffineHybridSystem(
            base=base,
            b=data.get("b", np.zeros(base.n)),
            kappa=data.get("kappa", np.zeros(base.n)),
            a=data.get("a", 0.0),
        )
    return base


# =============================================================================
# Trajectory records
# =============================================================================


class Branch(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    UNIQUE = "unique"
    NA = "n/a"


@dataclass(frozen=True, eq=False)
class JumpRecord:
    t: float
    x_pre: np.ndarray
    x_post: np.ndarray
    epsilon: Optional[float] = None
    beating_depth: int = 0
    branch: Branch = Branch.NA
    dwell_time: float = math.nan
    p_pre: Optional[np.ndarray] = None
    p_post: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        data = {
            "t": self.t,
            "x_pre": self.x_pre.tolist(),
            "x_post": self.x_post.tolist(),
            "epsilon": self.epsilon,
            "beating_depth": self.beating_depth,
            "branch": self.branch.value,
            "dwell_time": self.dwell_time,
        }
        if self.p_pre is not None:
            data["p_pre"] = self.p_pre.tolist()
            data["p_post"] = self.p_post.tolist()
        return data


@dataclass(frozen=True, eq=False)
class Arc:
    times: np.ndarray
    states: np.ndarray
    controls: Optional[np.ndarray] = None
    costates: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("times", "states", "controls", "costates"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(value))


@dataclass(frozen=True, eq=False)
class HybridTrajectory:
    arcs: tuple[Arc, ...]
    jumps: tuple[JumpRecord, ...]
    t0: float
    tf: float

    @property
    def jump_count(self) -> int:
        return len(self.jumps)

    @property
    def min_dwell_time(self) -> float:
        dwell = [j.dwell_time for j in self.jumps]
        return min(dwell) if dwell else math.inf

    @property
    def final_state(self) -> np.ndarray:
        return self.arcs[-1].states[-1]

    @property
    def final_time(self) -> float:
        return float(self.arcs[-1].times[-1])


@dataclass(frozen=True)
class ZenoReport:
    """Jump history of a run stopped for suspected Zeno behaviour.

    dwell_times[i] is the time spent flowing before jump i, so dwell_times[0]
    is measured from the start of the run.
    """

    jump_times: tuple[float, ...]
    dwell_times: tuple[float, ...]
    t_final: float
    reason: str

    def to_dict(self) -> dict:
        return {
            "jump_times": list(self.jump_times),
            "dwell_times": list(self.dwell_times),
            "t_final": self.t_final,
            "reason": self.reason,
        }


# =============================================================================
# Guard helpers
# =============================================================================


def guard_value(sys: HybridSystem, x: np.ndarray) -> float:
    return float(sys.lam @ x - sys.offset)


def guard_scale(sys: HybridSystem, x: np.ndarray) -> float:
    return float(np.linalg.norm(sys.lam) * np.linalg.norm(x) + abs(sys.offset))


def on_guard(sys: HybridSystem, x: np.ndarray, tol: Optional[Tolerances] = None) -> bool:
    tol = tol or default_tolerances()
    return abs(guard_value(sys, x)) <= tol.guard_rtol * guard_scale(sys, x)


def vector_field(sys: HybridSystem, x: np.ndarray, u: Optional[np.ndarray] = None) -> np.ndarray:
    dx = sys.A @ x + sys.drift
    if u is not None and sys.m:
        dx = dx + sys.B @ u
    return dx


def _normal_velocity_sign(sys: HybridSystem, x: np.ndarray, dx: np.ndarray, tol: Tolerances) -> int:
    nv = float(sys.lam @ dx)
    if abs(nv) <= tol.guard_rtol * np.linalg.norm(sys.lam) * np.linalg.norm(dx):
        return 0
    return 1 if nv > 0 else -1


def _gate_admits(sys: HybridSystem, x: np.ndarray, tol: Tolerances) -> bool:
    """Whether an on-guard image keeps jumping; uses the uncontrolled field for gated guards."""
    if sys.crossing_direction == 0:
        return True
    return _normal_velocity_sign(sys, x, vector_field(sys, x), tol) == sys.crossing_direction


def _project_onto_guard(sys: HybridSystem, x: np.ndarray) -> np.ndarray:
    lam = sys.lam
    return x - lam * (guard_value(sys, x) / float(lam @ lam))


# =============================================================================
# Flow
# =============================================================================


@dataclass(frozen=True, eq=False)
class GuardHit:
    t: float
    x: np.ndarray
    elapsed: float
    incoming_side: int
    grazing: bool = False


@dataclass(frozen=True, eq=False)
class ArcResult:
    arc: Arc
    hit: Optional[GuardHit]


class _ExactStepper:
    """Exact propagation of ẋ = Ax + b over a fixed step via the augmented exponential."""

    def __init__(self, sys: HybridSystem, h: float):
        n = sys.n
        self._aug = np.zeros((n + 1, n + 1))
        self._aug[:n, :n] = sys.A
        self._aug[:n, n] = sys.drift
        self._n = n
        phi = expm(self._aug * h)
        self._phi = phi[:n, :n]
        self._gamma = phi[:n, n]

    def step(self, t: float, x: np.ndarray, h: float) -> tuple[np.ndarray, Callable[[float], np.ndarray]]:
        x_next = self._phi @ x + self._gamma
        z = np.append(x, 1.0)

        def dense(s: float) -> np.ndarray:
            return (expm(self._aug * s) @ z)[: self._n]

        return x_next, dense


class _RK4Stepper:
    """Classical RK4 on the closed loop, with a cubic Hermite interpolant per step."""

    def __init__(self, sys: HybridSystem, feedback: Feedback):
        self._sys = sys
        self._feedback = feedback

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        return vector_field(self._sys, x, np.atleast_1d(self._feedback(t, x)))

    def step(self, t: float, x: np.ndarray, h: float) -> tuple[np.ndarray, Callable[[float], np.ndarray]]:
        k1 = self.rhs(t, x)
        k2 = self.rhs(t + h / 2, x + h / 2 * k1)
        k3 = self.rhs(t + h / 2, x + h / 2 * k2)
        k4 = self.rhs(t + h, x + h * k3)
        x_next = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        spline: list[CubicHermiteSpline] = []

        def dense(s: float) -> np.ndarray:
            # Built on first use; only steps that bracket a crossing need it.
            if not spline:
                derivs = np.vstack([k1, self.rhs(t + h, x_next)])
                spline.append(CubicHermiteSpline([0.0, h], np.vstack([x, x_next]), derivs))
            return spline[0](s)

        return x_next, dense


def _sign(value: float) -> int:
    return 1 if value > 0 else (-1 if value < 0 else 0)


def flow_arc(
    sys: HybridSystem,
    x0: Sequence[float],
    feedback: Optional[Feedback] = None,
    t_span: tuple[float, float] = (0.0, 1.0),
    step: float = 1e-3,
    tol: Optional[Tolerances] = None,
) -> ArcResult:
    """Flow from x0 until the first admissible guard crossing or the end of t_span.

    Starting on the guard is allowed for a post-reset point: the side is then
    taken from the sign of λ⊤ẋ, or from the first sample that leaves the guard
    when the flow is tangent to it.

    Returns:
        ArcResult whose arc stops at the refined crossing when one occurs.
    """
    tol = tol or default_tolerances()
    if not step > 0:
        raise InvalidModelError(f"step must be positive, got {step}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise InvalidModelError(f"t_span must be non-decreasing, got {t_span}")
    x = np.array(x0, dtype=float).reshape(-1)
    if x.shape != (sys.n,):
        raise InvalidModelError(f"x0 must have length {sys.n}")

    def control_at(t: float, state: np.ndarray) -> Optional[np.ndarray]:
        return None if feedback is None else np.atleast_1d(np.asarray(feedback(t, state), dtype=float))

    times, states, controls = [t0], [x.copy()], [control_at(t0, x)]
    if t1 == t0:
        return ArcResult(_make_arc(times, states, controls), None)

    duration = t1 - t0
    n_steps = max(1, math.ceil(duration / step - 1e-9))
    h = duration / n_steps
    stepper = _ExactStepper(sys, h) if feedback is None else _RK4Stepper(sys, feedback)

    g = guard_value(sys, x)
    if abs(g) > tol.guard_rtol * guard_scale(sys, x):
        side = _sign(g)
    else:
        side = _normal_velocity_sign(sys, x, vector_field(sys, x, control_at(t0, x)), tol)

    for k in range(n_steps):
        elapsed = k * h
        t = t0 + elapsed
        x_next, dense = stepper.step(t, x, h)
        if not np.all(np.isfinite(x_next)):
            raise DivergenceError(f"state diverged at t={t + h:.6g}", {"t": t + h})
        g_next = guard_value(sys, x_next)
        touching = abs(g_next) <= tol.guard_rtol * guard_scale(sys, x_next)

        if side == 0:
            if not touching:
                side = _sign(g_next)
        elif touching or _sign(g_next) != side:
            crossing = -side
            admitted = sys.crossing_direction in (0, crossing)
            if admitted:
                if touching:
                    tau, x_hit = h, x_next
                else:
                    tau, x_hit = _refine_crossing(sys, dense, h, side, tol)
                x_hit = _project_onto_guard(sys, x_hit)
                t_hit = t0 + elapsed + tau
                u_hit = control_at(t_hit, x_hit)
                dx_hit = vector_field(sys, x_hit, u_hit)
                grazing = _normal_velocity_sign(sys, x_hit, dx_hit, tol) in (0, side)
                times.append(t_hit)
                states.append(x_hit)
                controls.append(u_hit)
                hit = GuardHit(t=t_hit, x=x_hit, elapsed=elapsed + tau, incoming_side=side, grazing=grazing)
                return ArcResult(_make_arc(times, states, controls), hit)
            if not touching:
                side = _sign(g_next)

        x = x_next
        t_next = t1 if k == n_steps - 1 else t0 + (k + 1) * h
        times.append(t_next)
        states.append(x.copy())
        controls.append(control_at(t_next, x))

    return ArcResult(_make_arc(times, states, controls), None)


def _refine_crossing(
    sys: HybridSystem, dense: Callable[[float], np.ndarray], h: float, side: int, tol: Tolerances
) -> tuple[float, np.ndarray]:
    def g(s: float) -> float:
        return guard_value(sys, dense(s))

    lo = 0.0
    if _sign(g(lo)) != side:
        # The arc started on the guard and returns within one step: bracket from where it has left.
        lo = h
        for _ in range(_DEPARTURE_HALVINGS):
            lo *= 0.5
            if _sign(g(lo)) == side:
                break
        else:
            return 0.0, np.asarray(dense(0.0), dtype=float)
    try:
        tau, result = brentq(g, lo, h, xtol=1e-300, maxiter=tol.refine_maxiter, full_output=True, disp=False)
        if not result.converged:
            logger.debug("Crossing refinement stopped after %d iterations", result.iterations)
    except ValueError:
        # Rounding moved the bracket end onto the start side; the step end is the crossing.
        tau = h
    return float(tau), np.asarray(dense(tau), dtype=float)


def _make_arc(times: list, states: list, controls: list) -> Arc:
    ctrl = None if controls[0] is None else np.vstack(controls)
    return Arc(times=np.asarray(times, dtype=float), states=np.vstack(states), controls=ctrl)


# =============================================================================
# Reset and simulation
# =============================================================================


def apply_reset(sys: HybridSystem, x_pre: Sequence[float], tol: Optional[Tolerances] = None) -> tuple[np.ndarray, int]:
    """Apply x ↦ Cx + κ until the image leaves the guard.

    Returns:
        (x_post, beating_depth) with x_post = C^(depth+1) x_pre in the linear case.
    """
    tol = tol or default_tolerances()
    x_pre = np.array(x_pre, dtype=float).reshape(-1)
    if not on_guard(sys, x_pre, tol):
        raise InvalidModelError(
            "reset requested off the guard", {"x_pre": x_pre.tolist(), "guard_value": guard_value(sys, x_pre)}
        )
    kappa = sys.jump_bias
    if not np.any(x_pre) and not np.any(kappa):
        return x_pre.copy(), 0

    orbit = [x_pre]
    x = sys.C @ x_pre + kappa
    depth = 0
    while on_guard(sys, x, tol) and _gate_admits(sys, x, tol):
        orbit.append(x)
        depth += 1
        if depth > sys.n:
            raise BlockedStateError(f"reset map stayed on the guard for {depth} applications", orbit)
        x = sys.C @ x + kappa
    if depth:
        logger.debug("Beating reset of depth %d at %s", depth, x_pre)
    return x, depth


def simulate(
    sys: HybridSystem,
    x0: Sequence[float],
    feedback: Optional[Feedback] = None,
    t_span: tuple[float, float] = (0.0, 1.0),
    step: float = 1e-3,
    max_jumps: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> HybridTrajectory:
    """Alternate flow and reset until the end of the horizon.

    Raises:
        SuspectedZenoError: max_jumps reached before tf, or consecutive jump
            times no longer increase in floating point.
    """
    tol = tol or default_tolerances()
    max_jumps = tol.max_jumps if max_jumps is None else int(max_jumps)
    t0, tf = float(t_span[0]), float(t_span[1])
    t, x = t0, np.array(x0, dtype=float).reshape(-1)
    arcs: list[Arc] = []
    jumps: list[JumpRecord] = []
    last_jump_time = t0

    def zeno_report(reason: str) -> ZenoReport:
        return ZenoReport(
            jump_times=tuple(j.t for j in jumps),
            dwell_times=tuple(j.dwell_time for j in jumps),
            t_final=t,
            reason=reason,
        )

    while True:
        result = flow_arc(sys, x, feedback, (t, tf), step, tol)
        arcs.append(result.arc)
        hit = result.hit
        if hit is None:
            break
        if hit.grazing:
            logger.warning("Tangential contact with the guard at t=%.10g; continuing the flow", hit.t)
            t, x = hit.t, hit.x
            continue
        if jumps and hit.t <= last_jump_time:
            raise SuspectedZenoError(
                f"dwell time underflow after {len(jumps)} jumps at t={hit.t:.17g}", zeno_report("dwell_underflow")
            )
        x_post, depth = apply_reset(sys, hit.x, tol)
        jumps.append(
            JumpRecord(
                t=hit.t,
                x_pre=_frozen(hit.x),
                x_post=_frozen(x_post),
                beating_depth=depth,
                dwell_time=hit.t - last_jump_time,
            )
        )
        last_jump_time = hit.t
        t, x = hit.t, x_post
        if len(jumps) >= max_jumps and t < tf:
            raise SuspectedZenoError(f"{len(jumps)} jumps before t={t:.17g}", zeno_report("max_jumps"))

    logger.debug("Simulated %d arcs with %d jumps on [%g, %g]", len(arcs), len(jumps), t0, tf)
    return HybridTrajectory(arcs=tuple(arcs), jumps=tuple(jumps), t0=t0, tf=tf)


def simulate_many(
    sys: HybridSystem,
    initial_states: Sequence[Sequence[float]],
    feedback: Optional[Feedback] = None,
    t_span: tuple[float, float] = (0.0, 1.0),
    step: float = 1e-3,
    max_jumps: Optional[int] = None,
    max_workers: Optional[int] = None,
) -> list[Union[HybridTrajectory, Exception]]:
    """Simulate an ensemble of initial conditions on a thread pool.

    Failures are returned in place of the trajectory rather than raised.
    """

    def run(x0):
        try:
            return simulate(sys, x0, feedback, t_span, step, max_jumps)
        except Exception as e:  # noqa: BLE001
            return e

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run, initial_states))


# =============================================================================
# First-return time
# =============================================================================


def first_return_time(
    sys: HybridSystem,
    x: Sequence[float],
    t_max: float,
    step: Optional[float] = None,
    tol: Optional[Tolerances] = None,
) -> float:
    """Smallest t in (0, t_max] with λ⊤e^{At}x = 0, or math.inf when none is found.

    The scan uses the uncontrolled linear flow only; an identically zero
    guard value (x in an invariant guard) also returns math.inf.
    """
    tol = tol or default_tolerances()
    if sys.is_affine:
        raise InvalidModelError("first_return_time is defined for linear hybrid systems")
    x = np.array(x, dtype=float).reshape(-1)
    if not np.any(x):
        raise InvalidModelError("first_return_time requires x != 0")
    if not t_max > 0:
        raise InvalidModelError(f"t_max must be positive, got {t_max}")
    step = t_max / 1000 if step is None else float(step)
    if not step > 0:
        raise InvalidModelError(f"step must be positive, got {step}")

    n_steps = max(1, math.ceil(t_max / step - 1e-9))
    h = t_max / n_steps
    phi = expm(sys.A * h)
    lam_norm = float(np.linalg.norm(sys.lam))

    def g_at(s: float) -> float:
        return float(sys.lam @ (expm(sys.A * s) @ x))

    state = x
    g = float(sys.lam @ state)
    side = _sign(g) if abs(g) > tol.guard_rtol * lam_norm * np.linalg.norm(state) else 0
    for k in range(n_steps):
        state = phi @ state
        g_next = float(sys.lam @ state)
        touching = abs(g_next) <= tol.guard_rtol * lam_norm * np.linalg.norm(state)
        if side == 0:
            if not touching:
                side = _sign(g_next)
            continue
        if touching:
            return (k + 1) * h
        if _sign(g_next) != side:
            lo = k * h
            root = brentq(g_at, lo, lo + h, xtol=1e-14, maxiter=tol.refine_maxiter, full_output=True, disp=False)[0]
            return float(root)
    return math.inf


__all__ = [
    "AffineHybridSystem",
    "Arc",
    "ArcResult",
    "Branch",
    "Feedback",
    "GuardHit",
    "HybridSystem",
    "HybridTrajectory",
    "JumpRecord",
    "LinearHybridSystem",
    "ZenoReport",
    "apply_reset",
    "first_return_time",
    "flow_arc",
    "guard_scale",
    "guard_value",
    "on_guard",
    "simulate",
    "simulate_many",
    "system_from_dict",
    "vector_field",
]
