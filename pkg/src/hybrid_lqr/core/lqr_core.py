# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Classical finite-horizon LQR and AQR.

The cost is ½∫(x⊤Qx + u⊤Ru + 2x⊤Nu)dt + ½x(tf)⊤Fx(tf) + r⊤x(tf). Eliminating u
from the Hamiltonian leaves the tilde matrices Q̃ = Q − NR⁻¹N⊤,
Ã = A − BR⁻¹N⊤ and R̃ = BR⁻¹B⊤, which drive the Riccati sweep for S and the
bias sweep for c. The co-state along optimal arcs is p = Sx + c.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigvalsh, expm

from ..context import Tolerances, default_tolerances
from ..errors import DivergenceError, InvalidModelError
from .hybrid_system import Arc, HybridTrajectory

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 2000
OVERFLOW_LIMIT = 1e150

RiccatiLookup = Callable[[float, str], tuple[np.ndarray, np.ndarray]]


def _matrix(name: str, value, shape: tuple[int, int]) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.size == 0 and 0 in shape:
        arr = np.zeros(shape)
    if arr.shape != shape:
        raise InvalidModelError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidModelError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _check_symmetric(name: str, M: np.ndarray, tol: Tolerances):
    if M.size and np.linalg.norm(M - M.T) > tol.symmetry_rtol * max(np.linalg.norm(M), np.finfo(float).tiny):
        raise InvalidModelError(f"{name} must be symmetric")


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    Q: np.ndarray
    R: np.ndarray
    F: np.ndarray
    N: Optional[np.ndarray] = None
    r: Optional[np.ndarray] = None

    def __post_init__(self):
        tol = default_tolerances()
        Q = np.asarray(self.Q, dtype=float)
        n = Q.shape[0] if Q.ndim == 2 else 0
        R = np.asarray(self.R, dtype=float)
        m = R.shape[0] if R.ndim == 2 else 0
        Q = _matrix("Q", Q, (n, n))
        R = _matrix("R", R, (m, m))
        F = _matrix("F", self.F, (n, n))
        N = _matrix("N", np.zeros((n, m)) if self.N is None else self.N, (n, m))
        r = np.zeros(n) if self.r is None else np.asarray(self.r, dtype=float).reshape(-1)
        if r.shape != (n,):
            raise InvalidModelError(f"r must have length {n}")
        for name, M in (("Q", Q), ("R", R), ("F", F)):
            _check_symmetric(name, M, tol)
        if m and eigvalsh(R)[0] <= 0:
            raise InvalidModelError("R must be positive definite")
        if eigvalsh(F)[0] <= 0:
            raise InvalidModelError("F must be positive definite")
        if n and eigvalsh(Q)[0] < -1e-12 * max(np.linalg.norm(Q, 2), 1.0):
            raise InvalidModelError("Q must be positive semidefinite")
        r.setflags(write=False)
        for name, value in (("Q", Q), ("R", R), ("F", F), ("N", N), ("r", r)):
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def terminal(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.F @ x + self.r @ x)

    def running(self, x: np.ndarray, u: Optional[np.ndarray]) -> np.ndarray:
        """ℒ(x, u) = ½(x⊤Qx + u⊤Ru + 2x⊤Nu); x and u may carry a leading sample axis."""
        x = np.asarray(x, dtype=float)
        value = 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x)
        if u is not None and self.m:
            u = np.asarray(u, dtype=float)
            value = value + 0.5 * np.einsum("...i,ij,...j->...", u, self.R, u)
            value = value + np.einsum("...i,ij,...j->...", x, self.N, u)
        return value

    def to_dict(self) -> dict:
        return {
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
            "N": self.N.tolist(),
            "F": self.F.tolist(),
            "r": self.r.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuadraticCost":
        try:
            return cls(Q=data["Q"], R=data.get("R", []), F=data["F"], N=data.get("N"), r=data.get("r"))
        except KeyError as e:
            raise InvalidModelError(f"cost document is missing field {e.args[0]!r}") from e


@dataclass(frozen=True, eq=False)
class TildeData:
    """Tilde matrices plus what the feedback law still needs (A, B, N and a Cholesky factor of R)."""

    Q_t: np.ndarray
    A_t: np.ndarray
    R_t: np.ndarray
    A: np.ndarray
    B: np.ndarray
    N: np.ndarray
    R_factor: Optional[tuple] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def solve_R(self, rhs: np.ndarray) -> np.ndarray:
        if self.R_factor is None:
            return np.zeros((0,) + np.shape(rhs)[1:])
        return cho_solve(self.R_factor, rhs)


def tilde(cost: QuadraticCost, A: np.ndarray, B: np.ndarray) -> TildeData:
    """Q̃ = Q − NR⁻¹N⊤, Ã = A − BR⁻¹N⊤, R̃ = BR⁻¹B⊤ through Cholesky solves with R."""
    A = np.asarray(A, dtype=float)
    n, m = cost.n, cost.m
    B = np.asarray(B, dtype=float).reshape(n, m) if np.size(B) else np.zeros((n, m))
    if A.shape != (n, n) or B.shape != (n, m):
        raise InvalidModelError(f"A {A.shape} and B {B.shape} do not match cost dimensions n={n}, m={m}")
    if m == 0:
        return TildeData(Q_t=cost.Q.copy(), A_t=A.copy(), R_t=np.zeros((n, n)), A=A, B=B, N=cost.N)
    try:
        factor = cho_factor(cost.R)
    except LinAlgError as e:
        raise InvalidModelError("R is numerically singular") from e
    RinvNt = cho_solve(factor, cost.N.T)
    Q_t = cost.Q - cost.N @ RinvNt
    R_t = B @ cho_solve(factor, B.T)
    return TildeData(
        Q_t=0.5 * (Q_t + Q_t.T),
        A_t=A - B @ RinvNt,
        R_t=0.5 * (R_t + R_t.T),
        A=A,
        B=B,
        N=cost.N,
        R_factor=factor,
    )


def hamiltonian(td: TildeData, x: np.ndarray, p: np.ndarray, b: Optional[np.ndarray] = None) -> float:
    """Optimal Hamiltonian ½x⊤Q̃x + p⊤Ãx − ½p⊤R̃p (+ p⊤b)."""
    value = 0.5 * x @ td.Q_t @ x + p @ td.A_t @ x - 0.5 * p @ td.R_t @ p
    if b is not None:
        value = value + p @ b
    return float(value)


def unoptimized_hamiltonian(
    A: np.ndarray,
    B: np.ndarray,
    cost: QuadraticCost,
    x: np.ndarray,
    p: np.ndarray,
    u: np.ndarray,
    b: Optional[np.ndarray] = None,
) -> float:
    """p⊤(Ax + Bu + b) + ℒ(x, u); optimal_control minimizes it over u."""
    dx = A @ x + (B @ u if cost.m else 0.0)
    if b is not None:
        dx = dx + b
    return float(p @ dx + cost.running(x, u))


def optimal_control(td: TildeData, S_t: np.ndarray, c_t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """u = −R⁻¹(N⊤ + B⊤S)x − R⁻¹B⊤c."""
    if td.m == 0:
        return np.zeros(0)
    return -td.solve_R(td.N.T @ x + td.B.T @ (S_t @ x + c_t))


# =============================================================================
# Riccati sweeps
# =============================================================================


def riccati_rhs(td: TildeData, b: np.ndarray, S: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ṡ = −Ã⊤S − SÃ + SR̃S − Q̃ and ċ = (−Ã⊤ + SR̃)c − Sb."""
    SR = S @ td.R_t
    S_dot = -td.A_t.T @ S - S @ td.A_t + SR @ S - td.Q_t
    c_dot = -td.A_t.T @ c + SR @ c - S @ b
    return S_dot, c_dot


@dataclass(frozen=True, eq=False)
class SweepSegment:
    """One jump-free stretch of a sweep, ascending in time."""

    times: np.ndarray
    S: np.ndarray
    c: np.ndarray
    S_dot: np.ndarray
    c_dot: np.ndarray


def integrate_riccati(
    td: TildeData,
    b: np.ndarray,
    S_start: np.ndarray,
    c_start: np.ndarray,
    t_start: float,
    t_end: float,
    step: float,
) -> SweepSegment:
    """RK4 on (S, c) from t_start to t_end in either direction, symmetrizing S after every step."""
    if not step > 0:
        raise InvalidModelError(f"step must be positive, got {step}")
    span = t_end - t_start
    n_steps = max(1, math.ceil(abs(span) / step - 1e-9)) if span else 0
    h = span / n_steps if n_steps else 0.0
    S, c = np.array(S_start, dtype=float), np.array(c_start, dtype=float)
    times = [t_start]
    S_list, c_list = [S], [c]
    dS, dc = riccati_rhs(td, b, S, c)
    Sd_list, cd_list = [dS], [dc]
    for k in range(n_steps):
        k1 = (dS, dc)
        k2 = riccati_rhs(td, b, S + h / 2 * k1[0], c + h / 2 * k1[1])
        k3 = riccati_rhs(td, b, S + h / 2 * k2[0], c + h / 2 * k2[1])
        k4 = riccati_rhs(td, b, S + h * k3[0], c + h * k3[1])
        S = S + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        c = c + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        S = 0.5 * (S + S.T)
        t = t_end if k == n_steps - 1 else t_start + (k + 1) * h
        if not (np.all(np.isfinite(S)) and np.all(np.isfinite(c))) or np.abs(S).max() > OVERFLOW_LIMIT:
            raise DivergenceError(f"Riccati solution overflowed at t={t:.6g}", {"t": t})
        dS, dc = riccati_rhs(td, b, S, c)
        times.append(t)
        S_list.append(S)
        c_list.append(c)
        Sd_list.append(dS)
        cd_list.append(dc)
    order = slice(None, None, -1) if span < 0 else slice(None)
    return SweepSegment(
        times=np.asarray(times)[order],
        S=np.asarray(S_list)[order],
        c=np.asarray(c_list)[order],
        S_dot=np.asarray(Sd_list)[order],
        c_dot=np.asarray(cd_list)[order],
    )


def hamiltonian_matrix(td: TildeData, b: Optional[np.ndarray] = None) -> np.ndarray:
    """Generator of the extremal flow on (x, p, 1): [[Ã, −R̃, b], [−Q̃, −Ã⊤, 0], [0, 0, 0]]."""
    n = td.n
    H = np.zeros((2 * n + 1, 2 * n + 1))
    H[:n, :n] = td.A_t
    H[:n, n : 2 * n] = -td.R_t
    H[:n, 2 * n] = _bias(n, b)
    H[n : 2 * n, :n] = -td.Q_t
    H[n : 2 * n, n : 2 * n] = -td.A_t.T
    return H


def _transfer_step(E: np.ndarray, S: np.ndarray, c: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    # Image of the graph {(x, Sx + c)} under one exponential, read back as a graph.
    n = S.shape[0]
    X = E[:n, :n] + E[:n, n : 2 * n] @ S
    x_c = E[:n, n : 2 * n] @ c + E[:n, 2 * n]
    L = E[n : 2 * n, :n] + E[n : 2 * n, n : 2 * n] @ S
    l_c = E[n : 2 * n, n : 2 * n] @ c + E[n : 2 * n, 2 * n]
    # det X starts at 1 on every chunk; a sign change means S escaped inside it.
    if not np.all(np.isfinite(X)) or np.linalg.det(X) <= 0 or np.linalg.cond(X) > 1.0 / np.finfo(float).eps:
        raise DivergenceError(f"Riccati solution has a conjugate point near t={t:.6g}", {"t": t})
    S_new = np.linalg.solve(X.T, L.T).T
    S_new = 0.5 * (S_new + S_new.T)
    c_new = l_c - S_new @ x_c
    if not (np.all(np.isfinite(S_new)) and np.all(np.isfinite(c_new))) or np.abs(S_new).max() > OVERFLOW_LIMIT:
        raise DivergenceError(f"Riccati solution overflowed at t={t:.6g}", {"t": t})
    return S_new, c_new


def riccati_transfer(
    td: TildeData,
    b: Optional[np.ndarray],
    S_end: np.ndarray,
    c_end: np.ndarray,
    t_end: float,
    t: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact S(t), c(t) of the sweep through S(t_end) = S_end, c(t_end) = c_end.

    The graph p = Sx + c is carried by the exponential of hamiltonian_matrix
    in chunks of unit norm, each read back as a graph before the next.

    Raises:
        DivergenceError: finite escape of S between t and t_end.
    """
    S, c = np.array(S_end, dtype=float), np.array(c_end, dtype=float)
    span = float(t) - float(t_end)
    if span == 0.0:
        return S, c
    H = hamiltonian_matrix(td, b)
    n_chunks = max(1, math.ceil(abs(span) * max(np.linalg.norm(H, 1), 1.0)))
    h = span / n_chunks
    E = expm(H * h)
    for k in range(n_chunks):
        S, c = _transfer_step(E, S, c, float(t_end) + (k + 1) * h)
    return S, c


def exact_riccati_segment(
    td: TildeData,
    b: Optional[np.ndarray],
    S_end: np.ndarray,
    c_end: np.ndarray,
    t_end: float,
    t_start: float,
    step: float,
) -> SweepSegment:
    """riccati_transfer sampled on a uniform grid from t_end back to t_start, ascending."""
    if not step > 0:
        raise InvalidModelError(f"step must be positive, got {step}")
    b = _bias(td.n, b)
    span = float(t_start) - float(t_end)
    n_steps = max(1, math.ceil(abs(span) / step - 1e-9)) if span else 0
    S, c = np.array(S_end, dtype=float), np.array(c_end, dtype=float)
    times, S_list, c_list = [float(t_end)], [S], [c]
    if n_steps:
        h = span / n_steps
        E = expm(hamiltonian_matrix(td, b) * h)
        for k in range(n_steps):
            t = float(t_start) if k == n_steps - 1 else float(t_end) + (k + 1) * h
            S, c = _transfer_step(E, S, c, t)
            times.append(t)
            S_list.append(S)
            c_list.append(c)
    derivs = [riccati_rhs(td, b, S, c) for S, c in zip(S_list, c_list)]
    order = slice(None, None, -1) if span < 0 else slice(None)
    return SweepSegment(
        times=np.asarray(times)[order],
        S=np.asarray(S_list)[order],
        c=np.asarray(c_list)[order],
        S_dot=np.asarray([d[0] for d in derivs])[order],
        c_dot=np.asarray([d[1] for d in derivs])[order],
    )


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Sampled S(t), c(t) on [t0, tf].

    At every jump time the grid holds the time twice: the left limit first,
    then the right limit, so each stretch between jumps stays continuous.
    """

    grid: np.ndarray
    S: np.ndarray
    c: np.ndarray
    S_dot: np.ndarray
    c_dot: np.ndarray
    jump_times: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("grid", "S", "c", "S_dot", "c_dot"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_segments(cls, segments: Sequence[SweepSegment], jump_times: Sequence[float] = ()) -> "RiccatiSolution":
        """Concatenate ascending segments that meet at the jump times."""
        return cls(
            grid=np.concatenate([s.times for s in segments]),
            S=np.concatenate([s.S for s in segments]),
            c=np.concatenate([s.c for s in segments]),
            S_dot=np.concatenate([s.S_dot for s in segments]),
            c_dot=np.concatenate([s.c_dot for s in segments]),
            jump_times=tuple(float(t) for t in jump_times),
        )

    @property
    def t0(self) -> float:
        return float(self.grid[0])

    @property
    def tf(self) -> float:
        return float(self.grid[-1])

    @cached_property
    def segment_bounds(self) -> list[tuple[int, int]]:
        breaks = np.flatnonzero(np.diff(self.grid) == 0)
        starts = np.concatenate([[0], breaks + 1])
        ends = np.concatenate([breaks, [self.grid.size - 1]])
        return list(zip(starts.tolist(), ends.tolist()))

    @cached_property
    def _splines(self) -> list[Optional[tuple[CubicHermiteSpline, CubicHermiteSpline]]]:
        n = self.c.shape[1]
        splines = []
        for lo, hi in self.segment_bounds:
            if hi == lo:
                splines.append(None)
                continue
            t = self.grid[lo : hi + 1]
            S_spline = CubicHermiteSpline(
                t, self.S[lo : hi + 1].reshape(-1, n * n), self.S_dot[lo : hi + 1].reshape(-1, n * n)
            )
            c_spline = CubicHermiteSpline(t, self.c[lo : hi + 1], self.c_dot[lo : hi + 1])
            splines.append((S_spline, c_spline))
        return splines

    def segment_index(self, t: float, side: str = "right") -> int:
        starts = self.grid[[lo for lo, _ in self.segment_bounds]]
        k = int(np.searchsorted(starts, t, side="right" if side == "right" else "left")) - 1
        return min(max(k, 0), len(self.segment_bounds) - 1)

    def evaluate(self, t: float, side: str = "right") -> tuple[np.ndarray, np.ndarray]:
        """S and c at t; at a jump time side picks the right (after) or left (before) limit.

        Outside the sampled range the end values are held.
        """
        k = self.segment_index(t, side)
        lo, hi = self.segment_bounds[k]
        n = self.c.shape[1]
        t_clamped = min(max(t, self.grid[lo]), self.grid[hi])
        spline = self._splines[k]
        if spline is None:
            return self.S[lo].copy(), self.c[lo].copy()
        S = spline[0](t_clamped).reshape(n, n)
        return 0.5 * (S + S.T), spline[1](t_clamped)

    def one_sided(self, t_jump: float) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
        """Stored ((S⁻, c⁻), (S⁺, c⁺)) at a jump time."""
        idx = np.flatnonzero(self.grid == t_jump)
        if idx.size < 2:
            raise InvalidModelError(f"{t_jump} is not a jump time of this solution")
        left, right = idx[0], idx[-1]
        return (self.S[left], self.c[left]), (self.S[right], self.c[right])


def default_step(t_span: tuple[float, float]) -> float:
    return (float(t_span[1]) - float(t_span[0])) / DEFAULT_STEPS


def _horizon(t_span) -> tuple[float, float]:
    t0, tf = float(t_span[0]), float(t_span[1])
    if not tf > t0:
        raise InvalidModelError(f"horizon must satisfy t0 < tf, got {t_span}")
    return t0, tf


def _bias(n: int, b: Optional[np.ndarray]) -> np.ndarray:
    return np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(n)


def solve_riccati_backward(
    A: np.ndarray,
    B: np.ndarray,
    cost: QuadraticCost,
    t_span: tuple[float, float],
    step: Optional[float] = None,
    b: Optional[np.ndarray] = None,
) -> RiccatiSolution:
    """Backward RK4 sweep from S(tf) = F, c(tf) = r."""
    t0, tf = _horizon(t_span)
    td = tilde(cost, A, B)
    step = default_step(t_span) if step is None else float(step)
    segment = integrate_riccati(td, _bias(cost.n, b), cost.F, cost.r, tf, t0, step)
    return RiccatiSolution.from_segments([segment])


# =============================================================================
# Forward reconstruction
# =============================================================================


def closed_loop_arc(
    td: TildeData,
    b: np.ndarray,
    lookup: RiccatiLookup,
    x0: np.ndarray,
    times: np.ndarray,
) -> Arc:
    """RK4 of ẋ = Ãx − R̃(Sx + c) + b on the given nodes, recording p = Sx + c and u*.

    lookup(t, side) supplies S, c; the arc's last node uses the left limit.
    """
    x = np.array(x0, dtype=float)
    states, costates, controls = [], [], []

    def rhs(t: float, state: np.ndarray, side: str) -> np.ndarray:
        S, c = lookup(t, side)
        return td.A_t @ state - td.R_t @ (S @ state + c) + b

    for k, t in enumerate(times):
        side = "left" if k == len(times) - 1 and k > 0 else "right"
        S, c = lookup(t, side)
        states.append(x.copy())
        costates.append(S @ x + c)
        controls.append(optimal_control(td, S, c, x))
        if k == len(times) - 1:
            break
        h = times[k + 1] - t
        k1 = rhs(t, x, "right")
        k2 = rhs(t + h / 2, x + h / 2 * k1, "right")
        k3 = rhs(t + h / 2, x + h / 2 * k2, "right")
        k4 = rhs(t + h, x + h * k3, "left")
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"closed-loop state diverged at t={t + h:.6g}", {"t": float(t + h)})
    return Arc(
        times=np.asarray(times, dtype=float),
        states=np.vstack(states),
        controls=np.vstack(controls) if td.m else np.zeros((len(states), 0)),
        costates=np.vstack(costates),
    )


def reconstruct(
    A: np.ndarray,
    B: np.ndarray,
    cost: QuadraticCost,
    sol: RiccatiSolution,
    x0: Sequence[float],
    b: Optional[np.ndarray] = None,
) -> HybridTrajectory:
    """Jump-free closed-loop trajectory on the sweep's own grid."""
    if sol.jump_times:
        raise InvalidModelError("reconstruct expects a jump-free solution; use reconstruct_temporal")
    td = tilde(cost, A, B)
    arc = closed_loop_arc(td, _bias(cost.n, b), sol.evaluate, np.asarray(x0, dtype=float), sol.grid)
    return HybridTrajectory(arcs=(arc,), jumps=(), t0=sol.t0, tf=sol.tf)


def trajectory_cost(traj: HybridTrajectory, cost: QuadraticCost) -> float:
    """Simpson quadrature of the running cost over every arc plus the terminal cost."""
    total = 0.0
    for arc in traj.arcs:
        if arc.times.size < 2:
            continue
        integrand = cost.running(arc.states, arc.controls)
        total += float(simpson(integrand, x=arc.times))
    return total + cost.terminal(traj.final_state)


def hamiltonian_flow(
    td: TildeData,
    x0: np.ndarray,
    p0: np.ndarray,
    t_span: tuple[float, float],
    step: Optional[float] = None,
    b: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Extremal flow ẋ = Ãx − R̃p + b, ṗ = −Q̃x − Ã⊤p sampled on a uniform grid.

    Each step applies the exponential of hamiltonian_matrix, so the samples
    are exact up to rounding.

    Returns:
        (times, states, costates)
    """
    t0, tf = _horizon(t_span)
    step = default_step(t_span) if step is None else float(step)
    n_steps = max(1, math.ceil((tf - t0) / step - 1e-9))
    h = (tf - t0) / n_steps
    E = expm(hamiltonian_matrix(td, b) * h)

    z = np.concatenate([np.asarray(x0, dtype=float), np.asarray(p0, dtype=float), [1.0]])
    out = [z]
    for _ in range(n_steps):
        z = E @ z
        out.append(z)
    Z = np.vstack(out)
    if not np.all(np.isfinite(Z)):
        raise DivergenceError("extremal flow overflowed", {"t_span": [t0, tf]})
    times = t0 + h * np.arange(n_steps + 1)
    times[-1] = tf
    return times, Z[:, : td.n], Z[:, td.n : 2 * td.n]


def extremal_controls(td: TildeData, states: np.ndarray, costates: np.ndarray) -> np.ndarray:
    """u = −R⁻¹(N⊤x + B⊤p) row by row."""
    states = np.atleast_2d(states)
    if td.m == 0:
        return np.zeros((states.shape[0], 0))
    rhs = states @ td.N + np.atleast_2d(costates) @ td.B
    return -td.solve_R(rhs.T).T


__all__ = [
    "QuadraticCost",
    "RiccatiSolution",
    "SweepSegment",
    "TildeData",
    "closed_loop_arc",
    "default_step",
    "exact_riccati_segment",
    "extremal_controls",
    "hamiltonian",
    "hamiltonian_flow",
    "hamiltonian_matrix",
    "integrate_riccati",
    "optimal_control",
    "reconstruct",
    "riccati_rhs",
    "riccati_transfer",
    "solve_riccati_backward",
    "tilde",
    "trajectory_cost",
    "unoptimized_hamiltonian",
]
