# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
First-order dynamic programming on a (t, x, u) grid.

The cost-to-go is stepped backwards with forward Euler transitions. A step
that crosses the guard is cut at the linearly interpolated crossing point,
reset there, and finished from the post-reset state. Off-grid values come
from multilinear interpolation on the uniform state axes, extrapolated by at
most one cell; anything farther out is +inf.

All per-element arithmetic is written as explicit elementwise sums so that a
node re-evaluated on its own gives bit-identical results to the batched solve.
"""

import itertools
import json
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..context import Tolerances, default_tolerances
from ..errors import GridError, InvalidModelError
from .hybrid_system import Arc, Branch, HybridSystem, HybridTrajectory, JumpRecord
from .lqr_core import QuadraticCost

logger = logging.getLogger(__name__)

MAGIC = b"HLQRVG01"
TARGET_CHUNK_ELEMENTS = 2_000_000


def _axis(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size < 2:
        raise InvalidModelError(f"{name} needs at least 2 points, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidModelError(f"{name} contains non-finite values")
    steps = np.diff(arr)
    if np.any(steps <= 0):
        raise InvalidModelError(f"{name} must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise InvalidModelError(f"{name} must be uniformly spaced")
    arr.setflags(write=False)
    return arr


def _linspace(name: str, spec) -> np.ndarray:
    try:
        start, stop, num = spec
    except (TypeError, ValueError) as e:
        raise InvalidModelError(f"{name} must be [start, stop, num], got {spec!r}") from e
    return _axis(name, np.linspace(float(start), float(stop), int(num)))


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Uniform state axes, time grid and control axes."""

    x_axes: tuple[np.ndarray, ...]
    t_grid: np.ndarray
    u_axes: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        if not self.x_axes:
            raise InvalidModelError("at least one state axis is required")
        object.__setattr__(self, "x_axes", tuple(_axis(f"x axis {i}", a) for i, a in enumerate(self.x_axes)))
        object.__setattr__(self, "t_grid", _axis("t grid", self.t_grid))
        object.__setattr__(self, "u_axes", tuple(_axis(f"u axis {i}", a) for i, a in enumerate(self.u_axes)))

    @property
    def n(self) -> int:
        return len(self.x_axes)

    @property
    def m(self) -> int:
        return len(self.u_axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.x_axes)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    def nodes(self) -> np.ndarray:
        """All state nodes, row-major over the axes, shape (node_count, n)."""
        mesh = np.meshgrid(*self.x_axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def controls(self) -> np.ndarray:
        if not self.u_axes:
            return np.zeros((1, 0))
        mesh = np.meshgrid(*self.u_axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def contains(self, x: Sequence[float]) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        return bool(all(a[0] <= v <= a[-1] for a, v in zip(self.x_axes, x)))

    @classmethod
    def from_config(cls, data: dict) -> "GridSpec":
        """Build from {"x": [[start, stop, num], ...], "t": [t0, tf, num], "u": [[start, stop, num], ...]}."""
        try:
            x_specs, t_spec = data["x"], data["t"]
        except KeyError as e:
            raise InvalidModelError(f"grid document is missing field {e.args[0]!r}") from e
        return cls(
            x_axes=tuple(_linspace(f"x axis {i}", s) for i, s in enumerate(x_specs)),
            t_grid=_linspace("t grid", t_spec),
            u_axes=tuple(_linspace(f"u axis {i}", s) for i, s in enumerate(data.get("u", []))),
        )

    def to_config(self) -> dict:
        def spec(a: np.ndarray) -> list:
            return [float(a[0]), float(a[-1]), int(a.size)]

        return {"x": [spec(a) for a in self.x_axes], "t": spec(self.t_grid), "u": [spec(a) for a in self.u_axes]}


@dataclass(frozen=True, eq=False)
class ValueGrid:
    """values[k] is the cost-to-go at t_grid[k]; policy[k] the argmin control index."""

    grid: GridSpec
    values: np.ndarray
    policy: np.ndarray

    def value_at(self, k: int, x: Sequence[float]) -> float:
        stencil = _Stencil.build(self.grid, np.asarray(x, dtype=float).reshape(1, -1))
        return float(stencil.interpolate(self.values[k].reshape(-1))[0])

    def summary(self, x0: Optional[Sequence[float]] = None) -> dict:
        finite = np.isfinite(self.values[0])
        data = {
            "grid": self.grid.to_config(),
            "finite_fraction_t0": float(finite.mean()),
            "min_value_t0": float(self.values[0][finite].min()) if finite.any() else math.inf,
        }
        if x0 is not None:
            data["x0"] = [float(v) for v in x0]
            data["value_t0_x0"] = self.value_at(0, x0)
        return data


# =============================================================================
# Elementwise kernels
# =============================================================================


def _apply(M: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Rows of X mapped by M, as explicit sums over the inner index."""
    out = np.zeros(X.shape[:-1] + (M.shape[0],))
    for i in range(M.shape[0]):
        acc = np.zeros(X.shape[:-1])
        for j in range(M.shape[1]):
            if M[i, j] != 0.0:
                acc = acc + M[i, j] * X[..., j]
        out[..., i] = acc
    return out


def _dot(v: np.ndarray, X: np.ndarray) -> np.ndarray:
    acc = np.zeros(X.shape[:-1])
    for j in range(v.size):
        if v[j] != 0.0:
            acc = acc + v[j] * X[..., j]
    return acc


def _quadratic(M: np.ndarray, X: np.ndarray) -> np.ndarray:
    acc = np.zeros(X.shape[:-1])
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            if M[i, j] != 0.0:
                acc = acc + M[i, j] * X[..., i] * X[..., j]
    return acc


def _norm(X: np.ndarray) -> np.ndarray:
    acc = np.zeros(X.shape[:-1])
    for j in range(X.shape[-1]):
        acc = acc + X[..., j] * X[..., j]
    return np.sqrt(acc)


@dataclass(frozen=True, eq=False)
class _Stencil:
    """Multilinear interpolation weights of a batch of points on the state grid."""

    base: np.ndarray
    frac: np.ndarray
    valid: np.ndarray
    offsets: tuple[tuple[tuple[int, ...], int], ...]

    @classmethod
    def build(cls, grid: GridSpec, points: np.ndarray) -> "_Stencil":
        shape = grid.shape
        strides = [int(np.prod(shape[d + 1 :])) for d in range(grid.n)]
        base = np.zeros(points.shape[:-1], dtype=np.int64)
        frac = np.zeros(points.shape)
        valid = np.all(np.isfinite(points), axis=-1)
        for d, axis in enumerate(grid.x_axes):
            h = (axis[-1] - axis[0]) / (axis.size - 1)
            s = (np.where(valid, points[..., d], axis[0]) - axis[0]) / h
            valid &= (s >= -1.0) & (s <= axis.size)
            cell = np.clip(np.floor(s), 0, axis.size - 2).astype(np.int64)
            frac[..., d] = s - cell
            base += cell * strides[d]
        offsets = tuple(
            (bits, int(sum(b * s for b, s in zip(bits, strides)))) for bits in itertools.product((0, 1), repeat=grid.n)
        )
        return cls(base=base, frac=frac, valid=valid, offsets=offsets)

    def take(self, rows: np.ndarray) -> "_Stencil":
        return _Stencil(self.base[rows], self.frac[rows], self.valid[rows], self.offsets)

    def interpolate(self, flat_values: np.ndarray) -> np.ndarray:
        acc = np.zeros(self.base.shape)
        bad = ~self.valid
        for bits, offset in self.offsets:
            weight = np.ones(self.base.shape)
            for d, bit in enumerate(bits):
                weight = weight * (self.frac[..., d] if bit else 1.0 - self.frac[..., d])
            corner = flat_values[self.base + offset]
            finite = np.isfinite(corner)
            bad |= (weight != 0.0) & ~finite
            acc = acc + weight * np.where(finite, corner, 0.0)
        acc[bad] = math.inf
        return acc


@dataclass(frozen=True, eq=False)
class _Step:
    xi: np.ndarray
    valid: np.ndarray
    crossed: np.ndarray
    theta: np.ndarray
    x_pre: np.ndarray
    x_post: np.ndarray
    depth: np.ndarray


class _Model:
    """Vectorized Euler transitions, resets and running cost of one system."""

    def __init__(self, sys: HybridSystem, cost: QuadraticCost, tol: Tolerances):
        self.sys = sys
        self.cost = cost
        self.tol = tol
        self.lam_norm = float(np.linalg.norm(sys.lam))
        self.lam_sq = float(sys.lam @ sys.lam)

    def guard(self, X: np.ndarray) -> np.ndarray:
        return _dot(self.sys.lam, X) - self.sys.offset

    def drift(self, X: np.ndarray) -> np.ndarray:
        return _apply(self.sys.A, X) + self.sys.drift

    def _on_guard(self, X: np.ndarray) -> np.ndarray:
        scale = self.tol.guard_rtol * (self.lam_norm * _norm(X) + abs(self.sys.offset))
        on = np.abs(self.guard(X)) <= scale
        gate = self.sys.crossing_direction
        if gate:
            dx = self.drift(X)
            nv = _dot(self.sys.lam, dx)
            nv_scale = self.tol.guard_rtol * self.lam_norm * _norm(dx)
            on &= np.where(np.abs(nv) <= nv_scale, False, np.sign(nv) == gate)
        return on

    def reset(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized apply_reset; returns (x_post, depth, blocked)."""
        sys = self.sys
        x = _apply(sys.C, X) + sys.jump_bias
        depth = np.zeros(X.shape[:-1], dtype=np.int64)
        if not np.any(sys.jump_bias):
            trivial = np.all(X == 0.0, axis=-1)
            x[trivial] = 0.0
        else:
            trivial = np.zeros(depth.shape, dtype=bool)
        for _ in range(sys.n + 1):
            again = self._on_guard(x) & ~trivial
            if not again.any():
                break
            depth[again] += 1
            x[again] = _apply(sys.C, x[again]) + sys.jump_bias
        return x, depth, depth > sys.n

    def running(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """ℒ(x, u) for every pair, shape (len(X), len(U))."""
        c = self.cost
        value = 0.5 * _quadratic(c.Q, X)[:, None]
        if c.m:
            value = value + 0.5 * _quadratic(c.R, U)[None, :]
            XN = _apply(c.N.T, X)
            value = value + _dot_pairs(XN, U)
        else:
            value = value + np.zeros((1, U.shape[0]))
        return value

    def step(self, X: np.ndarray, U: np.ndarray, dt: float) -> _Step:
        """Euler step of every (node, control) pair with the crossing handled."""
        sys = self.sys
        fx = self.drift(X)
        fu = _apply(sys.B, U) if sys.m else np.zeros((U.shape[0], sys.n))
        f = fx[:, None, :] + fu[None, :, :]
        xi = X[:, None, :] + dt * f
        g0 = np.broadcast_to(self.guard(X)[:, None], xi.shape[:-1])
        g1 = self.guard(xi)
        crossed = ((g0 > 0) & (g1 <= 0)) | ((g0 < 0) & (g1 >= 0))
        if sys.crossing_direction < 0:
            crossed &= g0 > 0
        elif sys.crossing_direction > 0:
            crossed &= g0 < 0

        theta = np.zeros(xi.shape[:-1])
        x_pre = np.full(xi.shape, np.nan)
        x_post = np.full(xi.shape, np.nan)
        depth = np.zeros(xi.shape[:-1], dtype=np.int64)
        valid = np.ones(xi.shape[:-1], dtype=bool)
        if crossed.any():
            idx = np.nonzero(crossed)
            th = g0[idx] / (g0[idx] - g1[idx])
            fc = f[idx]
            hit = X[idx[0]] + (th * dt)[:, None] * fc
            hit = hit - np.outer(self.guard(hit) / self.lam_sq, sys.lam)
            post, dep, blocked = self.reset(hit)
            f_post = self.drift(post) + fu[idx[1]]
            xi[idx] = post + ((1.0 - th) * dt)[:, None] * f_post
            theta[idx] = th
            x_pre[idx] = hit
            x_post[idx] = post
            depth[idx] = dep
            valid[idx] = ~blocked
        return _Step(xi=xi, valid=valid, crossed=crossed, theta=theta, x_pre=x_pre, x_post=x_post, depth=depth)


def _dot_pairs(XN: np.ndarray, U: np.ndarray) -> np.ndarray:
    acc = np.zeros((XN.shape[0], U.shape[0]))
    for j in range(U.shape[1]):
        acc = acc + XN[:, j][:, None] * U[:, j][None, :]
    return acc


def _terminal(cost: QuadraticCost, X: np.ndarray) -> np.ndarray:
    return 0.5 * _quadratic(cost.F, X) + _dot(cost.r, X)


# =============================================================================
# Backward induction
# =============================================================================


@dataclass(frozen=True, eq=False)
class _Transitions:
    """Reusable per-chunk data: the grid is time invariant and uniform in t."""

    controls: slice
    stencil: _Stencil
    running: np.ndarray


def _check_dims(sys: HybridSystem, cost: QuadraticCost, grid: GridSpec):
    if grid.n != sys.n:
        raise InvalidModelError(f"grid has {grid.n} state axes, system has n={sys.n}")
    if grid.m != sys.m or cost.m != sys.m or cost.n != sys.n:
        raise InvalidModelError(f"grid/cost/system control dimensions disagree ({grid.m}, {cost.m}, {sys.m})")


def _transitions(model: _Model, grid: GridSpec, X: np.ndarray, U: np.ndarray, chunk: int) -> list[_Transitions]:
    dt = grid.dt
    out = []
    for start in range(0, U.shape[0], chunk):
        sl = slice(start, min(start + chunk, U.shape[0]))
        step = model.step(X, U[sl], dt)
        stencil = _Stencil.build(grid, step.xi)
        valid = stencil.valid & step.valid
        stencil = _Stencil(stencil.base, stencil.frac, valid, stencil.offsets)
        out.append(_Transitions(controls=sl, stencil=stencil, running=model.running(X, U[sl]) * dt))
    return out


def _bellman_backup(transitions: Sequence[_Transitions], next_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """min over controls of ℒΔt + V_next(ξ); returns (values, argmin control index)."""
    best = None
    arg = None
    for tr in transitions:
        total = tr.running + tr.stencil.interpolate(next_values)
        local = np.argmin(total, axis=1)
        local_best = total[np.arange(total.shape[0]), local]
        if best is None:
            best, arg = local_best, local + tr.controls.start
        else:
            better = local_best < best
            best = np.where(better, local_best, best)
            arg = np.where(better, local + tr.controls.start, arg)
    return best, arg


def _chunk_size(nodes: int, controls: int, chunk_size: Optional[int]) -> int:
    if chunk_size is not None:
        return max(1, int(chunk_size))
    return max(1, min(controls, TARGET_CHUNK_ELEMENTS // max(nodes, 1)))


def dp_solve(
    sys: HybridSystem,
    cost: QuadraticCost,
    grid: GridSpec,
    chunk_size: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> ValueGrid:
    """Backward induction from V(tf, x) = ½x⊤Fx + r⊤x at the nodes.

    Raises:
        GridError: a whole time slice is +inf, so no node has an admissible transition.
    """
    _check_dims(sys, cost, grid)
    tol = tol or default_tolerances()
    model = _Model(sys, cost, tol)
    X, U = grid.nodes(), grid.controls()
    nt = grid.t_grid.size
    transitions = _transitions(model, grid, X, U, _chunk_size(X.shape[0], U.shape[0], chunk_size))

    values = np.empty((nt, X.shape[0]))
    policy = np.zeros((nt - 1, X.shape[0]), dtype=np.int32)
    values[-1] = _terminal(cost, X)
    for k in range(nt - 2, -1, -1):
        values[k], policy[k] = _bellman_backup(transitions, values[k + 1])
        finite = np.isfinite(values[k])
        if not finite.any():
            raise GridError(
                f"no node has an admissible transition at t={grid.t_grid[k]:.6g}",
                {"t_index": k, "grid": grid.to_config()},
            )
        if k % 25 == 0:
            logger.debug("DP slice %d/%d: %.1f%% finite", k, nt - 1, 100.0 * finite.mean())
    unreachable = int(np.count_nonzero(~np.isfinite(values[0])))
    if unreachable:
        logger.warning("%d of %d nodes have infinite cost-to-go at t0", unreachable, X.shape[0])
    shape = (nt,) + grid.shape
    return ValueGrid(grid=grid, values=values.reshape(shape), policy=policy.reshape((nt - 1,) + grid.shape))


def bellman_residual(
    sys: HybridSystem,
    cost: QuadraticCost,
    vg: ValueGrid,
    samples: int = 1000,
    seed: int = 0,
    tol: Optional[Tolerances] = None,
) -> float:
    """Largest |V(t_k, x) − backup| at random interior nodes, recomputed one node batch at a time."""
    _check_dims(sys, cost, vg.grid)
    tol = tol or default_tolerances()
    grid = vg.grid
    rng = np.random.default_rng(seed)
    nt = grid.t_grid.size
    interior = [np.arange(1, s - 1) if s > 2 else np.arange(s) for s in grid.shape]
    ks = rng.integers(0, nt - 1, size=samples)
    multi = np.stack([rng.choice(ax, size=samples) for ax in interior], axis=-1)
    flat = np.ravel_multi_index(tuple(multi.T), grid.shape)
    X = grid.nodes()[flat]
    U = grid.controls()
    model = _Model(sys, cost, tol)
    transitions = _transitions(model, grid, X, U, _chunk_size(X.shape[0], U.shape[0], None))
    worst = 0.0
    for k in np.unique(ks):
        rows = np.flatnonzero(ks == k)
        sub = [_Transitions(tr.controls, tr.stencil.take(rows), tr.running[rows]) for tr in transitions]
        backup, _ = _bellman_backup(sub, vg.values[k + 1].reshape(-1))
        stored = vg.values[k].reshape(-1)[flat[rows]]
        both_inf = np.isinf(backup) & np.isinf(stored)
        diff = np.where(both_inf, 0.0, np.abs(backup - stored))
        worst = max(worst, float(diff.max()))
    return worst


# =============================================================================
# Rollout
# =============================================================================


@dataclass(frozen=True, eq=False)
class DPRollout:
    trajectory: HybridTrajectory
    cost: float
    truncated: bool
    control_indices: tuple[int, ...]

    @property
    def jump_count(self) -> int:
        return self.trajectory.jump_count

    def to_dict(self) -> dict:
        return {
            "cost": self.cost,
            "truncated": self.truncated,
            "jump_count": self.jump_count,
            "jump_times": [j.t for j in self.trajectory.jumps],
        }


def dp_rollout(
    sys: HybridSystem,
    cost: QuadraticCost,
    vg: ValueGrid,
    x0: Sequence[float],
    tol: Optional[Tolerances] = None,
) -> DPRollout:
    """Greedy forward pass: at each t_k pick the control minimizing ℒΔt + V(t_{k+1}, ξ).

    Uses the same Euler and crossing step as dp_solve. Leaving the grid (or
    reaching a state with infinite cost-to-go) stops the rollout with
    truncated=True; the cost is then the running cost accrued so far.
    """
    grid = vg.grid
    _check_dims(sys, cost, grid)
    tol = tol or default_tolerances()
    x = np.asarray(x0, dtype=float).reshape(-1)
    if not grid.contains(x):
        raise InvalidModelError("x0 lies outside the grid domain", {"x0": x.tolist()})
    if not math.isfinite(vg.value_at(0, x)):
        raise GridError("x0 has infinite cost-to-go on this grid", {"x0": x.tolist()})

    model = _Model(sys, cost, tol)
    U = grid.controls()
    t_grid, dt = grid.t_grid, grid.dt
    arcs: list[Arc] = []
    jumps: list[JumpRecord] = []
    times, states, controls, picks = [float(t_grid[0])], [x.copy()], [], []
    total = 0.0
    truncated = False
    last_jump = float(t_grid[0])

    for k in range(t_grid.size - 1):
        tr = _transitions(model, grid, x[None, :], U, U.shape[0])[0]
        candidates = tr.running[0] + tr.stencil.interpolate(vg.values[k + 1].reshape(-1))[0]
        j = int(np.argmin(candidates))
        if not math.isfinite(candidates[j]):
            truncated = True
            logger.warning("DP rollout left the grid domain at t=%.6g", t_grid[k])
            break
        step = model.step(x[None, :], U[j : j + 1], dt)
        u = U[j]
        total += float(tr.running[0, j])
        picks.append(j)
        controls.append(u)
        if step.crossed[0, 0]:
            t_hit = float(t_grid[k] + step.theta[0, 0] * dt)
            x_pre, x_post = step.x_pre[0, 0], step.x_post[0, 0]
            times.append(t_hit)
            states.append(x_pre)
            controls.append(u)
            arcs.append(_arc(times, states, controls, sys.m))
            jumps.append(
                JumpRecord(
                    t=t_hit,
                    x_pre=x_pre,
                    x_post=x_post,
                    beating_depth=int(step.depth[0, 0]),
                    branch=Branch.NA,
                    dwell_time=t_hit - last_jump,
                )
            )
            last_jump = t_hit
            times, states, controls = [t_hit], [x_post.copy()], [u]
        x = step.xi[0, 0]
        times.append(float(t_grid[k + 1]))
        states.append(x.copy())

    controls.append(controls[-1] if controls else np.zeros(sys.m))
    if not truncated:
        total += float(_terminal(cost, x[None, :])[0])
    arcs.append(_arc(times, states, controls, sys.m))
    traj = HybridTrajectory(arcs=tuple(arcs), jumps=tuple(jumps), t0=float(t_grid[0]), tf=float(t_grid[-1]))
    return DPRollout(trajectory=traj, cost=total, truncated=truncated, control_indices=tuple(picks))


def _arc(times: list, states: list, controls: list, m: int) -> Arc:
    ctrl = np.vstack(controls[: len(times)]) if m else np.zeros((len(times), 0))
    return Arc(times=np.asarray(times), states=np.vstack(states), controls=ctrl)


# =============================================================================
# Persistence
# =============================================================================


def save_value_grid(vg: ValueGrid, path: Union[str, Path], x0: Optional[Sequence[float]] = None) -> Path:
    """Binary tableau plus a JSON summary next to it (same stem, .json).

    Layout, little-endian: magic, uint32 n, m, nt; per axis (x axes, then t,
    then u axes) a uint32 length and its doubles; the values as row-major
    doubles; the policy as row-major int32.
    """
    path = Path(path)
    grid = vg.grid
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", grid.n, grid.m, grid.t_grid.size))
        for axis in (*grid.x_axes, grid.t_grid, *grid.u_axes):
            fh.write(struct.pack("<I", axis.size))
            fh.write(np.ascontiguousarray(axis, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(vg.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(vg.policy, dtype="<i4").tobytes())
    summary = vg.summary(x0)
    path.with_suffix(".json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    logger.info("Saved value grid %s (%d bytes)", path, path.stat().st_size)
    return path


def load_value_grid(path: Union[str, Path]) -> ValueGrid:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise InvalidModelError(f"{path} is not a value grid file")
    pos = len(MAGIC)
    n, m, nt = struct.unpack_from("<III", data, pos)
    pos += 12

    def read_axis() -> np.ndarray:
        nonlocal pos
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        axis = np.frombuffer(data, dtype="<f8", count=length, offset=pos).astype(float)
        pos += 8 * length
        return axis

    x_axes = tuple(read_axis() for _ in range(n))
    t_grid = read_axis()
    u_axes = tuple(read_axis() for _ in range(m))
    if t_grid.size != nt:
        raise InvalidModelError(f"{path}: time axis length {t_grid.size} disagrees with header {nt}")
    grid = GridSpec(x_axes=x_axes, t_grid=t_grid, u_axes=u_axes)
    count = nt * grid.node_count
    values = np.frombuffer(data, dtype="<f8", count=count, offset=pos).astype(float).reshape((nt,) + grid.shape)
    pos += 8 * count
    pcount = (nt - 1) * grid.node_count
    policy = np.frombuffer(data, dtype="<i4", count=pcount, offset=pos).astype(np.int32)
    return ValueGrid(grid=grid, values=values, policy=policy.reshape((nt - 1,) + grid.shape))


__all__ = [
    "DPRollout",
    "GridSpec",
    "ValueGrid",
    "bellman_residual",
    "dp_rollout",
    "dp_solve",
    "load_value_grid",
    "save_value_grid",
]
