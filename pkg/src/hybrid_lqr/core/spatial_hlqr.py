# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Hybrid LQR/AQR with jumps triggered by the guard λ⊤x = a.

At an impact x⁻ the co-state jumps by p⁻ = C⊤p⁺ + ελ, and conservation of the
Hamiltonian fixes the multiplier ε as a root of αε² + βε + γ = 0. With the
co-state p = Sx + c the sweep becomes S⁻ = C⊤S⁺C and c⁻ = C⊤(S⁺κ + c⁺) + ελ,
but the impact times and points now come from the state, so the state and
co-state problems are solved together by a forward-backward iteration.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from ..context import Tolerances, default_tolerances
from ..errors import (
    BeatingEncounteredError,
    HybridControlError,
    IllConditionedError,
    InvalidModelError,
    NoExtremalJumpError,
    NonConvergenceError,
    SuspectedZenoError,
    TangentialImpactError,
)
from .guard_analysis import beating_flag, has_war
from .hybrid_system import (
    AffineHybridSystem,
    Arc,
    Branch,
    HybridSystem,
    HybridTrajectory,
    JumpRecord,
    LinearHybridSystem,
    ZenoReport,
    apply_reset,
    flow_arc,
    guard_value,
    on_guard,
    simulate,
    vector_field,
)
from .lqr_core import (
    QuadraticCost,
    RiccatiSolution,
    TildeData,
    default_step,
    exact_riccati_segment,
    extremal_controls,
    hamiltonian,
    hamiltonian_flow,
    hamiltonian_matrix,
    riccati_transfer,
    tilde,
    trajectory_cost,
)

logger = logging.getLogger(__name__)

COST_TIE_RTOL = 1e-9


class Regime(str, Enum):
    TWO_ROOTS = "two_roots"
    DOUBLE_ROOT = "double_root"
    NO_ROOTS = "no_roots"
    WAR_LINEAR = "war_linear"


@dataclass(frozen=True)
class MultiplierQuadratic:
    """αε² + βε + γ = 0 at one impact, with its classified roots."""

    alpha: float
    beta: float
    gamma: float
    discriminant: float
    roots: tuple[float, ...]
    regime: Regime

    def normal_velocity(self, epsilon: float) -> float:
        """λ⊤ẋ⁻ produced by choosing this ε."""
        return self.beta + 2.0 * self.alpha * epsilon

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "discriminant": self.discriminant,
            "roots": list(self.roots),
            "regime": self.regime.value,
        }


@dataclass(frozen=True, eq=False)
class ReducedCoefficients:
    """γ as a function of x⁻ alone once p⁺ = S⁺Cx⁻ + c⁺ is substituted."""

    Gamma: np.ndarray
    v: np.ndarray
    w: float

    def gamma(self, x: np.ndarray) -> float:
        return float(x @ self.Gamma @ x + self.v @ x + self.w)


@dataclass(frozen=True, eq=False)
class DiscriminantForm:
    """𝒟(x, p) = z⊤Mz with z = (x, p); linear systems only."""

    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    def __call__(self, x: Sequence[float], p: Sequence[float]) -> float:
        z = np.concatenate([np.asarray(x, dtype=float).reshape(-1), np.asarray(p, dtype=float).reshape(-1)])
        if z.size != self.matrix.shape[0]:
            raise InvalidModelError(f"(x, p) must have total length {self.matrix.shape[0]}, got {z.size}")
        return float(z @ self.matrix @ z)


@dataclass(frozen=True, eq=False)
class CostateJump:
    p_minus: np.ndarray
    p_plus: np.ndarray
    epsilon: float
    branch: Branch
    quadratic: MultiplierQuadratic
    normal_velocity: float
    hamiltonian_gap: float

    def to_dict(self) -> dict:
        return {
            "p_minus": self.p_minus.tolist(),
            "p_plus": self.p_plus.tolist(),
            "epsilon": self.epsilon,
            "branch": self.branch.value,
            "quadratic": self.quadratic.to_dict(),
            "normal_velocity": self.normal_velocity,
            "hamiltonian_gap": self.hamiltonian_gap,
        }


# =============================================================================
# Multiplier quadratic
# =============================================================================


def _affine_parts(n: int, affine: Optional[tuple]) -> tuple[np.ndarray, np.ndarray]:
    if affine is None:
        return np.zeros(n), np.zeros(n)
    b, kappa = affine
    return np.asarray(b, dtype=float).reshape(n), np.asarray(kappa, dtype=float).reshape(n)


def _commutator(C: np.ndarray, A: np.ndarray) -> np.ndarray:
    return C @ A - A @ C


def _classify(alpha: float, beta: float, gamma: float, tol: Tolerances) -> MultiplierQuadratic:
    disc = beta * beta - 4.0 * alpha * gamma
    scale = beta * beta + abs(4.0 * alpha * gamma) + 1.0
    if abs(disc) <= tol.double_root_rtol * scale:
        return MultiplierQuadratic(alpha, beta, gamma, disc, (-beta / (2.0 * alpha),), Regime.DOUBLE_ROOT)
    if disc < 0:
        return MultiplierQuadratic(alpha, beta, gamma, disc, (), Regime.NO_ROOTS)
    q = -0.5 * (beta + math.copysign(math.sqrt(disc), beta))
    roots = (q / alpha, gamma / q)
    return MultiplierQuadratic(alpha, beta, gamma, disc, tuple(sorted(roots)), Regime.TWO_ROOTS)


def multiplier_coefficients(
    td: TildeData,
    C: np.ndarray,
    lam: np.ndarray,
    x_minus: Sequence[float],
    p_plus: Sequence[float],
    affine: Optional[tuple] = None,
    offset: float = 0.0,
    war: Optional[bool] = None,
    reduced: Optional[ReducedCoefficients] = None,
    tol: Optional[Tolerances] = None,
) -> MultiplierQuadratic:
    """α, β, γ at the impact point x⁻ with post-jump co-state p⁺.

    Args:
        affine: optional (b, κ) pair; adds the drift and jump-bias terms.
        offset: guard offset a of λ⊤x = a.
        war: weakly actuated reset flag; computed from B when omitted.
        reduced: reduced coefficients for γ (linear systems only).

    Raises:
        InvalidModelError: x⁻ is not on the guard.
        TangentialImpactError: WAR system with β ≈ 0.
    """
    tol = tol or default_tolerances()
    C = np.asarray(C, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    x = np.asarray(x_minus, dtype=float).reshape(-1)
    p = np.asarray(p_plus, dtype=float).reshape(-1)
    n = td.n
    if x.shape != (n,) or p.shape != (n,) or lam.shape != (n,):
        raise InvalidModelError(f"x_minus, p_plus and lambda must have length {n}")
    g = float(lam @ x - offset)
    if abs(g) > tol.guard_rtol * (np.linalg.norm(lam) * np.linalg.norm(x) + abs(offset)):
        raise InvalidModelError("impact point is not on the guard", {"guard_value": g, "x_minus": x.tolist()})

    b, kappa = _affine_parts(n, affine)
    war = has_war(td.B, lam, tol) if war is None else war
    if reduced is not None and affine is None:
        gamma = reduced.gamma(x)
    else:
        commutator = _commutator(C, td.A_t)
        gamma = float(
            0.5 * x @ (td.Q_t - C.T @ td.Q_t @ C) @ x
            + p @ commutator @ x
            + 0.5 * p @ (td.R_t - C @ td.R_t @ C.T) @ p
            + p @ (C @ b - b)
            - kappa @ (td.Q_t @ C @ x + td.A_t.T @ p + 0.5 * td.Q_t @ kappa)
        )

    if war:
        beta = float(lam @ td.A @ x + lam @ b)
        beta_tol = tol.beta_rtol * (1.0 + np.linalg.norm(x)) * (1.0 + np.linalg.norm(td.A))
        if abs(beta) <= beta_tol:
            raise TangentialImpactError(
                "weakly actuated impact with vanishing normal velocity",
                {"beta": beta, "beta_tol": float(beta_tol), "x_minus": x.tolist()},
            )
        return MultiplierQuadratic(0.0, beta, gamma, beta * beta, (-gamma / beta,), Regime.WAR_LINEAR)

    alpha = float(-0.5 * lam @ td.R_t @ lam)
    beta = float(lam @ (td.A_t @ x - td.R_t @ (C.T @ p)) + lam @ b)
    return _classify(alpha, beta, gamma, tol)


def reduced_coefficients(
    td: TildeData, C: np.ndarray, S_plus: np.ndarray, c_plus: np.ndarray
) -> ReducedCoefficients:
    """Γ(S⁺), v(S⁺, c⁺), w(c⁺) such that γ = x⊤Γx + v⊤x + w."""
    C = np.asarray(C, dtype=float)
    S = np.asarray(S_plus, dtype=float)
    c = np.asarray(c_plus, dtype=float)
    commutator = _commutator(C, td.A_t)
    M = td.R_t - C @ td.R_t @ C.T
    SC = S @ C
    Gamma = 0.5 * (td.Q_t - C.T @ td.Q_t @ C) + SC.T @ commutator + 0.5 * SC.T @ M @ SC
    v = commutator.T @ c + SC.T @ M @ c
    return ReducedCoefficients(Gamma=0.5 * (Gamma + Gamma.T), v=v, w=float(0.5 * c @ M @ c))


def discriminant_form(
    td: TildeData, C: np.ndarray, lam: np.ndarray, tol: Optional[Tolerances] = None
) -> DiscriminantForm:
    """β² − 4αγ as a quadratic form on (x, p)."""
    tol = tol or default_tolerances()
    C = np.asarray(C, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    n = td.n
    war = has_war(td.B, lam, tol)
    alpha = 0.0 if war else float(-0.5 * lam @ td.R_t @ lam)
    h = np.concatenate([td.A_t.T @ lam, np.zeros(n) if war else -C @ td.R_t @ lam])

    G = np.zeros((2 * n, 2 * n))
    G[:n, :n] = 0.5 * (td.Q_t - C.T @ td.Q_t @ C)
    G[n:, :n] = 0.5 * _commutator(C, td.A_t)
    G[:n, n:] = G[n:, :n].T
    G[n:, n:] = 0.5 * (td.R_t - C @ td.R_t @ C.T)
    M = np.outer(h, h) - 4.0 * alpha * G
    return DiscriminantForm(matrix=0.5 * (M + M.T))


def normal_velocity(
    td: TildeData, lam: np.ndarray, x: np.ndarray, p: np.ndarray, b: Optional[np.ndarray] = None
) -> float:
    """λ⊤ẋ on the extremal flow, ẋ = Ãx − R̃p + b."""
    value = lam @ (td.A_t @ x - td.R_t @ p)
    if b is not None:
        value = value + lam @ b
    return float(value)


def resolve_costate_jump(
    td: TildeData,
    C: np.ndarray,
    lam: np.ndarray,
    x_minus: Sequence[float],
    p_plus: Sequence[float],
    incoming_side: int,
    affine: Optional[tuple] = None,
    offset: float = 0.0,
    war: Optional[bool] = None,
    branch_override: Optional[Union[Branch, str]] = None,
    reduced: Optional[ReducedCoefficients] = None,
    tol: Optional[Tolerances] = None,
) -> CostateJump:
    """Pick ε and return p⁻ = C⊤p⁺ + ελ.

    An arc arriving from M⁺ (λ⊤x > a, incoming_side = +1) needs λ⊤ẋ⁻ < 0:
    that root is the "plus" branch. The two roots always give opposite normal
    velocities, so the side decides the root unless branch_override forces one.

    Raises:
        NoExtremalJumpError: negative discriminant.
        IllConditionedError: double root, or the Hamiltonian is not conserved.
    """
    tol = tol or default_tolerances()
    C = np.asarray(C, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    x = np.asarray(x_minus, dtype=float).reshape(-1)
    p_plus = np.asarray(p_plus, dtype=float).reshape(-1)
    quad = multiplier_coefficients(td, C, lam, x, p_plus, affine, offset, war, reduced, tol)

    if quad.regime is Regime.NO_ROOTS:
        raise NoExtremalJumpError(
            "no extremal crosses the guard here (negative discriminant)", {**quad.to_dict(), "x_minus": x.tolist()}
        )
    if quad.regime is Regime.DOUBLE_ROOT:
        raise IllConditionedError("double root of the multiplier quadratic", {**quad.to_dict(), "x_minus": x.tolist()})

    if quad.regime is Regime.WAR_LINEAR:
        epsilon, branch = quad.roots[0], Branch.UNIQUE
    else:
        if branch_override is not None:
            branch = Branch(branch_override)
            if branch not in (Branch.PLUS, Branch.MINUS):
                raise InvalidModelError(f"branch override must be plus or minus, got {branch.value}")
        elif incoming_side in (1, -1):
            branch = Branch.PLUS if incoming_side > 0 else Branch.MINUS
        else:
            raise InvalidModelError(f"incoming_side must be +1 or -1, got {incoming_side}")
        velocities = [quad.normal_velocity(r) for r in quad.roots]
        pick = int(np.argmin(velocities)) if branch is Branch.PLUS else int(np.argmax(velocities))
        epsilon = quad.roots[pick]

    b, kappa = _affine_parts(td.n, affine)
    bias = b if affine is not None else None
    p_minus = C.T @ p_plus + epsilon * lam
    h_minus = hamiltonian(td, x, p_minus, bias)
    h_plus = hamiltonian(td, C @ x + kappa, p_plus, bias)
    gap = h_plus - h_minus
    if abs(gap) > tol.hamiltonian_rtol * (1.0 + abs(h_minus)):
        raise IllConditionedError(
            f"Hamiltonian jump {gap:.3e} after resolving the co-state jump",
            {"H_minus": h_minus, "H_plus": h_plus, **quad.to_dict()},
        )
    return CostateJump(
        p_minus=p_minus,
        p_plus=p_plus,
        epsilon=float(epsilon),
        branch=branch,
        quadratic=quad,
        normal_velocity=quad.normal_velocity(epsilon),
        hamiltonian_gap=gap,
    )


# =============================================================================
# Coupled solver
# =============================================================================

SEEDS = ("classical", "uncontrolled", "truncated")


@dataclass(frozen=True)
class SpatialSolverOptions:
    """Knobs of the forward-backward iteration.

    branch_overrides maps a 0-based jump index to "plus" or "minus".

    seeds names the impact schedules the iteration is started from:
    "classical" has no impacts, "uncontrolled" takes the impacts of the free
    flow from x0 and "truncated" drops the last impact of an extremal that
    has already converged. The iteration can settle on different extremals
    from different seeds; at most max_starts seeds run and the cheapest
    converged extremal wins.
    """

    step: Optional[float] = None
    max_iter: int = 100
    jt_tol: Optional[float] = None
    solver_tol: Optional[float] = None
    branch_overrides: Mapping[int, str] = field(default_factory=dict)
    max_jumps: Optional[int] = None
    seeds: tuple[str, ...] = SEEDS
    max_starts: int = 4

    def __post_init__(self):
        seeds = (self.seeds,) if isinstance(self.seeds, str) else tuple(str(s) for s in self.seeds)
        unknown = [s for s in seeds if s not in SEEDS]
        if unknown or not seeds:
            raise InvalidModelError(f"seeds must be a non-empty subset of {list(SEEDS)}, got {list(seeds)}")
        if seeds == ("truncated",):
            raise InvalidModelError("the truncated seed needs another seed to start from")
        if self.max_starts < 1:
            raise InvalidModelError(f"max_starts must be at least 1, got {self.max_starts}")
        object.__setattr__(self, "seeds", seeds)

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "SpatialSolverOptions":
        data = dict(data or {})
        overrides = {int(k): str(v) for k, v in dict(data.pop("branch_overrides", {})).items()}
        known = {"step", "max_iter", "jt_tol", "solver_tol", "max_jumps", "seeds", "max_starts"}
        unknown = set(data) - known
        if unknown:
            raise InvalidModelError(f"unknown solver options: {sorted(unknown)}")
        if "seeds" in data:
            data["seeds"] = tuple(data["seeds"]) if not isinstance(data["seeds"], str) else (data["seeds"],)
        return cls(branch_overrides=overrides, **data)


@dataclass(frozen=True, eq=False)
class SpatialSolveReport:
    trajectory: HybridTrajectory
    jump_count: int
    branch_choices: tuple[Branch, ...]
    iterations: int
    converged: bool
    residual: float
    riccati: Optional[RiccatiSolution] = None
    jumps: tuple[CostateJump, ...] = ()
    history: tuple[dict, ...] = ()
    cost: float = math.nan
    seed: str = "classical"
    starts: tuple[dict, ...] = ()

    @property
    def jump_times(self) -> tuple[float, ...]:
        return tuple(j.t for j in self.trajectory.jumps)

    def to_dict(self) -> dict:
        return {
            "jump_count": self.jump_count,
            "jump_times": list(self.jump_times),
            "branch_choices": [b.value for b in self.branch_choices],
            "epsilons": [j.epsilon for j in self.jumps],
            "hamiltonian_gaps": [j.hamiltonian_gap for j in self.jumps],
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "cost": self.cost,
            "seed": self.seed,
            "starts": list(self.starts),
            "jumps": [j.to_dict() for j in self.trajectory.jumps],
            "history": list(self.history),
        }


@dataclass(frozen=True, eq=False)
class _Impact:
    t: float
    x_pre: np.ndarray
    x_post: np.ndarray
    side: int


@dataclass(frozen=True, eq=False)
class _Sweep:
    """Backward sweep for a fixed impact schedule.

    ends[k] is the end condition (t, S, c) of arc k, the stretch after k
    impacts; post[i] holds (S⁺, c⁺) at impact i.
    """

    impacts: tuple[_Impact, ...]
    ends: tuple[tuple[float, np.ndarray, np.ndarray], ...]
    post: tuple[tuple[np.ndarray, np.ndarray], ...]
    jumps: tuple[CostateJump, ...]


@dataclass(frozen=True, eq=False)
class _ForwardPass:
    arcs: tuple[tuple[Arc, int], ...]
    impacts: tuple[_Impact, ...]


@dataclass(frozen=True, eq=False)
class _Extremal:
    report: SpatialSolveReport
    impacts: tuple[_Impact, ...]


def _extremal_system(sys: HybridSystem, td: TildeData) -> HybridSystem:
    """The (x, p) extremal flow as a hybrid system on R²ⁿ with the guard of sys.

    Its own reset is never applied; the solver resets x and restarts p.
    """
    n2 = 2 * sys.n
    H = hamiltonian_matrix(td, sys.drift)
    base = LinearHybridSystem(
        A=H[:n2, :n2],
        B=np.zeros((n2, 0)),
        C=np.eye(n2),
        lam=np.concatenate([sys.lam, np.zeros(sys.n)]),
        crossing_direction=sys.crossing_direction,
    )
    if not sys.is_affine:
        return base
    return AffineHybridSystem(base=base, b=H[:n2, n2], kappa=np.zeros(n2), a=sys.offset)


class _Problem:
    """Everything fixed across iterations and seeds of one solve."""

    def __init__(self, sys: HybridSystem, cost: QuadraticCost, t_span, options: SpatialSolverOptions, tol: Tolerances):
        self.sys = sys
        self.cost = cost
        self.td = tilde(cost, sys.A, sys.B)
        self.t0, self.tf = float(t_span[0]), float(t_span[1])
        self.options = options
        self.tol = tol
        self.step = default_step(t_span) if options.step is None else float(options.step)
        self.affine = (sys.drift, sys.jump_bias) if sys.is_affine else None
        self.war = has_war(sys.B, sys.lam, tol)
        self.extremal = _extremal_system(sys, self.td)
        self.max_jumps = tol.max_jumps if options.max_jumps is None else int(options.max_jumps)
        self.jt_tol = 1e-8 * (self.tf - self.t0) if options.jt_tol is None else float(options.jt_tol)

    def graph(self, sweep: _Sweep, k: int, t: float) -> tuple[np.ndarray, np.ndarray]:
        """S, c of arc k at time t; arcs past the sweep's last one use its terminal arc."""
        t_end, S_end, c_end = sweep.ends[min(k, len(sweep.ends) - 1)]
        return riccati_transfer(self.td, self.sys.drift, S_end, c_end, t_end, t)

    def sweep(self, impacts: Sequence[_Impact]) -> _Sweep:
        sys, td = self.sys, self.td
        J = len(impacts)
        ends: list = [None] * (J + 1)
        post: list = [None] * J
        jumps: list = [None] * J
        t_end, S, c = self.tf, self.cost.F, self.cost.r
        for k in range(J, 0, -1):
            ends[k] = (t_end, S, c)
            imp = impacts[k - 1]
            S_plus, c_plus = riccati_transfer(td, sys.drift, S, c, t_end, imp.t)
            reduced = None if self.affine else reduced_coefficients(td, sys.C, S_plus, c_plus)
            jump = resolve_costate_jump(
                td,
                sys.C,
                sys.lam,
                imp.x_pre,
                S_plus @ imp.x_post + c_plus,
                imp.side,
                affine=self.affine,
                offset=sys.offset,
                war=self.war,
                branch_override=self.options.branch_overrides.get(k - 1),
                reduced=reduced,
                tol=self.tol,
            )
            post[k - 1] = (S_plus, c_plus)
            jumps[k - 1] = jump
            S_minus = sys.C.T @ S_plus @ sys.C
            t_end, S = imp.t, 0.5 * (S_minus + S_minus.T)
            c = sys.C.T @ (S_plus @ sys.jump_bias + c_plus) + jump.epsilon * sys.lam
        ends[0] = (t_end, S, c)
        return _Sweep(impacts=tuple(impacts), ends=tuple(ends), post=tuple(post), jumps=tuple(jumps))

    def sample(self, sweep: _Sweep) -> RiccatiSolution:
        """The sweep on the solver grid, one segment per arc."""
        taus = [self.t0] + [imp.t for imp in sweep.impacts]
        segments = [
            exact_riccati_segment(self.td, self.sys.drift, S, c, t_end, lo, self.step)
            for lo, (t_end, S, c) in zip(taus, sweep.ends)
        ]
        return RiccatiSolution.from_segments(segments, [imp.t for imp in sweep.impacts])

    def _arc(self, arc: Arc) -> Arc:
        n = self.sys.n
        X, P = arc.states[:, :n], arc.states[:, n:]
        return Arc(times=arc.times, states=X, controls=extremal_controls(self.td, X, P), costates=P)

    def forward(self, sweep: _Sweep, x0: np.ndarray) -> _ForwardPass:
        """Flow (x, p) exactly; at each impact reset x and restart p on the next arc's graph."""
        sys, n = self.sys, self.sys.n
        S, c = self.graph(sweep, 0, self.t0)
        t, z = self.t0, np.concatenate([x0, S @ x0 + c])
        arcs: list[tuple[Arc, int]] = []
        impacts: list[_Impact] = []
        k = 0
        while True:
            result = flow_arc(self.extremal, z, None, (t, self.tf), self.step, self.tol)
            arcs.append((self._arc(result.arc), k))
            hit = result.hit
            if hit is None:
                break
            if hit.grazing:
                logger.warning("Tangential contact with the guard at t=%.10g; continuing the flow", hit.t)
                t, z = hit.t, hit.x
                continue
            x_hit = hit.x[:n]
            x_post, depth = apply_reset(sys, x_hit, self.tol)
            if depth >= 1:
                raise BeatingEncounteredError(
                    f"impact at t={hit.t:.10g} lies in the beating set of depth {depth}",
                    self._beating_details(hit.t, x_hit, depth),
                )
            impacts.append(_Impact(t=hit.t, x_pre=x_hit, x_post=x_post, side=hit.incoming_side))
            if len(impacts) >= self.max_jumps and hit.t < self.tf:
                times = tuple(i.t for i in impacts)
                dwell = tuple(np.diff((self.t0,) + times).tolist())
                raise SuspectedZenoError(
                    f"{len(impacts)} impacts before t={hit.t:.17g}", ZenoReport(times, dwell, hit.t, "max_jumps")
                )
            k += 1
            S, c = self.graph(sweep, k, hit.t)
            t, z = hit.t, np.concatenate([x_post, S @ x_post + c])
        return _ForwardPass(arcs=tuple(arcs), impacts=tuple(impacts))

    def _beating_details(self, t: float, x_pre: np.ndarray, depth: int) -> dict:
        details = {"t": t, "x_minus": x_pre.tolist(), "beating_depth": depth}
        try:
            details["beating_dims"] = list(beating_flag(self.sys.C, self.sys.lam, self.tol).dims)
        except InvalidModelError:
            pass
        return details

    def terminal_residual(self, fwd: _ForwardPass, sweep: _Sweep) -> float:
        """‖p(tf) − Fx(tf) − r‖ with p carried forward from the last impact.

        p⁺ at the last forward impact comes from the sweep's post-jump values,
        which were computed for the sweep's own impact time; the mismatch grows
        with the distance between the two schedules.
        """
        if fwd.impacts:
            i = len(fwd.impacts) - 1
            imp = fwd.impacts[i]
            S, c = sweep.post[i] if i < len(sweep.post) else self.graph(sweep, i + 1, imp.t)
            t, x, p = imp.t, imp.x_post, S @ imp.x_post + c
        else:
            arc = fwd.arcs[0][0]
            t, x, p = self.t0, arc.states[0], arc.costates[0]
        if self.tf > t:
            _, X, P = hamiltonian_flow(self.td, x, p, (t, self.tf), self.step, self.sys.drift)
            x, p = X[-1], P[-1]
        return float(np.linalg.norm(p - self.cost.F @ x - self.cost.r))

    def assemble(self, fwd: _ForwardPass, sweep: _Sweep) -> tuple[HybridTrajectory, tuple[CostateJump, ...]]:
        """Attach the sweep's multipliers to the forward pass."""
        records, jumps = [], []
        last = self.t0
        for i, imp in enumerate(fwd.impacts):
            jump = sweep.jumps[i] if i < len(sweep.jumps) else None
            records.append(
                JumpRecord(
                    t=imp.t,
                    x_pre=imp.x_pre,
                    x_post=imp.x_post,
                    epsilon=None if jump is None else jump.epsilon,
                    branch=Branch.NA if jump is None else jump.branch,
                    dwell_time=imp.t - last,
                    p_pre=None if jump is None else jump.p_minus,
                    p_post=None if jump is None else jump.p_plus,
                )
            )
            if jump is not None:
                jumps.append(jump)
            last = imp.t
        traj = HybridTrajectory(arcs=tuple(a for a, _ in fwd.arcs), jumps=tuple(records), t0=self.t0, tf=self.tf)
        return traj, tuple(jumps)

    def report(self, fwd: _ForwardPass, sweep: _Sweep, iterations: int, converged: bool, history, seed: str):
        traj, jumps = self.assemble(fwd, sweep)
        return SpatialSolveReport(
            trajectory=traj,
            jump_count=traj.jump_count,
            branch_choices=tuple(j.branch for j in jumps),
            iterations=iterations,
            converged=converged,
            residual=history[-1]["residual"],
            riccati=self.sample(sweep),
            jumps=jumps,
            history=tuple(history),
            cost=trajectory_cost(traj, self.cost),
            seed=seed,
        )

    def seed(self, name: str, x0: np.ndarray) -> tuple[_Impact, ...]:
        if name == "classical":
            return ()
        traj = simulate(self.sys, x0, None, (self.t0, self.tf), self.step, self.max_jumps, self.tol)
        impacts = []
        for j in traj.jumps:
            velocity = float(self.sys.lam @ vector_field(self.sys, j.x_pre))
            impacts.append(_Impact(t=j.t, x_pre=j.x_pre, x_post=j.x_post, side=-1 if velocity > 0 else 1))
        return tuple(impacts)

    def iterate(self, impacts: Sequence[_Impact], x0: np.ndarray, seed: str) -> _Extremal:
        """Fixed-point iteration from one seed schedule.

        Raises:
            NonConvergenceError: max_iter reached; .best holds the last iterate.
        """
        options = self.options
        sweep = self.sweep(impacts)
        history: list[dict] = []
        last_move = math.inf
        fwd = None
        for iteration in range(1, options.max_iter + 1):
            fwd = self.forward(sweep, x0)
            residual = self.terminal_residual(fwd, sweep)
            move = _movement(fwd.impacts, sweep.impacts)
            x_final = fwd.arcs[-1][0].states[-1]
            solver_tol = 1e-6 * (1.0 + np.linalg.norm(x_final)) if options.solver_tol is None else options.solver_tol
            history.append(
                {
                    "iteration": iteration,
                    "jump_times": [imp.t for imp in fwd.impacts],
                    "movement": move,
                    "residual": residual,
                }
            )
            logger.debug(
                "Seed %s, iteration %d: %d impacts, movement %.3e, residual %.3e",
                seed,
                iteration,
                len(fwd.impacts),
                move,
                residual,
            )
            if move < self.jt_tol and residual <= solver_tol:
                report = self.report(fwd, self.sweep(fwd.impacts), iteration, True, history, seed)
                return _Extremal(report=report, impacts=fwd.impacts)

            if iteration == options.max_iter:
                break
            nxt = fwd.impacts
            if len(nxt) == len(sweep.impacts) and nxt and move >= last_move:
                logger.warning("Impact times oscillate at iteration %d; damping with the midpoint", iteration)
                nxt = _midpoint(self.sys, nxt, sweep.impacts, self.tol)
            last_move = move if len(fwd.impacts) == len(sweep.impacts) else math.inf
            sweep = self.sweep(nxt)

        raise NonConvergenceError(
            f"forward-backward iteration did not converge in {options.max_iter} iterations",
            best=self.report(fwd, sweep, options.max_iter, False, history, seed),
            details={"seed": seed, "history": history[-5:]},
        )


def _movement(new: Sequence[_Impact], old: Sequence[_Impact]) -> float:
    if len(new) != len(old):
        return math.inf
    if not new:
        return 0.0
    return float(max(abs(a.t - b.t) for a, b in zip(new, old)))


def _midpoint(sys: HybridSystem, new: Sequence[_Impact], old: Sequence[_Impact], tol: Tolerances) -> list[_Impact]:
    blended = []
    for a, b in zip(new, old):
        x_pre = 0.5 * (a.x_pre + b.x_pre)
        x_pre = x_pre - sys.lam * (guard_value(sys, x_pre) / float(sys.lam @ sys.lam))
        x_post, _ = apply_reset(sys, x_pre, tol)
        blended.append(_Impact(t=0.5 * (a.t + b.t), x_pre=x_pre, x_post=x_post, side=a.side))
    return blended


def _check_blocking(sys: HybridSystem, tol: Tolerances):
    try:
        flag = beating_flag(sys.C, sys.lam, tol)
    except InvalidModelError:
        logger.warning("Jump map is singular; beating sets are not checked up front")
        return
    if not flag.trivially_blocking:
        logger.warning("System is not trivially blocking (blocking set dimension %d)", flag.blocking_dim)


def _start_summary(seed: str, found: Optional[_Extremal] = None, error: Optional[HybridControlError] = None) -> dict:
    if error is not None:
        return {"seed": seed, "converged": False, "error": f"{error.family}: {error}"}
    report = found.report
    return {
        "seed": seed,
        "converged": True,
        "jump_count": report.jump_count,
        "jump_times": list(report.jump_times),
        "cost": report.cost,
        "iterations": report.iterations,
    }


def solve_spatial(
    sys: HybridSystem,
    cost: QuadraticCost,
    x0: Sequence[float],
    t_span: tuple[float, float],
    options: Optional[SpatialSolverOptions] = None,
    tol: Optional[Tolerances] = None,
) -> SpatialSolveReport:
    """Forward-backward fixed-point iteration for the spatially triggered problem.

    Each forward pass flows the extremal (x, p) from the current sweep,
    resets at guard crossings and records the impacts; each backward sweep
    restarts the Riccati equation at those impacts with the resolved
    multiplier. An iteration stops when the impact times move less than
    jt_tol and the terminal condition holds. The iteration is run from every
    seed in options.seeds and the cheapest converged extremal is returned,
    the earliest seed winning a tie.

    Raises:
        NonConvergenceError: no seed converged; .best holds the first seed's
            last iterate.
    """
    options = options or SpatialSolverOptions()
    tol = tol or default_tolerances()
    if cost.n != sys.n or cost.m != sys.m:
        raise InvalidModelError(f"cost dimensions (n={cost.n}, m={cost.m}) do not match the system")
    t0, tf = float(t_span[0]), float(t_span[1])
    if not tf > t0:
        raise InvalidModelError(f"horizon must satisfy t0 < tf, got {t_span}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (sys.n,):
        raise InvalidModelError(f"x0 must have length {sys.n}")
    if on_guard(sys, x0, tol):
        raise InvalidModelError("x0 lies on the guard", {"guard_value": guard_value(sys, x0)})
    if options.max_iter < 1:
        raise InvalidModelError(f"max_iter must be at least 1, got {options.max_iter}")
    _check_blocking(sys, tol)

    problem = _Problem(sys, cost, (t0, tf), options, tol)
    queue: list[tuple[str, Optional[tuple[_Impact, ...]]]] = [(s, None) for s in options.seeds if s != "truncated"]
    tried: list[tuple[_Impact, ...]] = []
    found: list[_Extremal] = []
    starts: list[dict] = []
    first_error: Optional[HybridControlError] = None

    while queue and len(starts) < options.max_starts:
        seed, impacts = queue.pop(0)
        try:
            impacts = problem.seed(seed, x0) if impacts is None else impacts
            if any(len(impacts) == len(s) and _movement(impacts, s) < problem.jt_tol for s in tried):
                continue
            tried.append(impacts)
            extremal = problem.iterate(impacts, x0, seed)
        except HybridControlError as e:
            logger.info("Seed %s failed: %s", seed, e)
            starts.append(_start_summary(seed, error=e))
            first_error = first_error or e
            continue
        starts.append(_start_summary(seed, extremal))
        known = any(
            len(f.impacts) == len(extremal.impacts) and _movement(f.impacts, extremal.impacts) < 1e3 * problem.jt_tol
            for f in found
        )
        found.append(extremal)
        if extremal.impacts and "truncated" in options.seeds and not known:
            queue.append(("truncated", extremal.impacts[:-1]))

    if not found:
        raise first_error
    costs = [f.report.cost for f in found]
    best_cost = min(costs)
    index = next(i for i, c in enumerate(costs) if c - best_cost <= COST_TIE_RTOL * max(abs(best_cost), 1e-300))
    report = replace(found[index].report, starts=tuple(starts))
    logger.info(
        "Spatial solve: %d of %d seeds converged; seed %s wins with %d jumps at cost %.10g",
        len(found),
        len(starts),
        report.seed,
        report.jump_count,
        report.cost,
    )
    return report


# =============================================================================
# Branch exploration
# =============================================================================


@dataclass(frozen=True, eq=False)
class BranchCandidate:
    overrides: dict[int, str]
    report: Optional[SpatialSolveReport]
    error: Optional[str] = None

    @property
    def cost(self) -> float:
        return self.report.cost if self.report is not None else math.inf

    def to_dict(self) -> dict:
        data = {"overrides": {str(k): v for k, v in self.overrides.items()}, "cost": self.cost, "error": self.error}
        if self.report is not None:
            data["jump_count"] = self.report.jump_count
            data["branch_choices"] = [b.value for b in self.report.branch_choices]
        return data


@dataclass(frozen=True, eq=False)
class BranchExploration:
    candidates: tuple[BranchCandidate, ...]
    best_index: int
    tie: bool

    @property
    def best(self) -> BranchCandidate:
        return self.candidates[self.best_index]

    def to_dict(self) -> dict:
        return {
            "candidates": [c.to_dict() for c in self.candidates],
            "best_index": self.best_index,
            "tie": self.tie,
        }


def _flip(branch: Branch) -> str:
    return Branch.MINUS.value if branch is Branch.PLUS else Branch.PLUS.value


def explore_branches(
    sys: HybridSystem,
    cost: QuadraticCost,
    x0: Sequence[float],
    t_span: tuple[float, float],
    options: Optional[SpatialSolverOptions] = None,
    max_workers: Optional[int] = None,
) -> BranchExploration:
    """Re-solve with each single-jump branch flip and compare costs.

    The unflipped solve must succeed; flipped solves that fail are kept as
    candidates with their error message. Two candidates tie when their costs
    agree to COST_TIE_RTOL.
    """
    options = options or SpatialSolverOptions()
    tol = default_tolerances()
    base = solve_spatial(sys, cost, x0, t_span, options, tol)
    flips = []
    for i, branch in enumerate(base.branch_choices):
        if branch in (Branch.PLUS, Branch.MINUS):
            overrides = {**options.branch_overrides, i: _flip(branch)}
            flips.append(overrides)

    def run(overrides: dict) -> BranchCandidate:
        opts = replace(options, branch_overrides=overrides)
        try:
            return BranchCandidate(overrides=overrides, report=solve_spatial(sys, cost, x0, t_span, opts, tol))
        except HybridControlError as e:
            logger.info("Branch flip %s failed: %s", overrides, e)
            return BranchCandidate(overrides=overrides, report=None, error=f"{e.family}: {e}")

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        flipped = list(pool.map(run, flips))
    candidates = (BranchCandidate(overrides=dict(options.branch_overrides), report=base), *flipped)

    costs = np.array([c.cost for c in candidates])
    best_index = int(np.argmin(costs))
    best_cost = costs[best_index]
    tie = any(
        i != best_index and math.isfinite(c) and abs(c - best_cost) <= COST_TIE_RTOL * max(abs(best_cost), 1e-300)
        for i, c in enumerate(costs)
    )
    if tie:
        logger.warning("Branch candidates tie at cost %.12g", best_cost)
    return BranchExploration(candidates=candidates, best_index=best_index, tie=tie)


__all__ = [
    "BranchCandidate",
    "BranchExploration",
    "CostateJump",
    "DiscriminantForm",
    "MultiplierQuadratic",
    "ReducedCoefficients",
    "Regime",
    "SpatialSolveReport",
    "SpatialSolverOptions",
    "discriminant_form",
    "explore_branches",
    "multiplier_coefficients",
    "normal_velocity",
    "reduced_coefficients",
    "resolve_costate_jump",
    "solve_spatial",
]
