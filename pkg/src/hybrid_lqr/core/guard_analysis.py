# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Guard geometry: beating sets, blocking set, invariant guards and WAR.

Σ_k is the set of guard points that keep landing on the guard for k extra
resets. With C invertible it is the common null space of the covectors
λ⊤C^{-j}, j = 0..k. Subspaces are carried as orthonormal column bases and all
rank decisions use singular values against rank_rtol times the largest one.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve, null_space, orth, svdvals

from ..context import Tolerances, default_tolerances
from ..errors import InvalidModelError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GuardFlag:
    """Nested beating sets Σ_0 ⊇ Σ_1 ⊇ … up to stabilization."""

    basis_stack: np.ndarray
    dims: tuple[int, ...]
    k_stabilize: int
    blocking_dim: int
    trivially_blocking: bool
    bases: tuple[np.ndarray, ...]

    def to_dict(self) -> dict:
        return {
            "basis_stack": self.basis_stack.tolist(),
            "dims": list(self.dims),
            "k_stabilize": self.k_stabilize,
            "blocking_dim": self.blocking_dim,
            "trivially_blocking": self.trivially_blocking,
        }


@dataclass(frozen=True, eq=False)
class InvariantGuardReport:
    sigma_A_basis: np.ndarray
    sigma_k_A_bases: tuple[np.ndarray, ...]
    dims: tuple[int, ...]
    beating_dims: tuple[int, ...]
    equality_flags: tuple[bool, ...]
    containment_verified: bool

    def to_dict(self) -> dict:
        return {
            "sigma_A_basis": self.sigma_A_basis.tolist(),
            "sigma_A_dim": int(self.sigma_A_basis.shape[1]),
            "dims": list(self.dims),
            "beating_dims": list(self.beating_dims),
            "equality_flags": list(self.equality_flags),
            "containment_verified": self.containment_verified,
        }


def _numerical_rank(rows: np.ndarray, tol: Tolerances) -> int:
    if rows.size == 0:
        return 0
    s = svdvals(rows)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_rtol * s[0]))


def _normalized_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return np.divide(rows, norms, out=np.zeros_like(rows), where=norms > 0)


def _null_space(rows: np.ndarray, n: int, tol: Tolerances) -> np.ndarray:
    if rows.size == 0:
        return np.eye(n)
    return null_space(_normalized_rows(rows), rcond=tol.rank_rtol)


def _factor_reset(C: np.ndarray, tol: Tolerances):
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    if C.shape != (n, n):
        raise InvalidModelError(f"C must be square, got shape {C.shape}")
    lu, piv = lu_factor(C, check_finite=True)
    det = float(np.prod(np.diag(lu)))
    det_tol = tol.det_rtol * np.linalg.norm(C, 2) ** n
    if abs(det) <= det_tol:
        raise InvalidModelError("jump map C is singular", {"det": abs(det), "det_tol": float(det_tol)})
    return lu, piv


def _covectors(C: np.ndarray, lam: np.ndarray, count: int, tol: Tolerances) -> np.ndarray:
    """Rows λ⊤C^{-j} for j = 0..count-1 by repeated transposed solves."""
    factor = _factor_reset(C, tol)
    rows = [np.asarray(lam, dtype=float)]
    for _ in range(count - 1):
        # r_j C = r_{j-1}  <=>  C⊤ r_j = r_{j-1}
        rows.append(lu_solve(factor, rows[-1], trans=1))
    return np.vstack(rows)


def _check_guard(C: np.ndarray, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    C = np.asarray(C, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if C.ndim != 2 or C.shape != (lam.size, lam.size):
        raise InvalidModelError(f"C shape {C.shape} does not match lambda length {lam.size}")
    if not np.any(lam):
        raise InvalidModelError("lambda must be nonzero")
    return C, lam


def beating_flag(C: np.ndarray, lam: np.ndarray, tol: Optional[Tolerances] = None) -> GuardFlag:
    """Compute the flag Σ_0 ⊇ Σ_1 ⊇ … until it stabilizes."""
    tol = tol or default_tolerances()
    C, lam = _check_guard(C, lam)
    n = lam.size
    factor = _factor_reset(C, tol)

    rows = [lam]
    dims = [n - _numerical_rank(_normalized_rows(np.vstack(rows)), tol)]
    while dims[-1] > 0 and len(rows) <= n:
        rows.append(lu_solve(factor, rows[-1], trans=1))
        dims.append(n - _numerical_rank(_normalized_rows(np.vstack(rows)), tol))
        if dims[-1] == dims[-2]:
            break

    stack = np.vstack(rows)
    bases = tuple(_null_space(stack[: k + 1], n, tol) for k in range(len(dims)))
    stalled = len(dims) > 1 and dims[-1] == dims[-2]
    k_stabilize = len(dims) - 2 if stalled else len(dims) - 1
    blocking_dim = dims[-1]
    flag = GuardFlag(
        basis_stack=stack,
        dims=tuple(dims),
        k_stabilize=k_stabilize,
        blocking_dim=blocking_dim,
        trivially_blocking=blocking_dim == 0,
        bases=bases,
    )
    logger.debug("Beating flag dims %s, stabilizes at k=%d", dims, k_stabilize)
    return flag


def is_trivially_blocking(C: np.ndarray, lam: np.ndarray, tol: Optional[Tolerances] = None) -> bool:
    """Rank test: [λ, C^{-⊤}λ, …, C^{-(n-1)⊤}λ] has rank n."""
    tol = tol or default_tolerances()
    C, lam = _check_guard(C, lam)
    rows = _covectors(C, lam, lam.size, tol)
    return _numerical_rank(_normalized_rows(rows), tol) == lam.size


def beating_sets_by_images(C: np.ndarray, lam: np.ndarray, tol: Optional[Tolerances] = None) -> list[np.ndarray]:
    """Σ_k = Σ ∩ C·Σ_{k-1} computed on bases directly; C may be singular.

    Returns:
        Orthonormal bases of Σ_0, Σ_1, … ending at the first repeat or at {0}.
    """
    tol = tol or default_tolerances()
    C, lam = _check_guard(C, lam)
    n = lam.size
    bases = [_null_space(lam[None, :], n, tol)]
    while bases[-1].shape[1] > 0 and len(bases) <= n:
        image = C @ bases[-1]
        if _numerical_rank(image.T, tol) == 0:
            bases.append(np.zeros((n, 0)))
            break
        image = orth(image, rcond=tol.rank_rtol)
        coeffs = _null_space((lam @ image)[None, :], image.shape[1], tol)
        nxt = orth(image @ coeffs, rcond=tol.rank_rtol) if coeffs.shape[1] else np.zeros((n, 0))
        bases.append(nxt)
        if nxt.shape[1] == bases[-2].shape[1]:
            break
    return bases


def _containment_residual(inner: np.ndarray, outer: np.ndarray) -> float:
    if inner.shape[1] == 0:
        return 0.0
    if outer.shape[1] == 0:
        return float(np.linalg.norm(inner))
    return float(np.linalg.norm(inner - outer @ (outer.T @ inner)))


def invariant_guard_report(
    A: np.ndarray, C: np.ndarray, lam: np.ndarray, tol: Optional[Tolerances] = None
) -> InvariantGuardReport:
    """Invariant guard Σ^A = ker λ⊤ ∩ ker λ⊤A and its intersections with each Σ_k."""
    tol = tol or default_tolerances()
    C, lam = _check_guard(C, lam)
    A = np.asarray(A, dtype=float)
    n = lam.size
    if A.shape != (n, n):
        raise InvalidModelError(f"A shape {A.shape} does not match lambda length {n}")

    lam_A = lam @ A
    sigma_A = _null_space(np.vstack([lam, lam_A]), n, tol)
    beating = beating_sets_by_images(C, lam, tol)

    intersections = []
    verified = True
    for basis in beating:
        if basis.shape[1] == 0:
            inter = np.zeros((n, 0))
        else:
            coeffs = _null_space((lam_A @ basis)[None, :], basis.shape[1], tol)
            inter = basis @ coeffs if coeffs.shape[1] else np.zeros((n, 0))
        residual = max(_containment_residual(inter, basis), _containment_residual(inter, sigma_A))
        if residual > 1e3 * tol.rank_rtol * max(1.0, n):
            logger.warning("Invariant guard containment residual %.3e exceeds tolerance", residual)
            verified = False
        intersections.append(inter)

    dims = tuple(int(b.shape[1]) for b in intersections)
    beating_dims = tuple(int(b.shape[1]) for b in beating)
    return InvariantGuardReport(
        sigma_A_basis=sigma_A,
        sigma_k_A_bases=tuple(intersections),
        dims=dims,
        beating_dims=beating_dims,
        equality_flags=tuple(d == e for d, e in zip(dims, beating_dims)),
        containment_verified=verified,
    )


def has_war(B: np.ndarray, lam: np.ndarray, tol: Optional[Tolerances] = None) -> bool:
    """Weakly actuated resets: λ⊤B = 0 to rank tolerance."""
    tol = tol or default_tolerances()
    lam = np.asarray(lam, dtype=float).reshape(-1)
    B = np.asarray(B, dtype=float)
    if B.size == 0:
        return True
    B = B.reshape(lam.size, -1)
    lhs = float(np.max(np.abs(lam @ B)))
    return lhs <= tol.rank_rtol * float(np.linalg.norm(lam)) * float(np.linalg.norm(B, 2))


__all__ = [
    "GuardFlag",
    "InvariantGuardReport",
    "beating_flag",
    "beating_sets_by_images",
    "has_war",
    "invariant_guard_report",
    "is_trivially_blocking",
]
