# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

from hybrid_lqr.core.lqr_core import (
    QuadraticCost,
    exact_riccati_segment,
    extremal_controls,
    hamiltonian,
    hamiltonian_flow,
    optimal_control,
    reconstruct,
    riccati_transfer,
    solve_riccati_backward,
    tilde,
    trajectory_cost,
    unoptimized_hamiltonian,
)
from hybrid_lqr.errors import DivergenceError, InvalidModelError

SCALAR = {"A": [[0.0]], "B": [[1.0]]}


@pytest.fixture
def scalar_cost():
    return QuadraticCost(Q=[[0.0]], R=[[1.0]], F=[[1.0]])


def _spd(rng, k: int, shift: float) -> np.ndarray:
    G = rng.standard_normal((k, k))
    M = G @ G.T / k + shift * np.eye(k)
    return 0.5 * (M + M.T)


def _random_problem(rng, cross: bool = False):
    """Random (A, B, cost) with n in 1..4, m in 1..2; Q PSD, R and F positive definite."""
    n, m = int(rng.integers(1, 5)), int(rng.integers(1, 3))
    A = 0.5 * rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    N = 0.1 * rng.standard_normal((n, m)) if cross else None
    cost = QuadraticCost(Q=_spd(rng, n, 0.0), R=_spd(rng, m, 1.0), F=_spd(rng, n, 1.0), N=N)
    return A, B, cost


class TestQuadraticCost:
    def test_defaults_fill_cross_term_and_linear_terminal(self, scalar_cost):
        assert scalar_cost.N.shape == (1, 1)
        assert scalar_cost.r.tolist() == [0.0]
        assert scalar_cost.n == 1 and scalar_cost.m == 1

    def test_indefinite_R_rejected(self):
        with pytest.raises(InvalidModelError, match="R must be positive definite"):
            QuadraticCost(Q=[[0.0]], R=[[0.0]], F=[[1.0]])

    def test_singular_F_rejected(self):
        with pytest.raises(InvalidModelError, match="F must be positive definite"):
            QuadraticCost(Q=np.eye(2), R=[[1.0]], F=np.diag([1.0, 0.0]))

    def test_asymmetric_Q_rejected(self):
        with pytest.raises(InvalidModelError, match="Q must be symmetric"):
            QuadraticCost(Q=[[1.0, 1.0], [0.0, 1.0]], R=[[1.0]], F=np.eye(2))

    def test_negative_Q_rejected(self):
        with pytest.raises(InvalidModelError, match="semidefinite"):
            QuadraticCost(Q=[[-1.0]], R=[[1.0]], F=[[1.0]])

    def test_uncontrolled_cost_has_no_inputs(self):
        cost = QuadraticCost(Q=np.zeros((2, 2)), R=np.zeros((0, 0)), F=np.eye(2))
        assert cost.m == 0
        assert cost.running(np.ones((3, 2)), np.zeros((3, 0))).tolist() == [0.0, 0.0, 0.0]

    def test_from_dict_reports_missing_fields(self):
        with pytest.raises(InvalidModelError, match="'F'"):
            QuadraticCost.from_dict({"Q": [[1.0]]})


class TestTilde:
    def test_cross_term_is_eliminated(self):
        cost = QuadraticCost(Q=[[2.0]], R=[[4.0]], F=[[1.0]], N=[[1.0]])
        td = tilde(cost, [[1.0]], [[2.0]])
        assert td.Q_t[0, 0] == pytest.approx(2.0 - 1.0 / 4.0)
        assert td.A_t[0, 0] == pytest.approx(1.0 - 2.0 / 4.0)
        assert td.R_t[0, 0] == pytest.approx(4.0 / 4.0)

    def test_optimal_control_minimizes_the_hamiltonian(self, rng):
        cost = QuadraticCost(Q=np.eye(2), R=[[2.0]], F=np.eye(2), N=[[0.1], [0.2]])
        A, B = np.array([[0.0, 1.0], [-1.0, 0.3]]), np.array([[0.0], [1.0]])
        td = tilde(cost, A, B)
        x, p = rng.standard_normal(2), rng.standard_normal(2)
        # With S = 0 and c = p the feedback law returns the minimizer for co-state p.
        u_star = optimal_control(td, np.zeros((2, 2)), p, x)
        best = unoptimized_hamiltonian(A, B, cost, x, p, u_star)
        assert best == pytest.approx(hamiltonian(td, x, p), rel=1e-12, abs=1e-12)
        for du in (-0.1, 0.1):
            assert unoptimized_hamiltonian(A, B, cost, x, p, u_star + du) > best

    def test_extremal_control_is_stationary_on_random_systems(self, rng):
        for _ in range(50):
            A, B, cost = _random_problem(rng, cross=True)
            td = tilde(cost, A, B)
            b = rng.standard_normal(cost.n)
            x, p = rng.standard_normal(cost.n), rng.standard_normal(cost.n)
            u_star = extremal_controls(td, x, p)[0]
            best = unoptimized_hamiltonian(A, B, cost, x, p, u_star, b)
            assert best == pytest.approx(hamiltonian(td, x, p, b), rel=1e-9, abs=1e-9)
            for _ in range(5):
                du = rng.standard_normal(cost.m)
                # The Hamiltonian is quadratic in u with Hessian R.
                increase = unoptimized_hamiltonian(A, B, cost, x, p, u_star + du, b) - best
                assert increase > 0
                assert increase == pytest.approx(0.5 * du @ cost.R @ du, rel=1e-8, abs=1e-10)

    def test_extremal_controls_match_the_feedback_law(self, rng):
        A, B, cost = _random_problem(rng, cross=True)
        td = tilde(cost, A, B)
        S, c = _spd(rng, cost.n, 1.0), rng.standard_normal(cost.n)
        X = rng.standard_normal((7, cost.n))
        U = extremal_controls(td, X, X @ S + c)
        for x, u in zip(X, U):
            np.testing.assert_allclose(u, optimal_control(td, S, c, x), rtol=1e-12, atol=1e-12)

    def test_shape_mismatch_rejected(self, scalar_cost):
        with pytest.raises(InvalidModelError, match="do not match"):
            tilde(scalar_cost, np.eye(2), [[1.0]])


class TestRiccati:
    def test_scalar_solution_is_reciprocal(self, scalar_cost):
        sol = solve_riccati_backward(SCALAR["A"], SCALAR["B"], scalar_cost, (0.0, 1.0))
        for t in (0.0, 0.3, 0.5, 1.0):
            S, c = sol.evaluate(t)
            assert S[0, 0] == pytest.approx(1.0 / (2.0 - t), rel=1e-9)
            assert c[0] == 0.0

    def test_cost_equals_the_value_function(self, scalar_cost):
        sol = solve_riccati_backward(SCALAR["A"], SCALAR["B"], scalar_cost, (0.0, 1.0))
        traj = reconstruct(SCALAR["A"], SCALAR["B"], scalar_cost, sol, [1.0])
        S0, _ = sol.evaluate(0.0)
        assert trajectory_cost(traj, scalar_cost) == pytest.approx(0.5 * S0[0, 0], rel=1e-8)
        assert traj.final_state[0] == pytest.approx(0.5, rel=1e-9)
        np.testing.assert_allclose(traj.arcs[0].controls[:, 0], -0.5, rtol=1e-8)

    def test_affine_bias_shifts_the_costate(self):
        # ẋ = u + 1, so the optimal plan pushes against the drift.
        cost = QuadraticCost(Q=[[0.0]], R=[[1.0]], F=[[1.0]])
        sol = solve_riccati_backward(SCALAR["A"], SCALAR["B"], cost, (0.0, 1.0), b=[1.0])
        _, c0 = sol.evaluate(0.0)
        assert c0[0] > 0
        traj = reconstruct(SCALAR["A"], SCALAR["B"], cost, sol, [0.0], b=[1.0])
        assert np.all(traj.arcs[0].controls[:, 0] < 0)

    def test_one_sided_requires_a_jump_time(self, scalar_cost):
        sol = solve_riccati_backward(SCALAR["A"], SCALAR["B"], scalar_cost, (0.0, 1.0))
        with pytest.raises(InvalidModelError, match="not a jump time"):
            sol.one_sided(0.5)

    def test_empty_horizon_rejected(self, scalar_cost):
        with pytest.raises(InvalidModelError, match="t0 < tf"):
            solve_riccati_backward(SCALAR["A"], SCALAR["B"], scalar_cost, (1.0, 1.0))

    def test_value_identity_on_random_systems(self, rng):
        for _ in range(20):
            A, B, cost = _random_problem(rng)
            sol = solve_riccati_backward(A, B, cost, (0.0, 1.0), step=1e-3)
            x0 = rng.standard_normal(cost.n)
            traj = reconstruct(A, B, cost, sol, x0)
            S0, c0 = sol.evaluate(0.0)
            assert np.all(c0 == 0.0)
            assert trajectory_cost(traj, cost) == pytest.approx(0.5 * x0 @ S0 @ x0, rel=1e-6)


class TestRiccatiTransfer:
    def test_matches_the_rk4_sweep(self, rng):
        for _ in range(10):
            A, B, cost = _random_problem(rng)
            b = rng.standard_normal(cost.n)
            sol = solve_riccati_backward(A, B, cost, (0.0, 1.0), step=1e-3, b=b)
            td = tilde(cost, A, B)
            for t in (0.0, 0.25, 0.7):
                S, c = riccati_transfer(td, b, cost.F, cost.r, 1.0, t)
                S_ref, c_ref = sol.evaluate(t)
                np.testing.assert_allclose(S, S_ref, rtol=1e-8, atol=1e-10)
                np.testing.assert_allclose(c, c_ref, rtol=1e-8, atol=1e-10)

    def test_zero_span_returns_the_end_condition(self, scalar_cost):
        td = tilde(scalar_cost, SCALAR["A"], SCALAR["B"])
        S, c = riccati_transfer(td, None, [[2.0]], [0.5], 1.0, 1.0)
        assert S[0, 0] == 2.0 and c[0] == 0.5

    def test_scalar_closed_form(self, scalar_cost):
        td = tilde(scalar_cost, SCALAR["A"], SCALAR["B"])
        S, _ = riccati_transfer(td, None, scalar_cost.F, scalar_cost.r, 1.0, 0.0)
        assert S[0, 0] == pytest.approx(0.5, rel=1e-13)

    def test_finite_escape_raises(self):
        # Ṡ = S² − 1 backward from S(1) = −2 reaches −∞ at a finite time.
        cost = QuadraticCost(Q=[[1.0]], R=[[1.0]], F=[[1.0]])
        td = tilde(cost, SCALAR["A"], SCALAR["B"])
        with pytest.raises(DivergenceError):
            riccati_transfer(td, None, [[-2.0]], [0.0], 1.0, -5.0)

    def test_sampled_segment(self, rng):
        A, B, cost = _random_problem(rng)
        td = tilde(cost, A, B)
        b = rng.standard_normal(cost.n)
        seg = exact_riccati_segment(td, b, cost.F, cost.r, 1.0, 0.2, 0.01)
        assert seg.times[0] == 0.2 and seg.times[-1] == 1.0
        assert np.all(np.diff(seg.times) > 0)
        assert seg.times.size == 81
        np.testing.assert_allclose(seg.S[-1], cost.F)
        S_mid, c_mid = riccati_transfer(td, b, cost.F, cost.r, 1.0, float(seg.times[40]))
        np.testing.assert_allclose(seg.S[40], S_mid, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(seg.c[40], c_mid, rtol=1e-10, atol=1e-12)
        # Stored derivatives agree with central differences of the samples.
        h = seg.times[41] - seg.times[39]
        scale = 1.0 + np.abs(seg.S).max()
        np.testing.assert_allclose(seg.S_dot[40], (seg.S[41] - seg.S[39]) / h, rtol=0, atol=1e-3 * scale)

    def test_nonpositive_step_rejected(self, scalar_cost):
        td = tilde(scalar_cost, SCALAR["A"], SCALAR["B"])
        with pytest.raises(InvalidModelError, match="step"):
            exact_riccati_segment(td, None, [[1.0]], [0.0], 1.0, 0.0, 0.0)


class TestHamiltonianFlow:
    def test_hamiltonian_is_conserved_on_random_systems(self, rng):
        for _ in range(50):
            A, B, cost = _random_problem(rng, cross=bool(rng.integers(2)))
            td = tilde(cost, A, B)
            b = rng.standard_normal(cost.n)
            x0, p0 = rng.standard_normal(cost.n), rng.standard_normal(cost.n)
            _, X, P = hamiltonian_flow(td, x0, p0, (0.0, 1.0), step=1e-2, b=b)
            values = np.array([hamiltonian(td, x, p, b) for x, p in zip(X, P)])
            scale = 1.0 + np.max(np.sum(X**2, axis=1) + np.sum(P**2, axis=1))
            np.testing.assert_allclose(values, values[0], rtol=0, atol=1e-10 * scale)

    def test_hamiltonian_is_conserved_for_time_invariant_data(self, rng):
        cost = QuadraticCost(Q=np.eye(2), R=[[1.0]], F=np.eye(2))
        td = tilde(cost, [[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]])
        x0, p0 = rng.standard_normal(2), rng.standard_normal(2)
        _, X, P = hamiltonian_flow(td, x0, p0, (0.0, 1.0), step=1e-3)
        values = np.array([hamiltonian(td, x, p) for x, p in zip(X, P)])
        np.testing.assert_allclose(values, values[0], rtol=1e-9, atol=1e-10)

    def test_costate_matches_the_riccati_sweep(self):
        cost = QuadraticCost(Q=np.eye(2), R=[[1.0]], F=np.eye(2))
        A, B = [[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]]
        sol = solve_riccati_backward(A, B, cost, (0.0, 1.0), step=1e-3)
        x0 = np.array([1.0, -0.5])
        S0, c0 = sol.evaluate(0.0)
        _, X, P = hamiltonian_flow(tilde(cost, A, B), x0, S0 @ x0 + c0, (0.0, 1.0), step=1e-3)
        # Terminal transversality p(tf) = F x(tf).
        np.testing.assert_allclose(P[-1], X[-1], atol=1e-8)
