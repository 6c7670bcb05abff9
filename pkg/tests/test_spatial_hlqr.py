# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

from hybrid_lqr.core.hybrid_system import Branch, LinearHybridSystem
from hybrid_lqr.core.lqr_core import QuadraticCost, hamiltonian, tilde
from hybrid_lqr.core.presets import get_preset, section6, section6_coefficients, section6_discriminant_matrix
from hybrid_lqr.core.spatial_hlqr import (
    Regime,
    SpatialSolverOptions,
    discriminant_form,
    explore_branches,
    multiplier_coefficients,
    normal_velocity,
    reduced_coefficients,
    resolve_costate_jump,
    solve_spatial,
)
from hybrid_lqr.errors import (
    BeatingEncounteredError,
    IllConditionedError,
    InvalidModelError,
    NoExtremalJumpError,
    NonConvergenceError,
    TangentialImpactError,
)

PLANAR_INDICES = np.ix_([0, 2, 3], [0, 2, 3])


def _planar(a: float):
    preset = section6(a)
    sys = preset.system
    return sys, tilde(preset.cost, sys.A, sys.B)


def _random_impact(rng, war: bool):
    """Random (td, C, λ, x⁻, p⁺) with x⁻ on λ⊤x = 0; war projects B onto λ⊥."""
    n, m = int(rng.integers(2, 5)), int(rng.integers(1, 3))
    lam = rng.standard_normal(n)
    B = rng.standard_normal((n, m))
    if war:
        B = B - np.outer(lam, lam @ B) / (lam @ lam)
    G = rng.standard_normal((n, n))
    Q = G @ G.T / n
    cost = QuadraticCost(Q=0.5 * (Q + Q.T), R=np.eye(m), F=np.eye(n))
    td = tilde(cost, rng.standard_normal((n, n)), B)
    C = rng.standard_normal((n, n)) + 2.0 * np.eye(n)
    x = rng.standard_normal(n)
    # Projected twice so λ⊤x vanishes to rounding.
    x = x - lam * (lam @ x) / (lam @ lam)
    x = x - lam * (lam @ x) / (lam @ lam)
    return td, C, lam, x, rng.standard_normal(n)


class TestMultiplierQuadratic:
    @pytest.mark.parametrize(
        "a, x, px, py",
        [(0.75, 1.0, 0.2, 1.0), (1.25, 1.0, 1.0, 0.0), (0.75, 0.4, -0.3, 0.8), (1.5, 2.0, 0.7, -0.1)],
    )
    def test_planar_coefficients_match_the_closed_forms(self, a, x, px, py):
        sys, td = _planar(a)
        quad = multiplier_coefficients(td, sys.C, sys.lam, [x, 0.0], [px, py])
        alpha, beta, gamma = section6_coefficients(a, x, px, py)
        assert quad.alpha == alpha
        assert quad.beta == pytest.approx(beta, abs=1e-14)
        assert quad.gamma == pytest.approx(gamma, abs=1e-14)

    def test_two_roots_give_opposite_normal_velocities(self):
        sys, td = _planar(0.75)
        quad = multiplier_coefficients(td, sys.C, sys.lam, [1.0, 0.0], [0.2, 1.0])
        assert quad.regime is Regime.TWO_ROOTS
        assert quad.discriminant == pytest.approx(1.70, rel=1e-12)
        velocities = sorted(quad.normal_velocity(r) for r in quad.roots)
        np.testing.assert_allclose(velocities, [-math.sqrt(1.7), math.sqrt(1.7)], rtol=1e-12)

    def test_random_two_root_instances(self, rng):
        checked = attempts = 0
        while checked < 200:
            attempts += 1
            assert attempts < 2000
            td, C, lam, x, p = _random_impact(rng, war=False)
            quad = multiplier_coefficients(td, C, lam, x, p, war=False)
            if quad.regime is not Regime.TWO_ROOTS:
                continue
            root_d = math.sqrt(quad.discriminant)
            tol = 1e-9 * (1.0 + abs(quad.beta) + root_d)
            if root_d < 1e-3 * (1.0 + abs(quad.beta)):
                continue
            h_plus = hamiltonian(td, C @ x, p)
            norms = sum(np.linalg.norm(M) for M in (td.Q_t, td.A_t, td.R_t))
            size = (1.0 + np.linalg.norm(C)) ** 2 * (1.0 + norms)
            velocities = []
            for eps in quad.roots:
                p_minus = C.T @ p + eps * lam
                v = normal_velocity(td, lam, x, p_minus)
                assert abs(v - quad.normal_velocity(eps)) <= tol
                scale = size * (1.0 + np.linalg.norm(x) + np.linalg.norm(p_minus) + np.linalg.norm(p)) ** 2
                assert abs(hamiltonian(td, x, p_minus) - h_plus) <= 1e-9 * scale
                velocities.append(v)
            assert velocities[0] * velocities[1] < 0
            np.testing.assert_allclose(np.abs(velocities), root_d, rtol=0, atol=tol)
            checked += 1

    def test_weakly_actuated_root_continues_the_hamiltonian(self, rng):
        checked = 0
        while checked < 50:
            td, C, lam, x, p = _random_impact(rng, war=True)
            beta = float(lam @ td.A @ x)
            if abs(beta) < 1e-2:
                continue
            quad = multiplier_coefficients(td, C, lam, x, p)
            assert quad.regime is Regime.WAR_LINEAR
            # With λ⊤B = 0 the jump condition is linear in ε.
            direct = -(hamiltonian(td, x, C.T @ p) - hamiltonian(td, C @ x, p)) / beta
            assert quad.roots[0] == pytest.approx(direct, rel=1e-9, abs=1e-9)
            checked += 1

    def test_negative_discriminant(self):
        sys, td = _planar(1.25)
        quad = multiplier_coefficients(td, sys.C, sys.lam, [1.0, 0.0], [1.0, 0.0])
        assert quad.regime is Regime.NO_ROOTS
        assert quad.discriminant == pytest.approx(-1.5)

    def test_off_guard_point_rejected(self):
        sys, td = _planar(0.75)
        with pytest.raises(InvalidModelError, match="not on the guard"):
            multiplier_coefficients(td, sys.C, sys.lam, [1.0, 0.1], [0.2, 1.0])

    def test_reduced_gamma_matches_the_direct_one(self, rng):
        sys, td = _planar(0.75)
        M = rng.standard_normal((2, 2))
        S_plus, c_plus = M @ M.T + np.eye(2), rng.standard_normal(2)
        reduced = reduced_coefficients(td, sys.C, S_plus, c_plus)
        x = np.array([0.7, 0.0])
        p_plus = S_plus @ sys.C @ x + c_plus
        direct = multiplier_coefficients(td, sys.C, sys.lam, x, p_plus)
        via_reduced = multiplier_coefficients(td, sys.C, sys.lam, x, p_plus, reduced=reduced)
        assert via_reduced.gamma == pytest.approx(direct.gamma, rel=1e-12, abs=1e-12)


class TestDiscriminantForm:
    @pytest.mark.parametrize("a", [0.75, 1.0, 1.25])
    def test_planar_matrix(self, a):
        sys, td = _planar(a)
        form = discriminant_form(td, sys.C, sys.lam)
        np.testing.assert_allclose(form.matrix[PLANAR_INDICES], section6_discriminant_matrix(a), atol=1e-14)

    def test_form_evaluates_the_discriminant(self):
        sys, td = _planar(0.75)
        form = discriminant_form(td, sys.C, sys.lam)
        assert form([1.0, 0.0], [0.2, 1.0]) == pytest.approx(1.70, rel=1e-12)

    def test_length_checked(self):
        sys, td = _planar(0.75)
        with pytest.raises(InvalidModelError, match="total length"):
            discriminant_form(td, sys.C, sys.lam)([1.0], [0.2, 1.0])


class TestResolveCostateJump:
    def test_plus_branch_takes_the_descending_root(self):
        sys, td = _planar(0.75)
        jump = resolve_costate_jump(td, sys.C, sys.lam, [1.0, 0.0], [0.2, 1.0], incoming_side=1)
        assert jump.branch is Branch.PLUS
        assert jump.normal_velocity == pytest.approx(-math.sqrt(1.7), rel=1e-12)
        assert jump.epsilon == pytest.approx((-1.6 + math.sqrt(6.8)) / 2, rel=1e-12)
        np.testing.assert_allclose(jump.p_minus, sys.C.T @ jump.p_plus + jump.epsilon * sys.lam)
        assert abs(jump.hamiltonian_gap) < 1e-12

    def test_override_picks_the_other_root(self):
        sys, td = _planar(0.75)
        jump = resolve_costate_jump(
            td, sys.C, sys.lam, [1.0, 0.0], [0.2, 1.0], incoming_side=1, branch_override="minus"
        )
        assert jump.branch is Branch.MINUS
        assert jump.normal_velocity == pytest.approx(math.sqrt(1.7), rel=1e-12)
        assert abs(jump.hamiltonian_gap) < 1e-12

    def test_no_extremal_jump(self):
        sys, td = _planar(1.25)
        with pytest.raises(NoExtremalJumpError) as excinfo:
            resolve_costate_jump(td, sys.C, sys.lam, [1.0, 0.0], [1.0, 0.0], incoming_side=1)
        assert excinfo.value.exit_code == 6
        assert excinfo.value.details["regime"] == "no_roots"

    def test_double_root_is_ill_conditioned(self):
        sys, td = _planar(1.0)
        with pytest.raises(IllConditionedError, match="double root"):
            resolve_costate_jump(td, sys.C, sys.lam, [1.0, 0.0], [0.5, 0.0], incoming_side=1)

    def test_side_must_be_signed(self):
        sys, td = _planar(0.75)
        with pytest.raises(InvalidModelError, match="incoming_side"):
            resolve_costate_jump(td, sys.C, sys.lam, [1.0, 0.0], [0.2, 1.0], incoming_side=0)


class TestWeaklyActuatedJumps:
    def test_linear_multiplier_for_the_spring(self, mechanical_spring):
        sys = mechanical_spring.system
        td = tilde(mechanical_spring.cost, sys.A, sys.B)
        jump = resolve_costate_jump(td, sys.C, sys.lam, [0.0, -1.0], [0.3, -0.2], incoming_side=1)
        assert jump.quadratic.regime is Regime.WAR_LINEAR
        assert jump.quadratic.beta == -1.0
        assert jump.branch is Branch.UNIQUE
        assert jump.epsilon == pytest.approx(-0.6)
        np.testing.assert_allclose(jump.p_minus, [-0.3, 0.2])
        assert abs(jump.hamiltonian_gap) < 1e-12

    def test_resting_impact_is_tangential(self, mechanical_spring):
        sys = mechanical_spring.system
        td = tilde(mechanical_spring.cost, sys.A, sys.B)
        with pytest.raises(TangentialImpactError) as excinfo:
            multiplier_coefficients(td, sys.C, sys.lam, [0.0, 0.0], [0.3, -0.2])
        assert excinfo.value.exit_code == 8


class TestOptions:
    def test_from_dict_parses_overrides(self):
        options = SpatialSolverOptions.from_dict({"max_iter": 5, "branch_overrides": {"0": "minus"}})
        assert options.max_iter == 5
        assert options.branch_overrides == {0: "minus"}

    def test_unknown_options_rejected(self):
        with pytest.raises(InvalidModelError, match="unknown solver options"):
            SpatialSolverOptions.from_dict({"iterations": 5})

    def test_empty_document_gives_defaults(self):
        assert SpatialSolverOptions.from_dict(None) == SpatialSolverOptions()

    def test_seeds_parsed_from_a_list(self):
        options = SpatialSolverOptions.from_dict({"seeds": ["classical", "truncated"], "max_starts": 2})
        assert options.seeds == ("classical", "truncated")
        assert options.max_starts == 2

    @pytest.mark.parametrize("seeds", [(), ("random",), ("truncated",)])
    def test_bad_seed_lists_rejected(self, seeds):
        with pytest.raises(InvalidModelError, match="seed"):
            SpatialSolverOptions(seeds=seeds)

    def test_start_budget_must_be_positive(self):
        with pytest.raises(InvalidModelError, match="max_starts"):
            SpatialSolverOptions(max_starts=0)


class TestSolveSpatial:
    def test_plan_that_never_reaches_the_guard(self, integrator):
        system, cost = integrator
        report = solve_spatial(system, cost, [1.0], (0.0, 1.0))
        assert report.converged
        assert report.iterations == 1
        assert report.jump_count == 0
        assert report.cost == pytest.approx(0.25, rel=1e-6)
        assert report.trajectory.final_state[0] == pytest.approx(0.5, rel=1e-6)

    def test_uncontrolled_flow_converges_after_one_restart(self, uncontrolled):
        report = solve_spatial(uncontrolled.system, uncontrolled.cost, uncontrolled.x0, (0.0, 2.0))
        assert report.converged
        assert report.iterations == 2
        assert report.jump_count == 1
        assert report.jump_times[0] == pytest.approx(math.pi / 4, abs=1e-9)
        assert report.branch_choices == (Branch.UNIQUE,)
        x_f = report.trajectory.final_state
        assert report.cost == pytest.approx(uncontrolled.cost.terminal(x_f), rel=1e-12)
        # Co-states recorded on the final arc close the terminal condition.
        np.testing.assert_allclose(
            report.trajectory.arcs[-1].costates[-1], uncontrolled.cost.F @ x_f, rtol=1e-9, atol=1e-12
        )
        assert report.residual < 1e-10

    def test_every_seed_is_reported_and_ties_keep_the_first(self, uncontrolled):
        report = solve_spatial(uncontrolled.system, uncontrolled.cost, uncontrolled.x0, (0.0, 2.0))
        # The free flow impacts at π/4 too, so both seeds reach the same extremal.
        assert [s["seed"] for s in report.starts] == ["classical", "uncontrolled"]
        assert all(s["converged"] and s["jump_count"] == 1 for s in report.starts)
        assert report.starts[1]["iterations"] == 1
        assert report.seed == "classical"
        assert report.to_dict()["starts"][0]["cost"] == pytest.approx(report.cost, rel=1e-12)

    def test_single_seed_runs_once(self, uncontrolled):
        options = SpatialSolverOptions(seeds=("uncontrolled",))
        report = solve_spatial(uncontrolled.system, uncontrolled.cost, uncontrolled.x0, (0.0, 2.0), options)
        assert report.seed == "uncontrolled"
        assert report.iterations == 1
        assert len(report.starts) == 1

    def test_sampled_sweep_matches_the_recorded_costates(self, uncontrolled):
        report = solve_spatial(uncontrolled.system, uncontrolled.cost, uncontrolled.x0, (0.0, 2.0))
        arc = report.trajectory.arcs[0]
        S, c = report.riccati.evaluate(float(arc.times[10]))
        np.testing.assert_allclose(S @ arc.states[10] + c, arc.costates[10], rtol=1e-8, atol=1e-10)
        assert report.riccati.jump_times == report.jump_times

    def test_iteration_budget_exhausted(self, uncontrolled):
        options = SpatialSolverOptions(max_iter=1, seeds=("classical",))
        with pytest.raises(NonConvergenceError) as excinfo:
            solve_spatial(uncontrolled.system, uncontrolled.cost, uncontrolled.x0, (0.0, 2.0), options)
        best = excinfo.value.best
        assert best is not None
        assert not best.converged
        assert best.jump_count == 1
        assert excinfo.value.exit_code == 10

    def test_impact_in_a_beating_set(self):
        # ẋ3 = −x1 drives (1, 0, ·) onto the guard at e1, which C sends to e2, still on the guard.
        A = np.zeros((3, 3))
        A[2, 0] = -1.0
        C = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        sys = LinearHybridSystem(A=A, B=np.zeros((3, 0)), C=C, lam=[0.0, 0.0, 1.0])
        cost = QuadraticCost(Q=np.zeros((3, 3)), R=np.zeros((0, 0)), F=np.eye(3))
        with pytest.raises(BeatingEncounteredError) as excinfo:
            solve_spatial(sys, cost, [1.0, 0.0, 0.5], (0.0, 1.0))
        assert excinfo.value.details["beating_depth"] == 1
        assert excinfo.value.details["t"] == pytest.approx(0.5, abs=1e-10)

    def test_start_on_the_guard_rejected(self, integrator):
        system, cost = integrator
        with pytest.raises(InvalidModelError, match="on the guard"):
            solve_spatial(system, cost, [0.0], (0.0, 1.0))

    def test_cost_must_match_the_system(self, integrator):
        system, _ = integrator
        with pytest.raises(InvalidModelError, match="cost dimensions"):
            solve_spatial(system, QuadraticCost(Q=np.eye(2), R=[[1.0]], F=np.eye(2)), [1.0], (0.0, 1.0))

    @pytest.mark.slow
    def test_contracting_planar_example_jumps_twice(self, contracting):
        report = solve_spatial(contracting.system, contracting.cost, contracting.x0, contracting.horizon)
        assert report.converged
        assert report.jump_count == contracting.expected["jump_count"]
        assert all(branch is Branch.PLUS for branch in report.branch_choices)
        assert all(abs(gap) < 1e-8 for gap in report.to_dict()["hamiltonian_gaps"])
        converged = [s for s in report.starts if s["converged"]]
        assert report.cost == min(s["cost"] for s in converged)
        x_f = report.trajectory.final_state
        assert report.residual <= 1e-6 * (1.0 + np.linalg.norm(x_f))
        assert max(h["residual"] for h in report.history) > report.residual

    @pytest.mark.slow
    def test_expanding_planar_example_jumps_three_times(self):
        preset = get_preset("section6-expanding")
        report = solve_spatial(preset.system, preset.cost, preset.x0, preset.horizon)
        assert report.converged
        assert report.jump_count == preset.expected["jump_count"] == 3
        assert all(0.0 < t < 2.0 for t in report.jump_times)
        assert all(abs(gap) < 1e-8 for gap in report.to_dict()["hamiltonian_gaps"])


class TestExploreBranches:
    def test_single_candidate_without_two_root_jumps(self, uncontrolled):
        exploration = explore_branches(uncontrolled.system, uncontrolled.cost, uncontrolled.x0, (0.0, 2.0))
        assert len(exploration.candidates) == 1
        assert exploration.best_index == 0
        assert not exploration.tie
        assert exploration.best.report.jump_count == 1
