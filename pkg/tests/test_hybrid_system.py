# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

from hybrid_lqr.core.hybrid_system import (
    AffineHybridSystem,
    LinearHybridSystem,
    apply_reset,
    first_return_time,
    flow_arc,
    simulate,
    simulate_many,
    system_from_dict,
)
from hybrid_lqr.core.presets import first_order_zeno, second_order_zeno
from hybrid_lqr.errors import BlockedStateError, InvalidModelError, SuspectedZenoError

QUARTER = math.pi / 4


class TestConstruction:
    def test_singular_reset_rejected(self):
        with pytest.raises(InvalidModelError, match="singular"):
            LinearHybridSystem(A=np.eye(2), B=[[0.0], [1.0]], C=[[1.0, 0.0], [0.0, 0.0]], lam=[0.0, 1.0])

    def test_singular_reset_allowed_when_flagged(self):
        sys = LinearHybridSystem(
            A=np.eye(2), B=[[0.0], [1.0]], C=[[1.0, 0.0], [0.0, 0.0]], lam=[0.0, 1.0], allow_singular_reset=True
        )
        assert sys.n == 2 and sys.m == 1

    def test_zero_guard_normal_rejected(self):
        with pytest.raises(InvalidModelError, match="lambda"):
            LinearHybridSystem(A=np.eye(2), B=np.zeros((2, 0)), C=np.eye(2), lam=[0.0, 0.0])

    def test_bad_crossing_direction_rejected(self):
        with pytest.raises(InvalidModelError, match="crossing_direction"):
            LinearHybridSystem(A=np.eye(2), B=np.zeros((2, 0)), C=np.eye(2), lam=[1.0, 0.0], crossing_direction=2)

    def test_matrices_are_read_only(self, uncontrolled):
        with pytest.raises(ValueError):
            uncontrolled.system.A[0, 0] = 5.0

    def test_affine_fields_make_an_affine_system(self):
        sys = system_from_dict({"A": [[0.0]], "B": [[1.0]], "C": [[1.0]], "lambda": [1.0], "a": 0.5})
        assert isinstance(sys, AffineHybridSystem)
        assert sys.offset == 0.5
        np.testing.assert_array_equal(sys.drift, [0.0])

    def test_missing_field_is_reported(self):
        with pytest.raises(InvalidModelError, match="'C'"):
            system_from_dict({"A": [[0.0]], "lambda": [1.0]})

    def test_declared_dimension_must_match(self):
        with pytest.raises(InvalidModelError, match="n=3"):
            system_from_dict({"n": 3, "A": [[0.0]], "C": [[1.0]], "lambda": [1.0]})


class TestFlowArc:
    def test_rotation_reaches_the_guard_after_an_eighth_turn(self, uncontrolled):
        result = flow_arc(uncontrolled.system, uncontrolled.x0, t_span=(0.0, 2.0), step=1e-2)
        assert result.hit is not None
        assert result.hit.t == pytest.approx(QUARTER, abs=1e-10)
        assert result.hit.incoming_side == 1
        assert not result.hit.grazing
        expected_x = math.exp(QUARTER) * math.sqrt(2) / 2
        np.testing.assert_allclose(result.hit.x, [expected_x, 0.0], atol=1e-10)
        assert result.arc.times[-1] == result.hit.t

    def test_no_crossing_runs_to_the_end_of_the_horizon(self, uncontrolled):
        result = flow_arc(uncontrolled.system, uncontrolled.x0, t_span=(0.0, 0.5), step=1e-2)
        assert result.hit is None
        assert result.arc.times[-1] == 0.5

    def test_empty_horizon_returns_the_start(self, uncontrolled):
        result = flow_arc(uncontrolled.system, uncontrolled.x0, t_span=(1.0, 1.0))
        assert result.hit is None
        assert result.arc.times.tolist() == [1.0]

    def test_nonpositive_step_rejected(self, uncontrolled):
        with pytest.raises(InvalidModelError, match="step"):
            flow_arc(uncontrolled.system, uncontrolled.x0, step=0.0)


class TestApplyReset:
    def test_quarter_turn_reset(self, uncontrolled):
        x_post, depth = apply_reset(uncontrolled.system, [2.0, 0.0])
        np.testing.assert_allclose(x_post, [0.0, 3.0])
        assert depth == 0

    def test_reset_off_the_guard_rejected(self, uncontrolled):
        with pytest.raises(InvalidModelError, match="off the guard"):
            apply_reset(uncontrolled.system, [1.0, 1.0])

    def test_origin_is_a_fixed_point(self, uncontrolled):
        x_post, depth = apply_reset(uncontrolled.system, [0.0, 0.0])
        np.testing.assert_array_equal(x_post, [0.0, 0.0])
        assert depth == 0

    def test_beating_reset_reports_its_depth(self, cyclic_reset):
        x_post, depth = apply_reset(cyclic_reset, [1.0, 0.0, 0.0])
        np.testing.assert_allclose(x_post, [0.0, 0.0, 1.0])
        assert depth == 1

    def test_identity_reset_blocks(self):
        sys = LinearHybridSystem(A=np.eye(2), B=np.zeros((2, 0)), C=np.eye(2), lam=[0.0, 1.0])
        with pytest.raises(BlockedStateError) as excinfo:
            apply_reset(sys, [1.0, 0.0])
        assert len(excinfo.value.orbit) == sys.n + 2
        assert excinfo.value.exit_code == 4

    def test_affine_reset_adds_the_bias(self):
        base = LinearHybridSystem(A=np.zeros((2, 2)), B=np.zeros((2, 0)), C=np.eye(2), lam=[0.0, 1.0])
        sys = AffineHybridSystem(base=base, b=[0.0, -1.0], kappa=[0.0, 2.0], a=1.0)
        x_post, depth = apply_reset(sys, [0.5, 1.0])
        np.testing.assert_allclose(x_post, [0.5, 3.0])
        assert depth == 0


class TestSimulate:
    def test_jumps_every_quarter_turn(self, uncontrolled):
        traj = simulate(uncontrolled.system, uncontrolled.x0, t_span=uncontrolled.horizon, step=1e-2)
        expected = [QUARTER + k * math.pi / 2 for k in range(4)]
        assert traj.jump_count == 4
        np.testing.assert_allclose([j.t for j in traj.jumps], expected, atol=1e-9)
        for jump in traj.jumps:
            assert jump.x_post[0] == pytest.approx(0.0, abs=1e-12)
            assert jump.x_post[1] == pytest.approx(1.5 * jump.x_pre[0], rel=1e-12)
        assert traj.min_dwell_time == pytest.approx(QUARTER, abs=1e-9)
        assert traj.final_time == uncontrolled.horizon[1]
        assert len(traj.arcs) == traj.jump_count + 1

    def test_arcs_after_a_jump_start_at_the_jump(self, uncontrolled):
        traj = simulate(uncontrolled.system, uncontrolled.x0, t_span=uncontrolled.horizon, step=1e-2)
        for jump, arc in zip(traj.jumps, traj.arcs[1:]):
            assert arc.times[0] == jump.t
            np.testing.assert_array_equal(arc.states[0], jump.x_post)

    def test_crossing_direction_selects_ascending_crossings(self, uncontrolled):
        base = uncontrolled.system
        ascending = LinearHybridSystem(A=base.A, B=base.B, C=base.C, lam=base.lam, crossing_direction=1)
        traj = simulate(ascending, uncontrolled.x0, t_span=(0.0, 4.5), step=1e-2)
        assert traj.jump_count == 1
        assert traj.jumps[0].t == pytest.approx(5 * QUARTER, abs=1e-9)

    def test_first_order_zeno_is_stopped_at_the_jump_budget(self):
        preset = first_order_zeno()
        with pytest.raises(SuspectedZenoError) as excinfo:
            simulate(preset.system, preset.x0, t_span=preset.horizon, step=1e-3, max_jumps=20)
        report = excinfo.value.report
        assert report.reason == "max_jumps"
        assert len(report.jump_times) == 20
        assert report.jump_times[0] == pytest.approx(0.5)
        assert all(t < 1.0 + 1e-9 for t in report.jump_times)
        assert excinfo.value.exit_code == 5

    def test_bouncing_ball_keeps_bouncing_below_the_step(self):
        preset = second_order_zeno()
        with pytest.raises(SuspectedZenoError) as excinfo:
            simulate(preset.system, preset.x0, t_span=preset.horizon, step=5e-3, max_jumps=20)
        report = excinfo.value.report
        assert report.reason == "max_jumps"
        assert report.jump_times[0] == pytest.approx(math.sqrt(2), abs=1e-10)
        # Each flight is half as long as the previous one.
        dwell = np.asarray(report.dwell_times[1:])
        np.testing.assert_allclose(dwell[1:] / dwell[:-1], 0.5, rtol=1e-6)
        assert report.jump_times[-1] < 3 * math.sqrt(2)

    def test_simulate_many_returns_errors_in_place(self, uncontrolled):
        results = simulate_many(
            uncontrolled.system, [uncontrolled.x0, [1.0, 1.0, 1.0]], t_span=(0.0, 1.0), step=1e-2, max_workers=2
        )
        assert results[0].jump_count == 1
        assert isinstance(results[1], InvalidModelError)


class TestTrivialBlockingProperty:
    def test_random_trivially_blocking_systems_jump_finitely(self, rng):
        from hybrid_lqr.core.guard_analysis import is_trivially_blocking

        checked = 0
        while checked < 50:
            n = int(rng.integers(2, 4))
            A = 0.3 * rng.standard_normal((n, n))
            C, _ = np.linalg.qr(rng.standard_normal((n, n)))
            lam = rng.standard_normal(n)
            if not is_trivially_blocking(C, lam):
                continue
            sys = LinearHybridSystem(A=A, B=np.zeros((n, 0)), C=C, lam=lam)
            x0 = rng.standard_normal(n)
            if abs(lam @ x0) < 1e-3:
                continue
            traj = simulate(sys, x0, t_span=(0.0, 5.0), step=1e-2, max_jumps=5000)
            assert traj.jump_count < 5000
            assert all(j.dwell_time > 0 for j in traj.jumps[1:])
            checked += 1


class TestFirstReturnTime:
    def test_rotation_returns_after_an_eighth_turn(self, uncontrolled):
        assert first_return_time(uncontrolled.system, [0.5, 0.5], 2.0) == pytest.approx(QUARTER, abs=1e-10)

    def test_no_return_within_the_window(self, uncontrolled):
        assert first_return_time(uncontrolled.system, [0.5, 0.5], 0.5) == math.inf

    def test_affine_systems_rejected(self):
        with pytest.raises(InvalidModelError):
            first_return_time(first_order_zeno().system, [1.0, 1.0], 1.0)

    def test_origin_rejected(self, uncontrolled):
        with pytest.raises(InvalidModelError, match="x != 0"):
            first_return_time(uncontrolled.system, [0.0, 0.0], 1.0)
