# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

import json
import math

import numpy as np
import pytest

from hybrid_lqr.core.dp_oracle import (
    MAGIC,
    GridSpec,
    bellman_residual,
    dp_rollout,
    dp_solve,
    load_value_grid,
    save_value_grid,
)
from hybrid_lqr.errors import GridError, InvalidModelError


@pytest.fixture
def integrator_grid():
    return GridSpec.from_config({"x": [[0.25, 1.5, 51]], "t": [0.0, 1.0, 41], "u": [[-1.0, 0.0, 41]]})


@pytest.fixture
def integrator_values(integrator, integrator_grid):
    system, cost = integrator
    return dp_solve(system, cost, integrator_grid)


@pytest.fixture
def rotation_grid():
    return GridSpec.from_config({"x": [[-0.5, 3.0, 71], [-1.0, 3.5, 91]], "t": [0.0, 1.0, 101]})


class TestGridSpec:
    def test_from_config_builds_uniform_axes(self, integrator_grid):
        assert integrator_grid.n == 1 and integrator_grid.m == 1
        assert integrator_grid.dt == pytest.approx(0.025)
        assert integrator_grid.controls().shape == (41, 1)
        assert integrator_grid.to_config()["x"] == [[0.25, 1.5, 51]]

    def test_non_uniform_axis_rejected(self):
        with pytest.raises(InvalidModelError, match="uniformly spaced"):
            GridSpec(x_axes=(np.array([0.0, 1.0, 3.0]),), t_grid=np.linspace(0.0, 1.0, 3))

    def test_single_point_axis_rejected(self):
        with pytest.raises(InvalidModelError, match="at least 2 points"):
            GridSpec.from_config({"x": [[0.0, 1.0, 1]], "t": [0.0, 1.0, 3]})

    def test_missing_time_axis_reported(self):
        with pytest.raises(InvalidModelError, match="'t'"):
            GridSpec.from_config({"x": [[0.0, 1.0, 3]]})

    def test_uncontrolled_grid_has_one_empty_control(self, rotation_grid):
        assert rotation_grid.controls().shape == (1, 0)
        assert rotation_grid.contains([0.5, 0.5])
        assert not rotation_grid.contains([3.5, 0.5])


class TestSolve:
    def test_value_matches_the_riccati_value(self, integrator_values):
        # V(0, x) = x² / 4 for the integrator on [0, 1] with F = R = 1.
        assert integrator_values.value_at(0, [1.0]) == pytest.approx(0.25, rel=5e-2)
        assert integrator_values.values.shape == (41, 51)
        assert integrator_values.policy.shape == (40, 51)

    def test_terminal_slice_is_the_terminal_cost(self, integrator_values, integrator_grid):
        np.testing.assert_allclose(integrator_values.values[-1], 0.5 * integrator_grid.x_axes[0] ** 2)

    def test_bellman_residual_vanishes(self, integrator, integrator_values):
        system, cost = integrator
        assert bellman_residual(system, cost, integrator_values, samples=200) <= 1e-12

    def test_dimension_mismatch_rejected(self, integrator, rotation_grid):
        system, cost = integrator
        with pytest.raises(InvalidModelError, match="state axes"):
            dp_solve(system, cost, rotation_grid)

    def test_grid_that_everything_leaves(self, integrator):
        system, cost = integrator
        grid = GridSpec.from_config({"x": [[0.25, 1.5, 51]], "t": [0.0, 1.0, 3], "u": [[5.0, 6.0, 3]]})
        with pytest.raises(GridError) as excinfo:
            dp_solve(system, cost, grid)
        assert excinfo.value.exit_code == 12


class TestRollout:
    def test_integrator_rollout_tracks_the_optimal_plan(self, integrator, integrator_values):
        system, cost = integrator
        rollout = dp_rollout(system, cost, integrator_values, [1.0])
        assert not rollout.truncated
        assert rollout.jump_count == 0
        assert rollout.cost == pytest.approx(0.25, rel=5e-2)
        assert len(rollout.control_indices) == 40

    def test_uncontrolled_rollout_jumps_once(self, uncontrolled, rotation_grid):
        values = dp_solve(uncontrolled.system, uncontrolled.cost, rotation_grid)
        rollout = dp_rollout(uncontrolled.system, uncontrolled.cost, values, uncontrolled.x0)
        assert not rollout.truncated
        assert rollout.jump_count == 1
        jump = rollout.trajectory.jumps[0]
        assert jump.t == pytest.approx(math.pi / 4, abs=0.03)
        assert jump.x_post[0] == pytest.approx(0.0, abs=1e-12)
        assert jump.beating_depth == 0

    def test_start_outside_the_grid_rejected(self, integrator, integrator_values):
        system, cost = integrator
        with pytest.raises(InvalidModelError, match="outside the grid"):
            dp_rollout(system, cost, integrator_values, [2.0])


class TestPersistence:
    def test_save_and_load(self, integrator_values, tmp_path):
        path = save_value_grid(integrator_values, tmp_path / "value_grid.bin", x0=[1.0])
        assert path.read_bytes()[:8] == MAGIC
        loaded = load_value_grid(path)
        np.testing.assert_array_equal(loaded.values, integrator_values.values)
        np.testing.assert_array_equal(loaded.policy, integrator_values.policy)
        np.testing.assert_array_equal(loaded.grid.u_axes[0], integrator_values.grid.u_axes[0])
        summary = json.loads(path.with_suffix(".json").read_text())
        assert summary["value_t0_x0"] == pytest.approx(integrator_values.value_at(0, [1.0]))

    def test_foreign_file_rejected(self, tmp_path):
        path = tmp_path / "not_a_grid.bin"
        path.write_bytes(b"PAR1" + bytes(16))
        with pytest.raises(InvalidModelError, match="not a value grid"):
            load_value_grid(path)
