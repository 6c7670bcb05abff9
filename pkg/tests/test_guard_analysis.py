# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

from hybrid_lqr.core.guard_analysis import (
    beating_flag,
    beating_sets_by_images,
    has_war,
    invariant_guard_report,
    is_trivially_blocking,
)
from hybrid_lqr.errors import InvalidModelError


class TestBeatingFlag:
    def test_cyclic_reset_loses_one_dimension_per_step(self, cyclic_reset):
        flag = beating_flag(cyclic_reset.C, cyclic_reset.lam)
        assert flag.dims == (2, 1, 0)
        assert flag.blocking_dim == 0
        assert flag.trivially_blocking
        assert flag.k_stabilize == 2
        # Σ_1 is spanned by e2.
        np.testing.assert_allclose(np.abs(flag.bases[1][:, 0]), [0.0, 1.0, 0.0], atol=1e-12)

    def test_quarter_turn_reset_is_trivially_blocking(self, uncontrolled):
        flag = beating_flag(uncontrolled.system.C, uncontrolled.system.lam)
        assert flag.dims == (1, 0)
        assert flag.trivially_blocking

    def test_identity_reset_blocks_the_whole_guard(self):
        flag = beating_flag(np.eye(2), [0.0, 1.0])
        assert flag.dims == (1, 1)
        assert flag.blocking_dim == 1
        assert flag.k_stabilize == 0
        assert not flag.trivially_blocking

    def test_singular_reset_rejected(self):
        with pytest.raises(InvalidModelError, match="singular"):
            beating_flag([[1.0, 0.0], [0.0, 0.0]], [0.0, 1.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidModelError, match="does not match"):
            beating_flag(np.eye(3), [0.0, 1.0])

    def test_to_dict_is_plain(self, cyclic_reset):
        data = beating_flag(cyclic_reset.C, cyclic_reset.lam).to_dict()
        assert data["dims"] == [2, 1, 0]
        assert len(data["basis_stack"]) == 3


class TestTrivialBlocking:
    def test_rank_test_agrees_with_the_flag(self, rng):
        checked = 0
        while checked < 200:
            n = int(rng.integers(2, 7))
            C = rng.standard_normal((n, n))
            lam = rng.standard_normal(n)
            if np.linalg.cond(C) > 1e4:
                continue
            assert is_trivially_blocking(C, lam) == beating_flag(C, lam).trivially_blocking
            checked += 1

    def test_rank_test_agrees_on_structured_resets(self, rng):
        # Signed permutations give both answers; generic draws are almost always blocking.
        blocking = 0
        for _ in range(200):
            n = int(rng.integers(2, 7))
            C = np.eye(n)[rng.permutation(n)] * rng.choice([-1.0, 1.0], size=n)
            lam = np.zeros(n)
            lam[rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)] = 1.0
            flag = beating_flag(C, lam)
            assert is_trivially_blocking(C, lam) == flag.trivially_blocking
            blocking += flag.trivially_blocking
        assert 0 < blocking < 200

    def test_identity_is_not_trivially_blocking(self):
        assert not is_trivially_blocking(np.eye(3), [1.0, 0.0, 0.0])


class TestImageRecursion:
    def test_matches_the_flag_for_invertible_resets(self, cyclic_reset):
        bases = beating_sets_by_images(cyclic_reset.C, cyclic_reset.lam)
        assert [b.shape[1] for b in bases] == [2, 1, 0]

    def test_singular_reset_collapses_the_guard(self):
        # Reset kills the height and keeps the velocity: every image lands on the guard.
        C = [[0.0, 0.0], [0.0, -0.5]]
        bases = beating_sets_by_images(C, [1.0, 0.0])
        assert [b.shape[1] for b in bases] == [1, 1]

    def test_zero_image_ends_the_recursion(self):
        bases = beating_sets_by_images(np.zeros((2, 2)), [0.0, 1.0])
        assert [b.shape[1] for b in bases] == [1, 0]


class TestInvariantGuard:
    def test_cyclic_reset_keeps_every_beating_set_invariant(self, cyclic_reset):
        report = invariant_guard_report(cyclic_reset.A, cyclic_reset.C, cyclic_reset.lam)
        assert report.sigma_A_basis.shape[1] == 2
        assert report.dims == (2, 1, 0)
        assert report.beating_dims == (2, 1, 0)
        assert all(report.equality_flags)
        assert report.containment_verified

    def test_rotation_has_a_trivial_invariant_guard(self, uncontrolled):
        sys = uncontrolled.system
        report = invariant_guard_report(sys.A, sys.C, sys.lam)
        assert report.sigma_A_basis.shape[1] == 0
        assert report.dims == (0, 0)
        assert report.equality_flags == (False, True)

    def test_to_dict_reports_dimensions(self, cyclic_reset):
        data = invariant_guard_report(cyclic_reset.A, cyclic_reset.C, cyclic_reset.lam).to_dict()
        assert data["sigma_A_dim"] == 2
        assert data["equality_flags"] == [True, True, True]


class TestWeaklyActuatedResets:
    def test_mechanical_system_is_weakly_actuated(self, mechanical_spring):
        sys = mechanical_spring.system
        assert has_war(sys.B, sys.lam)

    def test_uncontrolled_system_is_weakly_actuated(self):
        assert has_war(np.zeros((2, 0)), [0.0, 1.0])

    def test_actuated_guard_is_not_weakly_actuated(self, contracting):
        sys = contracting.system
        assert not has_war(sys.B, sys.lam)
