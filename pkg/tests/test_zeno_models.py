# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

from hybrid_lqr.core.hybrid_system import ZenoReport
from hybrid_lqr.core.zeno_models import (
    MIN_JUMPS_FOR_ESTIMATE,
    estimate_zeno_time,
    first_order_zeno_report,
    second_order_zeno_report,
    zeno_time_first_order,
    zeno_time_second_order,
)
from hybrid_lqr.errors import InvalidModelError


class TestClosedForms:
    def test_first_order_default_is_one(self):
        assert zeno_time_first_order(1.0, 2.0, 0.5, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_first_order_without_contraction_is_not_zeno(self):
        assert zeno_time_first_order(4.0, 2.0, 0.5, 1.0, 1.0) is None

    @pytest.mark.parametrize(
        "params",
        [(0.0, 2.0, 0.5, 1.0, 1.0), (1.0, 2.0, 1.0, 1.0, 1.0), (1.0, 2.0, 0.5, -1.0, 1.0), (1.0, 2.0, 0.5, 0.0, 0.0)],
    )
    def test_first_order_rejects_bad_parameters(self, params):
        with pytest.raises(InvalidModelError):
            zeno_time_first_order(*params)

    def test_bouncing_ball_printed_and_series_values(self):
        times = zeno_time_second_order(1.0, 0.5, 1.0, 0.0)
        assert times.series == pytest.approx(3 * math.sqrt(2), rel=1e-15)
        assert times.printed == pytest.approx(6 * math.sqrt(2), rel=1e-15)
        assert times.gap == pytest.approx(3 * math.sqrt(2), rel=1e-15)

    @pytest.mark.parametrize("params", [(0.0, 0.5, 1.0, 0.0), (1.0, 1.0, 1.0, 0.0), (1.0, 0.5, -1.0, 0.0)])
    def test_bouncing_ball_rejects_bad_parameters(self, params):
        with pytest.raises(InvalidModelError):
            zeno_time_second_order(*params)


class TestExactReports:
    def test_first_order_dwell_contracts_by_ca_over_b(self):
        report = first_order_zeno_report(1.0, 2.0, 0.5, 1.0, 1.0, max_jumps=10)
        assert report.jump_times[0] == 0.5
        assert report.dwell_times[1] == pytest.approx(0.375)
        for prev, nxt in zip(report.dwell_times[1:], report.dwell_times[2:]):
            assert nxt / prev == pytest.approx(0.25)
        assert report.reason == "closed_form"

    def test_bouncing_ball_first_impact(self):
        report = second_order_zeno_report(1.0, 0.5, 1.0, 0.0, max_jumps=5)
        assert report.jump_times[0] == pytest.approx(math.sqrt(2))
        assert report.dwell_times[1] == pytest.approx(math.sqrt(2))
        assert len(report.jump_times) == 5

    def test_partial_sums_approach_the_series_value(self):
        report = second_order_zeno_report(1.0, 0.5, 1.0, 0.0, max_jumps=60)
        assert report.jump_times[-1] == pytest.approx(3 * math.sqrt(2), abs=1e-12)


class TestEstimate:
    def test_first_order_estimate_matches_the_closed_form(self):
        estimate = estimate_zeno_time(first_order_zeno_report(1.0, 2.0, 0.5, 1.0, 1.0, max_jumps=40))
        assert estimate.reliable
        assert estimate.ratio == pytest.approx(0.25, rel=1e-9)
        assert estimate.extrapolated_time == pytest.approx(1.0, abs=1e-12)

    def test_bouncing_ball_estimate_matches_the_series(self):
        estimate = estimate_zeno_time(second_order_zeno_report(1.0, 0.5, 1.0, 0.0, max_jumps=20))
        assert estimate.reliable
        assert estimate.ratio == pytest.approx(0.5, rel=1e-9)
        assert estimate.extrapolated_time == pytest.approx(3 * math.sqrt(2), rel=1e-10)
        assert estimate.partial_sums[-1] == pytest.approx(estimate.jump_times[-1])

    def test_random_first_order_draws(self, rng):
        for _ in range(50):
            a, b = rng.uniform(0.5, 3.0, size=2)
            c = rng.uniform(0.05, min(0.95, 0.9 * b / a))
            x0, y0 = rng.uniform(0.1, 2.0, size=2)
            estimate = estimate_zeno_time(first_order_zeno_report(a, b, c, x0, y0, max_jumps=40))
            assert estimate.reliable
            assert estimate.ratio == pytest.approx(c * a / b, rel=1e-6)
            assert estimate.extrapolated_time == pytest.approx(zeno_time_first_order(a, b, c, x0, y0), rel=1e-9)

    def test_random_bouncing_ball_draws(self, rng):
        for _ in range(50):
            g = rng.uniform(0.5, 20.0)
            e = rng.uniform(0.1, 0.9)
            x0, y0 = rng.uniform(0.1, 5.0), rng.uniform(-2.0, 2.0)
            times = zeno_time_second_order(g, e, x0, y0)
            estimate = estimate_zeno_time(second_order_zeno_report(g, e, x0, y0, max_jumps=30))
            assert estimate.ratio == pytest.approx(e, rel=1e-6)
            assert estimate.extrapolated_time == pytest.approx(times.series, rel=1e-9)
            assert times.printed > times.series
            assert np.all(np.diff(estimate.jump_times) > 0)

    def test_too_few_jumps_rejected(self):
        report = first_order_zeno_report(1.0, 2.0, 0.5, 1.0, 1.0, max_jumps=MIN_JUMPS_FOR_ESTIMATE - 1)
        with pytest.raises(InvalidModelError, match="at least"):
            estimate_zeno_time(report)

    def test_non_geometric_history_is_unreliable(self):
        dwell = tuple(2.0**k for k in range(10))
        times = tuple(float(2.0 ** (k + 1) - 1) for k in range(10))
        report = ZenoReport(times, dwell, times[-1], "max_jumps")
        estimate = estimate_zeno_time(report)
        assert not estimate.reliable
        assert math.isinf(estimate.extrapolated_time)

    def test_decreasing_jump_times_rejected(self):
        times = (1.0, 2.0, 1.5, 3.0, 4.0, 5.0, 6.0, 7.0)
        with pytest.raises(InvalidModelError, match="non-decreasing"):
            estimate_zeno_time(ZenoReport(times, (1.0,) * 8, 7.0, "max_jumps"))
