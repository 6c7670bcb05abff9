# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

from hybrid_lqr.context import get_context
from hybrid_lqr.core.hybrid_system import LinearHybridSystem
from hybrid_lqr.core.lqr_core import QuadraticCost
from hybrid_lqr.core.presets import get_preset


@pytest.fixture
def rng():
    return np.random.default_rng(20260416)


@pytest.fixture(autouse=True)
def output_dir(tmp_path, monkeypatch):
    """Point the shared context at a per-test artifact directory."""
    context = get_context()
    monkeypatch.setattr(context, "output_dir", tmp_path / "output")
    return context.output_dir


@pytest.fixture
def contracting():
    return get_preset("section6-contracting")


@pytest.fixture
def uncontrolled():
    return get_preset("section6-uncontrolled")


@pytest.fixture
def mechanical_spring():
    return get_preset("mechanical-spring")


@pytest.fixture
def integrator():
    """ẋ = u on the half line x > 0 with a sign-flip reset at 0; Q = 0, R = F = 1."""
    system = LinearHybridSystem(A=[[0.0]], B=[[1.0]], C=[[-1.0]], lam=[1.0])
    cost = QuadraticCost(Q=[[0.0]], R=[[1.0]], F=[[1.0]])
    return system, cost


@pytest.fixture
def cyclic_reset():
    """Guard x3 = 0 with the cyclic permutation e1 -> e2 -> e3 -> e1 as reset."""
    C = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return LinearHybridSystem(A=np.diag([1.0, 2.0, 3.0]), B=np.zeros((3, 0)), C=C, lam=[0.0, 0.0, 1.0])
