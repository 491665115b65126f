"""Shared fixtures and independent oracles for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from rigclab import (
    CommunityCatalog,
    Pmf,
    TheoryInputs,
    complete_graph,
    path_graph,
)


def philox(seed: int, replica: int = 0, role: int = 0) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence((seed, replica, role)))
    )


def bisect_eta(inputs: TheoryInputs, iters: int = 200) -> float:
    """Independent fixed-point oracle: bisection on the residual of
    z - G_qt(G_pt(z)), which is negative below the smallest root and
    positive between it and 1 in the supercritical case."""

    def residual(z: float) -> float:
        return z - inputs.q_tilde.gf_eval(inputs.p_tilde.gf_eval(z))

    lo, hi = 0.0, 1.0 - 1e-9
    if residual(hi) <= 0.0:
        return 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if residual(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture(scope="session")
def k1():
    from rigclab import CommunityGraph

    return CommunityGraph(1, [])


@pytest.fixture(scope="session")
def k2():
    return complete_graph(2)


@pytest.fixture(scope="session")
def k3():
    return complete_graph(3)


@pytest.fixture(scope="session")
def p3():
    return path_graph(3)


@pytest.fixture(scope="session")
def p_estar():
    return Pmf({1: 0.5, 3: 0.5})


@pytest.fixture(scope="session")
def cat_estar(k3):
    return CommunityCatalog([(k3, 1.0)])


@pytest.fixture(scope="session")
def inputs_estar(p_estar, cat_estar):
    return TheoryInputs.from_p_catalog(p_estar, cat_estar)
