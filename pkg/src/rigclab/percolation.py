"""Bond percolation on the projected graph via its community representation.

Percolating the graph is distributionally the same as percolating every
community and regenerating with the split components as the new community
list.  That turns the percolated giant into a plain fixed-point computation
on the percolated catalog, and the critical retention probability into a
deterministic bisection over exactly enumerable per-community expectations.
"""
from __future__ import annotations

from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .community import (
    CommunityCatalog,
    CommunityGraph,
    percolate_enumerate,
    percolate_sample,
    split_components,
)
from .components import GiantStats, giant_stats_rigc
from .errors import NotSupercritical, OutOfDomain
from .model import ModelParams, RigcGraph, _aggregate_edges, empty_rigc
from .pmf import Pmf
from .theory import GiantPrediction, TheoryInputs, giant_prediction


def percolate_rigc_graph(
    graph: RigcGraph, pi: float, rng: np.random.Generator
) -> RigcGraph:
    """Keep every edge instance (each unit of multiplicity) independently."""
    if not 0.0 <= pi <= 1.0:
        raise OutOfDomain(f"pi={pi} outside [0, 1]")
    if len(graph.edge_mult) == 0:
        return graph
    kept = rng.binomial(graph.edge_mult, pi)
    mask = kept > 0
    return RigcGraph(
        n_vertices=graph.n_vertices,
        edge_u=graph.edge_u[mask],
        edge_v=graph.edge_v[mask],
        edge_mult=kept[mask].astype(np.int64),
    )


def build_com_pi(
    communities: Sequence[CommunityGraph], pi: float, rng: np.random.Generator
) -> list[CommunityGraph]:
    """Percolate each community independently and concatenate the split pieces.

    Total vertex count is preserved, so the half-edge balance with any degree
    sequence survives percolation.  Communities sharing a labeled shape share
    one batched mask draw and one component split per distinct edge pattern.
    """
    if not 0.0 <= pi <= 1.0:
        raise OutOfDomain(f"pi={pi} outside [0, 1]")
    groups: dict[tuple, list[int]] = {}
    shapes: dict[tuple, CommunityGraph] = {}
    for a, g in enumerate(communities):
        key = (g.n, g.edges)
        groups.setdefault(key, []).append(a)
        shapes.setdefault(key, g)
    pieces_at: list = [None] * len(communities)
    for key, members in groups.items():
        g = shapes[key]
        m = g.edge_count
        if m == 0 or pi >= 1.0 or pi <= 0.0:
            fixed = percolate_sample(g, pi, rng)
            for a in members:
                pieces_at[a] = fixed
            continue
        masks = rng.random((len(members), m)) < pi
        codes = masks @ (1 << np.arange(m))
        by_code: dict[int, list[CommunityGraph]] = {}
        for a, code in zip(members, codes.tolist()):
            split = by_code.get(code)
            if split is None:
                kept = [g.edges[i] for i in range(m) if code >> i & 1]
                split = by_code[code] = split_components(g.n, kept)
            pieces_at[a] = split
    out: list[CommunityGraph] = []
    for split in pieces_at:
        out.extend(split)
    return out


@dataclass(frozen=True)
class PercolatedCatalog:
    """Limiting catalog of the percolated community list."""

    pi: float
    catalog_pi: CommunityCatalog
    mean_size_pi: float


def mu_pi_limit(catalog: CommunityCatalog, pi: float) -> PercolatedCatalog:
    """Exact limiting frequency of every percolated component shape.

    Component frequencies are per *new* community: each original community
    contributes kappa(H | outcome) copies of shape H, and the normalizer is
    the expected number of split pieces per original community.  The mean
    percolated size follows from vertex conservation.
    """
    numerator: dict = {}
    rep: dict = {}
    denominator = 0.0
    for g, w in catalog.items:
        profile = percolate_enumerate(g, pi)
        for outcome, prob in profile.outcomes:
            denominator += w * prob * len(outcome)
            for key in outcome:
                numerator[key] = numerator.get(key, 0.0) + w * prob
                if key not in rep:
                    rep[key] = profile.components_by_key[key]
    items = [(rep[k], mass / denominator) for k, mass in numerator.items()]
    return PercolatedCatalog(
        pi=pi,
        catalog_pi=CommunityCatalog(items),
        mean_size_pi=catalog.mean_size() / denominator,
    )


def percolated_prediction(p: Pmf, catalog: CommunityCatalog, pi: float) -> GiantPrediction:
    """Giant prediction for retention pi: the fixed point on the percolated catalog."""
    pc = mu_pi_limit(catalog, pi)
    return giant_prediction(TheoryInputs.from_p_catalog(p, pc.catalog_pi))


# -- critical retention probability ---------------------------------------------


def _supercriticality_gap(p_tilde_mean: float, catalog: CommunityCatalog, pi: float) -> float:
    """E[tilted membership] * E[|H| (|C(root, pi)| - 1)] / E[|H|] - 1, exactly."""
    mean_size = catalog.mean_size()
    acc = 0.0
    for g, w in catalog.items:
        prof = percolate_enumerate(g, pi)
        acc += w * g.n * prof.mean_root_component_minus_one
    return p_tilde_mean * acc / mean_size - 1.0


def critical_pi_bracket(
    p: Pmf, catalog: CommunityCatalog, tol: float = 1e-6
) -> tuple[float, float]:
    """Bisection bracket around the critical retention probability.

    The supercriticality gap is nondecreasing in pi (Harris monotonicity), so
    bisection is exact.  Returns (0, 0) in the robust regime where every
    positive retention is already supercritical.  Whether the threshold
    itself is supercritical is left undecided; only the bracket is reported.
    """
    base = giant_prediction(TheoryInputs.from_p_catalog(p, catalog))
    if not base.supercritical:
        raise NotSupercritical("unpercolated inputs must be supercritical")
    p_tilde_mean = p.size_bias().shift_down_one().mean()
    lo, hi = 0.0, 1.0
    if _supercriticality_gap(p_tilde_mean, catalog, 1e-12) > 0.0:
        return (0.0, 0.0)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _supercriticality_gap(p_tilde_mean, catalog, mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return lo, hi


def critical_pi(p: Pmf, catalog: CommunityCatalog, tol: float = 1e-6) -> float:
    lo, hi = critical_pi_bracket(p, catalog, tol)
    return 0.5 * (lo + hi)


# -- coupled sweeps and distribution checks ---------------------------------------


def harris_sweep(
    graph: RigcGraph,
    pi_grid: Sequence[float],
    rng: np.random.Generator,
    params: ModelParams | None = None,
) -> list[GiantStats]:
    """Giant statistics along a retention grid under one shared coupling.

    A single uniform variate per edge instance realizes percolation at every
    pi simultaneously, so the giant fraction is pointwise nondecreasing along
    the (ascending) grid.
    """
    grid = list(pi_grid)
    if any(not 0.0 <= x <= 1.0 for x in grid):
        raise OutOfDomain("pi grid must lie in [0, 1]")
    if sorted(grid) != grid:
        raise OutOfDomain("pi grid must be sorted ascending")
    units_u = np.repeat(graph.edge_u, graph.edge_mult)
    units_v = np.repeat(graph.edge_v, graph.edge_mult)
    coupling = rng.random(len(units_u))
    out = []
    for pi in grid:
        mask = coupling <= pi
        if mask.any():
            sub = _aggregate_edges(graph.n_vertices, units_u[mask], units_v[mask])
        else:
            sub = empty_rigc(graph.n_vertices)
        out.append(giant_stats_rigc(sub, params))
    return out


@dataclass(frozen=True)
class SizeBiasedCheck:
    """Total-variation comparison of the two routes to the size-biased
    percolated community size (minus one)."""

    tv_distance: float
    law_from_catalog: dict[int, float]
    law_from_roles: dict[int, float]


def sizebiased_comsize_check(
    communities: Sequence[CommunityGraph],
    pi: float,
    rng: np.random.Generator,
    replicas: int,
) -> SizeBiasedCheck:
    """Check that size-biasing the percolated size law matches the component
    of a uniformly chosen community role."""
    # route (a): percolate the list once, size-bias its empirical size law
    pieces = build_com_pi(communities, pi, rng)
    sizes = np.array([g.n for g in pieces], dtype=np.int64)
    size_pmf = Pmf.from_counts(np.bincount(sizes))
    law_a = size_pmf.size_bias().shift_down_one().as_dict()

    # route (b): uniform role = size-biased community + uniform member
    weights = np.array([g.n for g in communities], dtype=float)
    weights /= weights.sum()
    picks = rng.choice(len(communities), size=replicas, p=weights)
    counts: dict[int, int] = {}
    for a in picks:
        g = communities[a]
        root = int(rng.integers(1, g.n + 1))
        for comp_members in _component_membership(g, pi, rng):
            if root in comp_members:
                k = len(comp_members) - 1
                counts[k] = counts.get(k, 0) + 1
                break
    law_b = {k: c / replicas for k, c in counts.items()}

    support = set(law_a) | set(law_b)
    tv = 0.5 * sum(abs(law_a.get(k, 0.0) - law_b.get(k, 0.0)) for k in support)
    return SizeBiasedCheck(tv_distance=tv, law_from_catalog=law_a, law_from_roles=law_b)


def _component_membership(
    g: CommunityGraph, pi: float, rng: np.random.Generator
) -> list[set[int]]:
    kept = [e for e in g.edges if rng.random() < pi] if 0.0 < pi < 1.0 else (
        list(g.edges) if pi >= 1.0 else []
    )
    parent = list(range(g.n + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in kept:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[int, set[int]] = {}
    for v in range(1, g.n + 1):
        groups.setdefault(find(v), set()).add(v)
    return list(groups.values())
