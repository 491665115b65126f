"""Model parameters, the uniform bipartite matching, and the projected multigraph.

The generator draws degrees and communities, matches half-edges by a single
uniform permutation, and copies every community edge onto the individuals
holding its endpoint roles, keeping self-loops and multi-edges.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .community import CommunityCatalog, CommunityGraph, catalog_key
from .errors import (
    EmptySupport,
    HalfEdgeMismatch,
    InconsistentMatching,
    NotTwoRegularRight,
    ZeroDegree,
)
from .pmf import Pmf


@dataclass(frozen=True)
class ModelParams:
    """Degree-and-community input: one degree per individual, one graph per group."""

    l_degrees: np.ndarray
    communities: tuple[CommunityGraph, ...]

    @property
    def n_l(self) -> int:
        return len(self.l_degrees)

    @property
    def n_r(self) -> int:
        return len(self.communities)

    @property
    def half_edges(self) -> int:
        return int(self.l_degrees.sum())

    def r_degrees(self) -> np.ndarray:
        return np.array([g.n for g in self.communities], dtype=np.int64)


def build_params(
    l_degrees: Sequence[int], communities: Sequence[CommunityGraph]
) -> ModelParams:
    if len(l_degrees) == 0 or len(communities) == 0:
        raise EmptySupport("need at least one individual and one community")
    degs = np.asarray(l_degrees, dtype=np.int64)
    if degs.min() < 1:
        raise ZeroDegree("every membership count must be >= 1")
    total_l = int(degs.sum())
    total_r = sum(g.n for g in communities)
    if total_l != total_r:
        raise HalfEdgeMismatch(
            f"membership half-edges ({total_l}) != community roles ({total_r})"
        )
    return ModelParams(l_degrees=degs, communities=tuple(communities))


def sample_params(
    l_pmf: Pmf,
    catalog: CommunityCatalog,
    target_n: int,
    rng: np.random.Generator,
) -> ModelParams:
    """Draw (degrees, communities) targeting ``target_n`` individuals.

    Communities are drawn iid until their total vertex count reaches
    ceil(target_n * E[degree]); degrees are drawn iid until their running sum
    covers that count, the final degree is trimmed (kept >= 1), and any
    residual deficit is filled with degree-1 individuals so the two half-edge
    totals balance exactly.
    """
    if target_n < 1:
        raise EmptySupport(f"target_n must be >= 1, got {target_n}")
    if l_pmf.values[0] < 1:
        raise ZeroDegree("degree law must have support in {1, 2, ...}")
    target_h = math.ceil(target_n * l_pmf.mean())

    sizes = np.array([g.n for g, _ in catalog.items], dtype=np.int64)
    mean_size = catalog.mean_size()
    chosen: list[int] = []
    h = 0
    while h < target_h:
        chunk = max(64, int((target_h - h) / mean_size * 1.05) + 1)
        idx = catalog.sample_indices(chunk, rng)
        csum = h + np.cumsum(sizes[idx])
        stop = int(np.searchsorted(csum, target_h))
        take = min(stop + 1, len(idx))
        chosen.extend(idx[:take].tolist())
        h = int(csum[take - 1])

    values = np.array(l_pmf.values, dtype=np.int64)
    probs = np.array(l_pmf.weights)
    degs: list[int] = []
    s = 0
    while s < h:
        chunk = max(64, int((h - s) / l_pmf.mean() * 1.05) + 1)
        draw = rng.choice(values, size=chunk, p=probs)
        csum = s + np.cumsum(draw)
        stop = int(np.searchsorted(csum, h))
        take = min(stop + 1, len(draw))
        degs.extend(draw[:take].tolist())
        s = int(csum[take - 1])
    excess = s - h
    if excess > 0:
        trimmed = max(1, degs[-1] - excess)
        s -= degs[-1] - trimmed
        degs[-1] = trimmed
    # unreachable under iid draws (excess <= last degree - 1), kept as a guard
    degs.extend([1] * (h - s))

    communities = tuple(catalog.items[i][0] for i in chosen)
    return build_params(np.array(degs, dtype=np.int64), communities)


def empirical_l_pmf(params: ModelParams) -> Pmf:
    return Pmf.from_counts(np.bincount(params.l_degrees))


def empirical_catalog(params: ModelParams) -> CommunityCatalog:
    counts: dict = {}
    rep: dict = {}
    for g in params.communities:
        key = catalog_key(g)
        counts[key] = counts.get(key, 0) + 1
        rep.setdefault(key, g)
    total = len(params.communities)
    return CommunityCatalog((rep[k], c / total) for k, c in counts.items())


# -- the bipartite matching ------------------------------------------------------


@dataclass(frozen=True)
class BcmGraph:
    """Uniform bipartite matching realized positionally.

    Half-edge positions follow vertex order: l-half-edge p belongs to
    ``l_owner[p]``, r-half-edge p to ``r_owner[p]``; ``matching[p]`` is the
    r-position paired with l-position p.  Keeping positions makes the edge
    labels (i, l) recoverable, which is what the projection consumes.
    """

    l_degrees: np.ndarray
    r_degrees: np.ndarray
    matching: np.ndarray
    l_owner: np.ndarray = field(repr=False, default=None)
    r_owner: np.ndarray = field(repr=False, default=None)
    r_offsets: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        h = int(self.l_degrees.sum())
        if h != int(self.r_degrees.sum()):
            raise HalfEdgeMismatch("half-edge totals differ")
        m = np.asarray(self.matching)
        if (
            len(m) != h
            or m.min() < 0
            or m.max() >= h
            or np.bincount(m, minlength=h).max() != 1
        ):
            raise InconsistentMatching("matching is not a bijection over half-edges")
        object.__setattr__(self, "l_owner", np.repeat(np.arange(len(self.l_degrees)), self.l_degrees))
        object.__setattr__(self, "r_owner", np.repeat(np.arange(len(self.r_degrees)), self.r_degrees))
        offs = np.zeros(len(self.r_degrees) + 1, dtype=np.int64)
        np.cumsum(self.r_degrees, out=offs[1:])
        object.__setattr__(self, "r_offsets", offs)

    @property
    def n_l(self) -> int:
        return len(self.l_degrees)

    @property
    def n_r(self) -> int:
        return len(self.r_degrees)

    @property
    def half_edges(self) -> int:
        return len(self.matching)

    def inverse_matching(self) -> np.ndarray:
        inv = np.empty_like(self.matching)
        inv[self.matching] = np.arange(len(self.matching))
        return inv

    def edge_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Per matched pair: (l-vertex, r-vertex)."""
        return self.l_owner, self.r_owner[self.matching]


def generate_bcm(params: ModelParams, rng: np.random.Generator) -> BcmGraph:
    """Uniformly random bijection between the two half-edge sets.

    A single uniform permutation of the r-half-edges paired positionally is
    distributed exactly uniformly over all h! matchings.
    """
    h = params.half_edges
    return BcmGraph(
        l_degrees=params.l_degrees,
        r_degrees=params.r_degrees(),
        matching=rng.permutation(h),
    )


# -- the projected multigraph ----------------------------------------------------


@dataclass(frozen=True)
class RigcGraph:
    """Projected multigraph stored as aggregated edge multiplicities (u <= v)."""

    n_vertices: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_mult: np.ndarray

    def multiplicities(self) -> dict[tuple[int, int], int]:
        return {
            (int(u), int(v)): int(m)
            for u, v, m in zip(self.edge_u, self.edge_v, self.edge_mult)
        }

    def total_multiplicity(self) -> int:
        return int(self.edge_mult.sum())

    def projected_degrees(self) -> np.ndarray:
        """Per-vertex degree; a self-loop contributes 2 to its endpoint."""
        deg = np.bincount(self.edge_u, weights=self.edge_mult, minlength=self.n_vertices)
        deg += np.bincount(self.edge_v, weights=self.edge_mult, minlength=self.n_vertices)
        return deg.astype(np.int64)


def _aggregate_edges(n: int, u: np.ndarray, v: np.ndarray, mult: np.ndarray | None = None) -> RigcGraph:
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    code = lo.astype(np.int64) * n + hi
    if mult is None:
        uniq, counts = np.unique(code, return_counts=True)
    else:
        order = np.argsort(code, kind="stable")
        code = code[order]
        m = np.asarray(mult)[order]
        uniq, start = np.unique(code, return_index=True)
        counts = np.add.reduceat(m, start) if len(code) else np.array([], dtype=np.int64)
    return RigcGraph(
        n_vertices=n,
        edge_u=(uniq // n).astype(np.int64),
        edge_v=(uniq % n).astype(np.int64),
        edge_mult=counts.astype(np.int64),
    )


def empty_rigc(n: int) -> RigcGraph:
    z = np.array([], dtype=np.int64)
    return RigcGraph(n_vertices=n, edge_u=z, edge_v=z, edge_mult=z.copy())


def project_rigc(bcm: BcmGraph, communities: Sequence[CommunityGraph]) -> RigcGraph:
    """Copy every community edge onto the individuals holding its endpoint roles.

    Total multiplicity mass equals the total community edge count; one vertex
    holding both endpoint roles yields a self-loop.  Communities are grouped
    by their labeled shape so the transfer is a handful of array gathers.
    """
    r_degrees = bcm.r_degrees
    if len(communities) != len(r_degrees) or any(
        g.n != d for g, d in zip(communities, r_degrees)
    ):
        raise InconsistentMatching("communities do not match the r-degree sequence")
    groups: dict[tuple, list[int]] = {}
    shapes: dict[tuple, CommunityGraph] = {}
    for a, g in enumerate(communities):
        key = (g.n, g.edges)
        groups.setdefault(key, []).append(a)
        shapes.setdefault(key, g)
    chunks_u: list[np.ndarray] = []
    chunks_v: list[np.ndarray] = []
    for key, members in groups.items():
        g = shapes[key]
        if not g.edges:
            continue
        local_u = np.array([u - 1 for u, _ in g.edges], dtype=np.int64)
        local_v = np.array([v - 1 for _, v in g.edges], dtype=np.int64)
        bases = bcm.r_offsets[np.array(members, dtype=np.int64)]
        chunks_u.append((bases[:, None] + local_u[None, :]).ravel())
        chunks_v.append((bases[:, None] + local_v[None, :]).ravel())
    if not chunks_u:
        return empty_rigc(bcm.n_l)
    e1 = np.concatenate(chunks_u)
    e2 = np.concatenate(chunks_v)
    inv = bcm.inverse_matching()
    return _aggregate_edges(bcm.n_l, bcm.l_owner[inv[e1]], bcm.l_owner[inv[e2]])


def contract_to_cm(bcm: BcmGraph) -> RigcGraph:
    """Contract every degree-2 group into a single edge between its members."""
    if not np.all(bcm.r_degrees == 2):
        raise NotTwoRegularRight("contraction needs every r-vertex to have degree 2")
    inv = bcm.inverse_matching()
    first = bcm.r_offsets[:-1]
    u = bcm.l_owner[inv[first]]
    v = bcm.l_owner[inv[first + 1]]
    return _aggregate_edges(bcm.n_l, u, v)
