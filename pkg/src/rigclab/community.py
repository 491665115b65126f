"""Community graphs, frequency catalogs, and exact one-community percolation.

A community is a simple, finite, connected, labeled graph.  Catalogs carry a
frequency weight per isomorphism class and induce the size law, the
vertex-weighted within-community degree law, and the mean edge count that the
closed-form predictions consume.
"""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySupport,
    NegativeWeight,
    NotNormalized,
    OutOfDomain,
    TooLargeForExactIsomorphism,
    TooManyEdges,
)
from .pmf import WEIGHT_SUM_TOL, Pmf

#: exact isomorphism by permutation minimization is capped at this many vertices
EXACT_ISO_MAX_VERTICES = 8
#: exhaustive percolation enumerates 2^|E| edge subsets up to this |E|
ENUM_MAX_EDGES = 22


class CommunityGraph:
    """Simple connected graph on vertices labeled 1..n."""

    __slots__ = ("n", "edges")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 1:
            raise OutOfDomain(f"need at least one vertex, got n={n}")
        norm = set()
        for u, v in edges:
            if u == v:
                raise OutOfDomain(f"self-loop at {u}")
            if not (1 <= u <= n and 1 <= v <= n):
                raise OutOfDomain(f"edge ({u}, {v}) outside 1..{n}")
            key = (u, v) if u < v else (v, u)
            if key in norm:
                raise OutOfDomain(f"duplicate edge {key}")
            norm.add(key)
        self.n = n
        self.edges = tuple(sorted(norm))
        if not _is_connected(n, self.edges):
            raise OutOfDomain("community graphs must be connected")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * (self.n + 1)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg[1:]

    def degree_census(self) -> dict[int, int]:
        """Map degree value c to the number of vertices with that degree."""
        census: dict[int, int] = {}
        for d in self.degrees():
            census[d] = census.get(d, 0) + 1
        return census

    def relabel(self, perm: Sequence[int]) -> "CommunityGraph":
        """Relabel via perm, where perm[old - 1] = new label."""
        return CommunityGraph(
            self.n, [(perm[u - 1], perm[v - 1]) for u, v in self.edges]
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CommunityGraph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"CommunityGraph(n={self.n}, edges={list(self.edges)})"

    def to_json_obj(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "CommunityGraph":
        return cls(int(obj["n"]), [(int(u), int(v)) for u, v in obj["edges"]])


def complete_graph(n: int) -> CommunityGraph:
    return CommunityGraph(n, itertools.combinations(range(1, n + 1), 2))


def path_graph(n: int) -> CommunityGraph:
    return CommunityGraph(n, [(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> CommunityGraph:
    if n < 3:
        raise OutOfDomain("cycles need at least 3 vertices")
    return CommunityGraph(n, [(i, i + 1) for i in range(1, n)] + [(1, n)])


def _is_connected(n: int, edges: Sequence[tuple[int, int]]) -> bool:
    if n == 1:
        return True
    adj: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {1}
    stack = [1]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


# -- canonical keys -----------------------------------------------------------

_canonical_cache: dict[tuple[int, tuple], tuple] = {}


def canonical_key(graph: CommunityGraph):
    """Opaque key equal across graphs iff they are isomorphic.

    Brute force: minimize the relabeled edge tuple over all n! vertex
    permutations.  Exact mode is capped at n = 8.
    """
    if graph.n > EXACT_ISO_MAX_VERTICES:
        raise TooLargeForExactIsomorphism(
            f"exact isomorphism capped at n={EXACT_ISO_MAX_VERTICES}, got n={graph.n}"
        )
    cache_key = (graph.n, graph.edges)
    hit = _canonical_cache.get(cache_key)
    if hit is not None:
        return hit
    best = None
    for perm in itertools.permutations(range(1, graph.n + 1)):
        mapped = tuple(
            sorted(
                (perm[u - 1], perm[v - 1]) if perm[u - 1] < perm[v - 1] else (perm[v - 1], perm[u - 1])
                for u, v in graph.edges
            )
        )
        if best is None or mapped < best:
            best = mapped
    key = (graph.n, best)
    _canonical_cache[cache_key] = key
    return key


def canonical_form(graph: CommunityGraph) -> CommunityGraph:
    """Canonical representative of the isomorphism class."""
    n, edges = canonical_key(graph)
    return CommunityGraph(n, edges)


def catalog_key(graph: CommunityGraph):
    """Key used to group graphs in catalogs.

    Exact (canonical) below the isomorphism cap; above it, the coarser
    (n, sorted degree sequence, |E|) key, which can conflate rare
    non-isomorphic shapes of equal census (documented collision caveat).
    """
    if graph.n <= EXACT_ISO_MAX_VERTICES:
        return canonical_key(graph)
    return ("census", graph.n, tuple(sorted(graph.degrees())), graph.edge_count)


# -- catalogs ------------------------------------------------------------------

class CommunityCatalog:
    """Frequency-weighted collection of community graphs.

    One item per isomorphism class (grouped by ``catalog_key``); weights are
    strictly positive and sum to 1 within tolerance.
    """

    __slots__ = ("items", "_index")

    def __init__(self, items: Iterable[tuple[CommunityGraph, float]]):
        merged: dict = {}
        order: list = []
        for graph, weight in items:
            w = float(weight)
            if w < 0.0:
                raise NegativeWeight(f"catalog weight {w}")
            if w == 0.0:
                continue
            key = catalog_key(graph)
            if key in merged:
                raise NotNormalized(f"two catalog items share the canonical key {key}")
            merged[key] = (graph, w)
            order.append(key)
        if not merged:
            raise EmptySupport("catalog needs at least one weighted community")
        total = sum(w for _, w in merged.values())
        if abs(total - 1.0) > WEIGHT_SUM_TOL * 10:
            raise NotNormalized(f"catalog weights sum to {total!r}, not 1")
        self.items = tuple((merged[k][0], merged[k][1] / total) for k in order)
        self._index = {k: i for i, k in enumerate(order)}

    def weight_of(self, graph: CommunityGraph) -> float:
        i = self._index.get(catalog_key(graph))
        return self.items[i][1] if i is not None else 0.0

    def size_pmf(self) -> Pmf:
        """Community-size law q (one draw = one community, uniformly)."""
        acc: dict[int, float] = {}
        for g, w in self.items:
            acc[g.n] = acc.get(g.n, 0.0) + w
        return Pmf(acc)

    def cdeg_pmf(self) -> Pmf:
        """Within-community degree law of a uniform community role.

        Vertex-weighted: each graph contributes its degree census scaled by
        its frequency, normalized by the mean community size.
        """
        mean_size = self.mean_size()
        acc: dict[int, float] = {}
        for g, w in self.items:
            for c, count in g.degree_census().items():
                acc[c] = acc.get(c, 0.0) + count * w / mean_size
        return Pmf(acc)

    def mean_size(self) -> float:
        return sum(g.n * w for g, w in self.items)

    def mean_edges(self) -> float:
        return sum(g.edge_count * w for g, w in self.items)

    def sample_indices(self, count: int, rng: np.random.Generator) -> np.ndarray:
        probs = np.array([w for _, w in self.items])
        return rng.choice(len(self.items), size=count, p=probs)

    def __len__(self) -> int:
        return len(self.items)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CommunityCatalog):
            return NotImplemented
        return {catalog_key(g): w for g, w in self.items} == {
            catalog_key(g): w for g, w in other.items
        }

    def to_json_obj(self) -> list:
        return [{"graph": g.to_json_obj(), "weight": w} for g, w in self.items]

    @classmethod
    def from_json_obj(cls, obj: list) -> "CommunityCatalog":
        return cls(
            (CommunityGraph.from_json_obj(it["graph"]), float(it["weight"])) for it in obj
        )


# -- percolation on one community ----------------------------------------------

@dataclass(frozen=True)
class PercolationProfile:
    """Exact law of bond percolation on one community graph.

    ``outcomes`` maps the sorted tuple of component keys to its probability;
    ``components_by_key`` carries a canonical representative per key.
    """

    pi: float
    outcomes: tuple[tuple[tuple, float], ...]
    components_by_key: Mapping[tuple, CommunityGraph]
    mean_root_component_minus_one: float
    mean_component_count: float


def split_components(n: int, edges: Sequence[tuple[int, int]]) -> list[CommunityGraph]:
    """Connected components as fresh community graphs.

    Component vertices are renumbered 1..m preserving the original label
    order, so the output is deterministic for canonicalization.
    """
    parent = list(range(n + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[int, list[int]] = {}
    for v in range(1, n + 1):
        groups.setdefault(find(v), []).append(v)
    out = []
    for members in sorted(groups.values()):
        rank = {old: i + 1 for i, old in enumerate(members)}
        sub = [(rank[u], rank[v]) for u, v in edges if u in rank and v in rank]
        out.append(CommunityGraph(len(members), sub))
    return out


class _SubsetCensus:
    """One-pass enumeration of all 2^|E| edge subsets of a community graph.

    Per kept-edge count k it accumulates, for each distinct outcome (multiset
    of component keys), the number of subsets producing it, plus the sums
    needed for the mean root-component size and the mean component count.
    Evaluating the profile at any retention probability is then just a
    binomial-weight contraction.
    """

    __slots__ = ("m", "outcome_counts", "components_by_key", "root_sum", "count_sum")

    def __init__(self, graph: CommunityGraph):
        m = graph.edge_count
        if m > ENUM_MAX_EDGES:
            raise TooManyEdges(f"enumeration capped at |E|={ENUM_MAX_EDGES}, got {m}")
        self.m = m
        self.outcome_counts: dict[tuple, np.ndarray] = {}
        self.components_by_key: dict[tuple, CommunityGraph] = {}
        self.root_sum = np.zeros(m + 1)
        self.count_sum = np.zeros(m + 1)
        edges = graph.edges
        n = graph.n
        for mask in range(1 << m):
            kept = [edges[i] for i in range(m) if mask >> i & 1]
            k = len(kept)
            comps = split_components(n, kept)
            keys = []
            for comp in comps:
                ck = catalog_key(comp)
                keys.append(ck)
                if ck not in self.components_by_key:
                    self.components_by_key[ck] = (
                        canonical_form(comp) if comp.n <= EXACT_ISO_MAX_VERTICES else comp
                    )
            outcome = tuple(sorted(keys))
            counts = self.outcome_counts.get(outcome)
            if counts is None:
                counts = self.outcome_counts[outcome] = np.zeros(m + 1)
            counts[k] += 1.0
            self.root_sum[k] += sum(c.n * (c.n - 1) for c in comps) / n
            self.count_sum[k] += len(comps)

    def weights(self, pi: float) -> np.ndarray:
        k = np.arange(self.m + 1)
        with np.errstate(invalid="ignore"):
            w = pi**k * (1.0 - pi) ** (self.m - k)
        return w


_census_cache: dict[tuple[int, tuple], _SubsetCensus] = {}


def _subset_census(graph: CommunityGraph) -> _SubsetCensus:
    key = (graph.n, graph.edges)
    census = _census_cache.get(key)
    if census is None:
        census = _census_cache[key] = _SubsetCensus(graph)
    return census


def percolate_enumerate(graph: CommunityGraph, pi: float) -> PercolationProfile:
    """Exact percolation outcome law over all 2^|E| edge subsets."""
    if not 0.0 <= pi <= 1.0:
        raise OutOfDomain(f"pi={pi} outside [0, 1]")
    census = _subset_census(graph)
    w = census.weights(pi)
    outcomes = []
    for outcome, counts in census.outcome_counts.items():
        p = float(counts @ w)
        if p > 0.0:
            outcomes.append((outcome, p))
    outcomes.sort()
    return PercolationProfile(
        pi=pi,
        outcomes=tuple(outcomes),
        components_by_key=dict(census.components_by_key),
        mean_root_component_minus_one=float(census.root_sum @ w),
        mean_component_count=float(census.count_sum @ w),
    )


def percolate_sample(
    graph: CommunityGraph, pi: float, rng: np.random.Generator
) -> list[CommunityGraph]:
    """Keep each edge independently with probability pi; split components."""
    if pi >= 1.0:
        kept = graph.edges
    elif pi <= 0.0:
        kept = ()
    else:
        mask = rng.random(graph.edge_count) < pi
        kept = tuple(e for e, keep in zip(graph.edges, mask) if keep)
    return split_components(graph.n, kept)
