"""Connected components and empirical giant-component statistics.

Largest components are ranked the two ways the theory predicts them: by
individual count for the projected graph, by total vertex count for the
bipartite graph.  Ties break at the lowest contained vertex id so reruns are
reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .model import BcmGraph, ModelParams, RigcGraph


def _labels(n: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if len(u) == 0:
        return np.arange(n, dtype=np.int64)
    data = np.ones(len(u), dtype=np.int8)
    m = coo_matrix((data, (u, v)), shape=(n, n))
    _, labels = _cc(m, directed=False)
    return labels.astype(np.int64)


def rigc_components(graph: RigcGraph) -> np.ndarray:
    """Component label per vertex; self-loops ignored, multi-edges counted once."""
    keep = graph.edge_u != graph.edge_v
    return _labels(graph.n_vertices, graph.edge_u[keep], graph.edge_v[keep])


def bcm_components(bcm: BcmGraph) -> np.ndarray:
    """Labels over the union of partitions: l-vertex v is v, r-vertex a is n_l + a."""
    lv, rv = bcm.edge_endpoints()
    return _labels(bcm.n_l + bcm.n_r, lv, bcm.n_l + rv)


def _largest_label(labels: np.ndarray, sizes: np.ndarray) -> int:
    """Label of the largest component; ties go to the lowest vertex id."""
    best = sizes.max()
    tied = np.flatnonzero(sizes == best)
    if len(tied) == 1:
        return int(tied[0])
    tied_set = set(tied.tolist())
    for lab in labels:
        if int(lab) in tied_set:
            return int(lab)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class GiantStats:
    n_vertices: int
    c1_fraction: float
    c2_fraction: float
    joint_in_giant: dict[tuple[int, int], float]
    edges_in_giant_per_N: float

    def as_dict(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "c1_fraction": self.c1_fraction,
            "c2_fraction": self.c2_fraction,
            "edges_in_giant_per_N": self.edges_in_giant_per_N,
        }


@dataclass(frozen=True)
class BcmGiantStats:
    lhs_fraction: float
    rhs_fraction: float
    lhs_degk: dict[int, float]
    rhs_degk: dict[int, float]
    edges_per_N: float
    combined_fraction: float

    def as_dict(self) -> dict:
        return {
            "bcm_lhs_fraction": self.lhs_fraction,
            "bcm_rhs_fraction": self.rhs_fraction,
            "bcm_edges_per_N": self.edges_per_N,
            "bcm_combined_fraction": self.combined_fraction,
        }


def giant_stats_rigc(
    graph: RigcGraph,
    params: ModelParams | None = None,
    labels: np.ndarray | None = None,
) -> GiantStats:
    """Largest-component statistics of the projected graph.

    ``joint_in_giant`` maps (membership count, projected degree) to the
    fraction of all vertices carrying those values inside the giant; it needs
    the generating parameters and stays empty without them.
    """
    if labels is None:
        labels = rigc_components(graph)
    n = graph.n_vertices
    sizes = np.bincount(labels)
    giant = _largest_label(labels, sizes)
    c1 = int(sizes[giant])
    c2 = int(np.sort(sizes)[-2]) if len(sizes) > 1 else 0

    joint: dict[tuple[int, int], float] = {}
    if params is not None:
        mask = labels == giant
        pdeg = graph.projected_degrees()
        ks = np.asarray(params.l_degrees)[mask]
        ds = pdeg[mask]
        pairs, counts = np.unique(np.stack([ks, ds]), axis=1, return_counts=True)
        joint = {
            (int(k), int(d)): int(c) / n
            for k, d, c in zip(pairs[0], pairs[1], counts)
        }

    in_giant = labels[graph.edge_u] == giant
    edges = float(graph.edge_mult[in_giant].sum())
    return GiantStats(
        n_vertices=n,
        c1_fraction=c1 / n,
        c2_fraction=c2 / n,
        joint_in_giant=joint,
        edges_in_giant_per_N=edges / n,
    )


def giant_stats_bcm(bcm: BcmGraph, labels: np.ndarray | None = None) -> BcmGiantStats:
    """Largest-component statistics of the bipartite graph (ranked by total size)."""
    if labels is None:
        labels = bcm_components(bcm)
    n, m = bcm.n_l, bcm.n_r
    sizes = np.bincount(labels)
    giant = _largest_label(labels, sizes)

    l_mask = labels[:n] == giant
    r_mask = labels[n:] == giant
    lhs_k = bcm.l_degrees[l_mask]
    rhs_k = bcm.r_degrees[r_mask]
    lhs_degk = {int(k): int(c) / n for k, c in zip(*np.unique(lhs_k, return_counts=True))}
    rhs_degk = {int(k): int(c) / m for k, c in zip(*np.unique(rhs_k, return_counts=True))}

    lv, _ = bcm.edge_endpoints()
    edges = int(np.count_nonzero(labels[lv] == giant))
    return BcmGiantStats(
        lhs_fraction=int(l_mask.sum()) / n,
        rhs_fraction=int(r_mask.sum()) / m,
        lhs_degk=lhs_degk,
        rhs_degk=rhs_degk,
        edges_per_N=edges / n,
        combined_fraction=int(sizes[giant]) / (n + m),
    )
