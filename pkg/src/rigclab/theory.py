"""Closed-form predictions from the degree law and the community catalog.

Everything funnels through one fixed point: the extinction probability of the
two-stage offspring law obtained by size-biasing both sides of the bipartite
structure.  From it follow the giant fractions on each side, the in-giant
joint degree law, the two edge-count formulas, the exploration limit curves,
and a branching-process simulator used as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .community import CommunityCatalog
from .errors import ExcludedRegime, NonConvergence, NotSupercritical, OutOfDomain
from .pmf import Pmf, convolve_power

#: fixed-point iteration stops when the increment drops below this
FIXED_POINT_INCREMENT = 1e-13
FIXED_POINT_MAX_ITER = 10**6
#: the almost-2-regular input regime is rejected within this tolerance
EXCLUDED_REGIME_TOL = 1e-12


@dataclass(frozen=True)
class TheoryInputs:
    """Degree law plus catalog, with the tilted laws every formula needs."""

    p: Pmf
    catalog: CommunityCatalog
    q: Pmf
    rho: Pmf
    p_tilde: Pmf
    q_tilde: Pmf
    gamma: float

    @classmethod
    def from_p_catalog(cls, p: Pmf, catalog: CommunityCatalog) -> "TheoryInputs":
        q = catalog.size_pmf()
        return cls(
            p=p,
            catalog=catalog,
            q=q,
            rho=catalog.cdeg_pmf(),
            p_tilde=p.size_bias().shift_down_one(),
            q_tilde=q.size_bias().shift_down_one(),
            gamma=p.mean() / q.mean(),
        )


@dataclass(frozen=True)
class GiantPrediction:
    eta_l: float
    eta_r: float
    xi_l: float
    xi_r: float
    supercritical: bool
    criticality_value: float

    def as_dict(self) -> dict:
        return {
            "eta_l": self.eta_l,
            "eta_r": self.eta_r,
            "xi_l": self.xi_l,
            "xi_r": self.xi_r,
            "supercritical": self.supercritical,
            "criticality_value": self.criticality_value,
        }


def solve_eta_l(inputs: TheoryInputs) -> float:
    """Smallest fixed point of the composed tilted PGFs, iterated up from 0.

    The composition is itself a PGF (of the grandchild offspring count), so
    iteration from 0 increases monotonically to the smallest fixed point.
    Whenever the mean grandchild count is at most one, that fixed point is
    exactly 1 and is returned as such; the almost-2-regular regime, where the
    largest component is not concentrated, is rejected outright.
    """
    p2q2 = inputs.p.prob(2) + inputs.q.prob(2)
    if p2q2 >= 2.0 - EXCLUDED_REGIME_TOL:
        raise ExcludedRegime(
            "both degree laws are (almost surely) 2: largest component not concentrated"
        )
    if inputs.p_tilde.mean() * inputs.q_tilde.mean() <= 1.0:
        return 1.0
    eta = 0.0
    for _ in range(FIXED_POINT_MAX_ITER):
        nxt = inputs.q_tilde.gf_eval(inputs.p_tilde.gf_eval(eta))
        if nxt - eta < FIXED_POINT_INCREMENT:
            return nxt
        eta = nxt
    raise NonConvergence("fixed-point iteration did not converge")


def giant_prediction(inputs: TheoryInputs) -> GiantPrediction:
    eta_l = solve_eta_l(inputs)
    criticality = inputs.p_tilde.mean() * inputs.q_tilde.mean()
    if criticality <= 1.0:
        # no giant: extinction is certain and the survival fractions vanish
        return GiantPrediction(
            eta_l=1.0,
            eta_r=1.0,
            xi_l=0.0,
            xi_r=0.0,
            supercritical=False,
            criticality_value=criticality,
        )
    eta_r = inputs.p_tilde.gf_eval(eta_l)
    return GiantPrediction(
        eta_l=eta_l,
        eta_r=eta_r,
        xi_l=1.0 - inputs.p.gf_eval(eta_l),
        xi_r=1.0 - inputs.q.gf_eval(eta_r),
        supercritical=True,
        criticality_value=criticality,
    )


# -- in-giant joint degree law -----------------------------------------------


def _extinct_role_weights(inputs: TheoryInputs, eta_r: float) -> dict[int, float]:
    """Sub-probability weights of one community role's within-community degree,
    discounted by the chance that the rest of its community dies out."""
    er = inputs.q.mean()
    w: dict[int, float] = {}
    for g, mu in inputs.catalog.items:
        discount = eta_r ** (g.n - 1)
        for c, count in g.degree_census().items():
            w[c] = w.get(c, 0.0) + count * mu * discount / er
    return w


def joint_degree_in_giant(
    inputs: TheoryInputs, prediction: GiantPrediction, k: int, d: int
) -> float:
    """Limiting fraction of vertices with k memberships and degree d in the giant.

    Exact algebraic factorization: the survival discount factorizes over the
    k communities, so the double sum collapses to a difference of k-fold
    convolutions (full role-degree law minus the discounted one).
    """
    if not prediction.supercritical:
        raise NotSupercritical("in-giant degree law needs a giant component")
    pk = inputs.p.prob(k)
    if pk == 0.0 or k < 1:
        return 0.0
    full = convolve_power(inputs.rho, k)
    dead = convolve_power(_extinct_role_weights(inputs, prediction.eta_r), k)
    return pk * (full.get(d, 0.0) - dead.get(d, 0.0))


def joint_degree_in_giant_table(
    inputs: TheoryInputs, prediction: GiantPrediction, d_max: int
) -> dict[tuple[int, int], float]:
    """All (k, d) values with d <= d_max in one pass over the support of p."""
    if not prediction.supercritical:
        raise NotSupercritical("in-giant degree law needs a giant component")
    dead_base = _extinct_role_weights(inputs, prediction.eta_r)
    table: dict[tuple[int, int], float] = {}
    for k, pk in zip(inputs.p.values, inputs.p.weights):
        full = convolve_power(inputs.rho, k)
        dead = convolve_power(dead_base, k)
        for d in range(0, d_max + 1):
            a = pk * (full.get(d, 0.0) - dead.get(d, 0.0))
            if a != 0.0:
                table[(k, d)] = a
    return table


def default_truncation(inputs: TheoryInputs) -> int:
    """Degree cutoff covering the whole joint law.

    Finite catalogs and a finite membership law make the joint support
    finite, so the cutoff is exact and the truncation tail is zero.
    """
    return max(inputs.p.values) * max(inputs.rho.values)


def edges_in_giant_rigc(inputs: TheoryInputs, prediction: GiantPrediction) -> float:
    """Edges per individual in the giant, via the community-edge formula."""
    if not prediction.supercritical:
        raise NotSupercritical("edge count needs a giant component")
    acc = sum(
        mu * g.edge_count * (1.0 - prediction.eta_r**g.n)
        for g, mu in inputs.catalog.items
    )
    return inputs.gamma * acc


def edges_in_giant_from_joint(
    inputs: TheoryInputs, prediction: GiantPrediction, d_max: int
) -> float:
    """Edges per individual in the giant, summed from the joint degree law.

    Agrees with ``edges_in_giant_rigc`` up to the (geometrically small)
    truncation tail; the identity of the two routes is a theory invariant.
    """
    table = joint_degree_in_giant_table(inputs, prediction, d_max)
    return 0.5 * sum(d * a for (_, d), a in table.items())


# -- the bipartite giant -------------------------------------------------------


@dataclass(frozen=True)
class BcmPrediction:
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


def bcm_predictions(inputs: TheoryInputs, prediction: GiantPrediction) -> BcmPrediction:
    if not prediction.supercritical:
        raise NotSupercritical("bipartite giant law needs a giant component")
    eta_l, eta_r = prediction.eta_l, prediction.eta_r
    return BcmPrediction(
        lhs_fraction=prediction.xi_l,
        rhs_fraction=prediction.xi_r,
        lhs_degk={k: w * (1.0 - eta_l**k) for k, w in zip(inputs.p.values, inputs.p.weights)},
        rhs_degk={k: w * (1.0 - eta_r**k) for k, w in zip(inputs.q.values, inputs.q.weights)},
        edges_per_N=inputs.p.mean() * (1.0 - eta_l * eta_r),
        combined_fraction=(prediction.xi_l + inputs.gamma * prediction.xi_r)
        / (1.0 + inputs.gamma),
    )


# -- exploration limit curves ----------------------------------------------------


def q_tilde_zero(inputs: TheoryInputs) -> float:
    """Mass the tilted community-size law puts at zero (domain edge of the
    living-half-edge curve)."""
    return inputs.q_tilde.prob(0)


def sleeping_halfedge_curve(inputs: TheoryInputs, z: float) -> float:
    """Limit of sleeping half-edges per individual at z = e^(-t)."""
    if not 0.0 <= z <= 1.0:
        raise OutOfDomain(f"z={z} outside [0, 1]")
    return inputs.p.mean() * z * inputs.p_tilde.gf_eval(z)


def living_halfedge_curve(inputs: TheoryInputs, z: float) -> float:
    """Limit of living (unmatched) half-edges per individual at z = e^(-t).

    Defined on [q1/E[Dr], 1]; the inverse tilted PGF drives the curve because
    group discoveries remove half-edges instantaneously.
    """
    q0 = q_tilde_zero(inputs)
    if not q0 <= z <= 1.0:
        raise OutOfDomain(f"z={z} outside [{q0}, 1]")
    return inputs.p.mean() * z * inputs.q_tilde.gf_inverse(z)


def active_halfedge_curve(inputs: TheoryInputs, z: float) -> float:
    """Living minus sleeping: the drift of active half-edges (signed)."""
    return living_halfedge_curve(inputs, z) - sleeping_halfedge_curve(inputs, z)


def hitting_time_curve(inputs: TheoryInputs, c: float) -> float:
    """Limit of the time at which the living fraction first drops to c."""
    if not 0.0 < c <= 1.0:
        raise OutOfDomain(f"c={c} outside (0, 1]")
    q_star = inputs.q.size_bias()
    return -math.log(c) + math.log(q_star.gf_inverse(c))


def curve_table(inputs: TheoryInputs, z: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorized limit curves on a z grid (restricted to the valid domain)."""
    z = np.asarray(z, dtype=float)
    q0 = q_tilde_zero(inputs)
    if z.size and (z.min() < q0 or z.max() > 1.0):
        raise OutOfDomain(f"grid must lie in [{q0}, 1]")
    mean_p = inputs.p.mean()
    sleeping = mean_p * z * inputs.p_tilde.gf_eval_many(z)
    living = mean_p * z * inputs.q_tilde.gf_inverse_many(z)
    return {"z": z, "sleeping": sleeping, "living": living, "active": living - sleeping}


# -- branching-process cross-check -------------------------------------------


def bp_survival_sim(
    inputs: TheoryInputs,
    side: str,
    replicas: int,
    generation_cap: int,
    size_cap: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Survival frequency of the alternating branching process, with stderr.

    Root offspring follows the plain degree law of the chosen side; later
    generations alternate between the two tilted laws.  A replica survives if
    it is still alive at the generation cap or its total progeny reaches the
    size cap.  Offspring sums are drawn as multinomials over the pmf support,
    so each generation costs O(support), not O(population).
    """
    if side not in ("l", "r"):
        raise OutOfDomain(f"side must be 'l' or 'r', got {side!r}")
    if generation_cap < 1 or size_cap < 1:
        raise OutOfDomain("caps must be >= 1")
    if side == "l":
        root, even, odd = inputs.p, inputs.p_tilde, inputs.q_tilde
    else:
        root, even, odd = inputs.q, inputs.q_tilde, inputs.p_tilde

    root_vals = np.array(root.values)
    alive = rng.choice(root_vals, size=replicas, p=np.array(root.weights)).astype(np.int64)
    total = 1 + alive
    survived = np.zeros(replicas, dtype=bool)
    undecided = alive > 0

    laws = []
    for law in (odd, even):
        laws.append((np.array(law.values, dtype=np.int64), np.array(law.weights)))

    for gen in range(1, generation_cap + 1):
        hit_cap = undecided & (total >= size_cap)
        survived |= hit_cap
        undecided &= ~hit_cap
        idx = np.flatnonzero(undecided)
        if len(idx) == 0:
            break
        values, probs = laws[(gen - 1) % 2]
        counts = rng.multinomial(alive[idx], probs)
        children = counts @ values
        alive[idx] = children
        total[idx] += children
        died = np.zeros(replicas, dtype=bool)
        died[idx] = children == 0
        undecided &= ~died
    survived |= undecided  # alive at the generation cap

    frac = float(survived.sum()) / replicas
    stderr = math.sqrt(max(frac * (1.0 - frac), 0.0) / replicas)
    return frac, stderr
