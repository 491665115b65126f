import numpy as np
import pytest

from rigclab import (
    CommunityCatalog,
    Pmf,
    TheoryInputs,
    build_com_pi,
    build_params,
    canonical_key,
    complete_graph,
    critical_pi,
    critical_pi_bracket,
    generate_bcm,
    giant_prediction,
    giant_stats_rigc,
    harris_sweep,
    mu_pi_limit,
    percolate_rigc_graph,
    percolated_prediction,
    project_rigc,
    sample_params,
    sizebiased_comsize_check,
)
from rigclab.errors import NotSupercritical, OutOfDomain
from conftest import bisect_eta, philox


def k3_rigc(seed=1):
    params = build_params([1, 1, 1], [complete_graph(3)])
    bcm = generate_bcm(params, philox(seed))
    return project_rigc(bcm, params.communities)


def test_percolate_graph_extremes():
    g = k3_rigc()
    rng = philox(2)
    assert percolate_rigc_graph(g, 1.0, rng).multiplicities() == g.multiplicities()
    assert percolate_rigc_graph(g, 0.0, rng).total_multiplicity() == 0
    with pytest.raises(OutOfDomain):
        percolate_rigc_graph(g, 1.5, rng)


def test_percolate_graph_binomial_mean():
    g = k3_rigc()
    rng = philox(3)
    total = sum(percolate_rigc_graph(g, 0.5, rng).total_multiplicity() for _ in range(100_000))
    assert total / 100_000 == pytest.approx(1.5, abs=0.01)


def test_build_com_pi_conserves_roles(k3):
    rng = philox(4)
    communities = [k3] * 200
    pieces = build_com_pi(communities, 0.35, rng)
    assert sum(g.n for g in pieces) == 600
    assert build_com_pi([k3], 1.0, rng) == [k3]
    assert [g.n for g in build_com_pi([k3], 0.0, rng)] == [1, 1, 1]


def test_build_com_pi_type_frequencies(k3, p3, k2, k1):
    rng = philox(5)
    pieces = build_com_pi([k3] * 100_000, 0.5, rng)
    counts: dict = {}
    for g in pieces:
        counts[canonical_key(g)] = counts.get(canonical_key(g), 0) + 1
    total = len(pieces)
    expected = {
        canonical_key(k3): 0.0769231,
        canonical_key(p3): 0.2307692,
        canonical_key(k2): 0.2307692,
        canonical_key(k1): 0.4615385,
    }
    for key, freq in expected.items():
        assert counts[key] / total == pytest.approx(freq, abs=0.01)


def test_mu_pi_limit_exact(k3, p3, k2, k1, cat_estar):
    pc = mu_pi_limit(cat_estar, 0.5)
    weights = {canonical_key(g): w for g, w in pc.catalog_pi.items}
    assert weights[canonical_key(k3)] == pytest.approx(0.0769231, abs=1e-6)
    assert weights[canonical_key(p3)] == pytest.approx(0.2307692, abs=1e-6)
    assert weights[canonical_key(k2)] == pytest.approx(0.2307692, abs=1e-6)
    assert weights[canonical_key(k1)] == pytest.approx(0.4615385, abs=1e-6)
    assert pc.mean_size_pi == pytest.approx(3 / 1.625, abs=1e-10)
    assert sum(w for _, w in pc.catalog_pi.items) == pytest.approx(1.0, abs=1e-10)


def test_mu_pi_limit_extremes(cat_estar, k1):
    full = mu_pi_limit(cat_estar, 1.0)
    assert full.catalog_pi == cat_estar
    assert full.mean_size_pi == pytest.approx(3.0)
    empty = mu_pi_limit(cat_estar, 0.0)
    assert [(g.n, w) for g, w in empty.catalog_pi.items] == [(1, 1.0)]
    assert empty.mean_size_pi == pytest.approx(1.0)


def test_mu_pi_mass_balance(cat_estar):
    # mean percolated size times the expected split count per original
    # community (computed independently from the enumeration profiles)
    # equals the original mean size
    from rigclab import percolate_enumerate

    for pi in (0.2, 0.5, 0.8):
        pc = mu_pi_limit(cat_estar, pi)
        splits = sum(
            w * percolate_enumerate(g, pi).mean_component_count
            for g, w in cat_estar.items
        )
        assert pc.mean_size_pi * splits == pytest.approx(cat_estar.mean_size(), abs=1e-10)


def test_mu_pi_limit_matches_empirical_mixed_catalog(k2, p3):
    # limiting percolated catalog against long-run frequencies of the
    # sampled percolated list, on a catalog with two shapes
    cat = CommunityCatalog([(k2, 0.5), (p3, 0.5)])
    pi = 0.37
    pc = mu_pi_limit(cat, pi)
    rng = philox(47)
    communities = [k2] * 100_000 + [p3] * 100_000
    pieces = build_com_pi(communities, pi, rng)
    counts: dict = {}
    for g in pieces:
        key = canonical_key(g)
        counts[key] = counts.get(key, 0) + 1
    total = len(pieces)
    for g, w in pc.catalog_pi.items:
        assert counts.get(canonical_key(g), 0) / total == pytest.approx(w, abs=0.01)
    emp_mean_size = sum(g.n for g in pieces) / total
    assert emp_mean_size == pytest.approx(pc.mean_size_pi, abs=0.02)


def test_percolated_prediction_reduces_at_one(p_estar, cat_estar, inputs_estar):
    pred_pi = percolated_prediction(p_estar, cat_estar, 1.0)
    pred = giant_prediction(inputs_estar)
    assert pred_pi == pred  # bit-for-bit dataclass equality


def test_percolated_prediction_extremes(p_estar, cat_estar):
    sub = percolated_prediction(p_estar, cat_estar, 0.0)
    assert sub.xi_l == 0.0
    assert not sub.supercritical
    sup = percolated_prediction(p_estar, cat_estar, 0.5)
    assert sup.supercritical
    assert sup.xi_l > 0.0


def test_percolated_prediction_against_oracle(p_estar, cat_estar):
    pc = mu_pi_limit(cat_estar, 0.5)
    inputs = TheoryInputs.from_p_catalog(p_estar, pc.catalog_pi)
    assert percolated_prediction(p_estar, cat_estar, 0.5).eta_l == pytest.approx(
        bisect_eta(inputs), abs=1e-9
    )


def test_critical_pi_reference(p_estar, cat_estar):
    # oracle: root of 3(pi + pi^2 - pi^3) = 1 by bisection on the closed form
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if 3 * (mid + mid**2 - mid**3) <= 1.0:
            lo = mid
        else:
            hi = mid
    oracle = 0.5 * (lo + hi)
    assert oracle == pytest.approx(0.27765, abs=1e-4)
    assert critical_pi(p_estar, cat_estar, 1e-6) == pytest.approx(oracle, abs=1e-4)


def test_critical_pi_single_edge_community(p_estar, k2):
    cat = CommunityCatalog([(k2, 1.0)])
    assert critical_pi(p_estar, cat, 1e-6) == pytest.approx(2.0 / 3.0, abs=1e-4)


def test_critical_pi_requires_supercritical(k2):
    with pytest.raises(NotSupercritical):
        critical_pi(Pmf({1: 1.0}), CommunityCatalog([(k2, 1.0)]), 1e-4)


def test_critical_pi_bracket_contains_root(p_estar, cat_estar):
    lo, hi = critical_pi_bracket(p_estar, cat_estar, 1e-5)
    assert hi - lo <= 1e-5
    assert lo <= 0.2776482755 <= hi


def test_supercriticality_gap_monotone(p_estar):
    from rigclab.percolation import _supercriticality_gap

    rng = np.random.default_rng(41)
    cats = [
        CommunityCatalog([(complete_graph(3), 1.0)]),
        CommunityCatalog([(complete_graph(2), 0.5), (complete_graph(4), 0.5)]),
    ]
    ptm = p_estar.size_bias().shift_down_one().mean()
    for cat in cats:
        grid = np.linspace(0.0, 1.0, 11)
        vals = [_supercriticality_gap(ptm, cat, float(pi)) for pi in grid]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_harris_sweep_monotone_and_endpoints(p_estar, cat_estar):
    params = sample_params(p_estar, cat_estar, 3_000, philox(42))
    rigc = project_rigc(generate_bcm(params, philox(42, 0, 1)), params.communities)
    grid = np.linspace(0.0, 1.0, 11).tolist()
    stats = harris_sweep(rigc, grid, philox(42, 0, 2), params)
    c1 = [s.c1_fraction for s in stats]
    assert all(b >= a - 1e-12 for a, b in zip(c1, c1[1:]))
    assert stats[0].edges_in_giant_per_N == 0.0
    assert stats[-1].c1_fraction == pytest.approx(
        giant_stats_rigc(rigc, params).c1_fraction
    )


def test_harris_sweep_grid_validation(p_estar, cat_estar):
    params = sample_params(p_estar, cat_estar, 50, philox(43))
    rigc = project_rigc(generate_bcm(params, philox(43, 0, 1)), params.communities)
    with pytest.raises(OutOfDomain):
        harris_sweep(rigc, [0.5, 0.2], philox(43, 0, 2))


def test_sizebiased_check_trivial(k3):
    report = sizebiased_comsize_check([k3] * 50, 1.0, philox(44), 500)
    assert report.tv_distance == pytest.approx(0.0, abs=1e-12)
    assert report.law_from_catalog == {2: 1.0}
    report0 = sizebiased_comsize_check([k3] * 50, 0.0, philox(45), 500)
    assert report0.tv_distance == pytest.approx(0.0, abs=1e-12)
    assert report0.law_from_catalog == {0: 1.0}


def test_sizebiased_check_half(k3):
    report = sizebiased_comsize_check([k3] * 10_000, 0.5, philox(46), 100_000)
    assert report.tv_distance < 0.02
    # exact law of the root component size minus one at pi = 1/2
    exact = {0: 0.25, 1: 0.25, 2: 0.5}
    for k, v in exact.items():
        assert report.law_from_roles.get(k, 0.0) == pytest.approx(v, abs=0.02)
