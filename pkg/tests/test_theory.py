import itertools
import math

import numpy as np
import pytest

from rigclab import (
    CommunityCatalog,
    CommunityGraph,
    Pmf,
    TheoryInputs,
    active_halfedge_curve,
    bcm_predictions,
    bp_survival_sim,
    complete_graph,
    curve_table,
    edges_in_giant_from_joint,
    edges_in_giant_rigc,
    giant_prediction,
    hitting_time_curve,
    joint_degree_in_giant,
    joint_degree_in_giant_table,
    living_halfedge_curve,
    path_graph,
    sleeping_halfedge_curve,
    solve_eta_l,
)
from rigclab.errors import ExcludedRegime, NotSupercritical, OutOfDomain
from rigclab.theory import default_truncation
from conftest import bisect_eta, philox


def make_inputs(p_entries, catalog_items):
    return TheoryInputs.from_p_catalog(Pmf(p_entries), CommunityCatalog(catalog_items))


def literal_joint_in_giant(inputs, prediction, k, d):
    """Direct evaluation over community tuples and degree compositions.

    Exponential in k; used as the oracle for the factorized convolution on
    small catalogs.
    """
    er = inputs.q.mean()
    total = 0.0
    for combo in itertools.product(inputs.catalog.items, repeat=k):
        discount = 1.0 - prediction.eta_r ** sum(g.n - 1 for g, _ in combo)

        def comp_sum(i, rem):
            if i == k:
                return 1.0 if rem == 0 else 0.0
            g, mu = combo[i]
            acc = 0.0
            for c, count in g.degree_census().items():
                if c <= rem:
                    acc += count * mu / er * comp_sum(i + 1, rem - c)
            return acc

        total += discount * comp_sum(0, d)
    return inputs.p.prob(k) * total


def test_solver_matches_bisection_oracle(inputs_estar):
    eta = solve_eta_l(inputs_estar)
    oracle = bisect_eta(inputs_estar)
    assert abs(eta - oracle) < 1e-10
    assert eta == pytest.approx(0.0640478, abs=1e-6)
    # fixed-point residual
    resid = eta - inputs_estar.q_tilde.gf_eval(inputs_estar.p_tilde.gf_eval(eta))
    assert abs(resid) < 1e-10


def test_solver_matches_bisection_on_random_inputs():
    rng = np.random.default_rng(31)
    graphs = [complete_graph(2), complete_graph(3), path_graph(3), path_graph(4)]
    for _ in range(20):
        w = rng.random(2) + 0.05
        w /= w.sum()
        p = Pmf({1: w[0], int(rng.integers(2, 6)): w[1]})
        wc = rng.random(2) + 0.05
        wc /= wc.sum()
        ga, gb = rng.choice(len(graphs), size=2, replace=False)
        inputs = TheoryInputs.from_p_catalog(
            p, CommunityCatalog([(graphs[ga], wc[0]), (graphs[gb], wc[1])])
        )
        eta = solve_eta_l(inputs)
        assert abs(eta - bisect_eta(inputs)) < 1e-9
        resid = eta - inputs.q_tilde.gf_eval(inputs.p_tilde.gf_eval(eta))
        assert abs(resid) < 1e-10


def test_degenerate_subcritical():
    inputs = make_inputs({1: 1.0}, [(complete_graph(3), 1.0)])
    assert solve_eta_l(inputs) == pytest.approx(1.0, abs=1e-12)
    pred = giant_prediction(inputs)
    assert not pred.supercritical
    assert pred.xi_l == pytest.approx(0.0, abs=1e-12)


def test_excluded_regime():
    inputs = make_inputs({2: 1.0}, [(complete_graph(2), 1.0)])
    with pytest.raises(ExcludedRegime):
        solve_eta_l(inputs)


def test_empty_graph_prediction(k1):
    inputs = make_inputs({1: 1.0}, [(k1, 1.0)])
    pred = giant_prediction(inputs)
    assert pred.xi_l == 0.0
    assert not pred.supercritical
    assert pred.criticality_value == 0.0
    with pytest.raises(NotSupercritical):
        edges_in_giant_rigc(inputs, pred)


def test_reference_prediction_values(inputs_estar):
    pred = giant_prediction(inputs_estar)
    assert pred.eta_l == pytest.approx(0.0640478, abs=1e-6)
    assert pred.xi_l == pytest.approx(0.9678448, abs=1e-6)
    assert pred.eta_r == pytest.approx(0.2530766, abs=1e-6)
    assert pred.xi_r == pytest.approx(0.9837910, abs=1e-6)
    assert pred.criticality_value == pytest.approx(3.0, abs=1e-12)
    assert pred.supercritical


def test_left_right_symmetry():
    rng = np.random.default_rng(32)
    for _ in range(10):
        w = rng.random(2) + 0.1
        w /= w.sum()
        inputs = make_inputs(
            {1: w[0], 4: w[1]},
            [(complete_graph(3), 0.5), (path_graph(3), 0.5)],
        )
        pred = giant_prediction(inputs)
        assert inputs.q_tilde.gf_eval(pred.eta_r) == pytest.approx(pred.eta_l, abs=1e-10)


def test_joint_degree_reference_values(inputs_estar):
    pred = giant_prediction(inputs_estar)
    assert joint_degree_in_giant(inputs_estar, pred, 1, 2) == pytest.approx(
        0.4679761, abs=1e-6
    )
    assert joint_degree_in_giant(inputs_estar, pred, 3, 6) == pytest.approx(
        0.4998686, abs=1e-6
    )
    # odd totals are impossible when every role has exactly two connections
    assert joint_degree_in_giant(inputs_estar, pred, 1, 3) == 0.0


def test_joint_degree_matches_literal_sum():
    inputs = make_inputs(
        {1: 0.4, 2: 0.3, 3: 0.3},
        [(complete_graph(2), 0.3), (complete_graph(3), 0.4), (path_graph(3), 0.3)],
    )
    pred = giant_prediction(inputs)
    assert pred.supercritical
    for k in (1, 2, 3):
        for d in range(0, 3 * k + 1):
            assert joint_degree_in_giant(inputs, pred, k, d) == pytest.approx(
                literal_joint_in_giant(inputs, pred, k, d), abs=1e-12
            )


def test_joint_degree_sums_to_giant_fraction(inputs_estar):
    pred = giant_prediction(inputs_estar)
    table = joint_degree_in_giant_table(
        inputs_estar, pred, default_truncation(inputs_estar)
    )
    assert sum(table.values()) == pytest.approx(pred.xi_l, abs=1e-8)


def test_edge_formulas_agree(inputs_estar):
    pred = giant_prediction(inputs_estar)
    direct = edges_in_giant_rigc(inputs_estar, pred)
    assert direct == pytest.approx(1.9675820, abs=1e-6)
    assert edges_in_giant_from_joint(inputs_estar, pred, 60) == pytest.approx(
        direct, abs=1e-8
    )


def test_edge_formulas_agree_on_mixed_catalog():
    inputs = make_inputs(
        {1: 0.3, 2: 0.4, 4: 0.3},
        [(complete_graph(2), 0.25), (complete_graph(3), 0.5), (path_graph(4), 0.25)],
    )
    pred = giant_prediction(inputs)
    assert edges_in_giant_from_joint(
        inputs, pred, default_truncation(inputs)
    ) == pytest.approx(edges_in_giant_rigc(inputs, pred), abs=1e-8)


def test_bcm_reference_values(inputs_estar):
    pred = giant_prediction(inputs_estar)
    bcm = bcm_predictions(inputs_estar, pred)
    assert bcm.edges_per_N == pytest.approx(1.9675820, abs=1e-6)
    assert bcm.lhs_degk[1] == pytest.approx(0.4679761, abs=1e-6)
    assert bcm.lhs_degk[3] == pytest.approx(0.4998686, abs=1e-6)
    assert bcm.rhs_fraction == pytest.approx(0.9837910, abs=1e-6)
    # digits frozen from the bisection oracle
    assert bcm.combined_fraction == pytest.approx(0.9742233, abs=1e-5)


def test_cm_contraction_consistency():
    # all groups of size 2: the fixed point must match the one-sided
    # unipartite recursion eta = G_pt(eta)
    p = Pmf({1: 0.3, 3: 0.7})
    inputs = make_inputs(p.as_dict(), [(complete_graph(2), 1.0)])
    eta = solve_eta_l(inputs)
    pt = p.size_bias().shift_down_one()
    direct = 0.0
    for _ in range(10_000):
        nxt = pt.gf_eval(direct)
        if abs(nxt - direct) < 1e-14:
            break
        direct = nxt
    assert eta == pytest.approx(direct, abs=1e-10)


def test_curves_at_one(inputs_estar):
    mean = inputs_estar.p.mean()
    assert sleeping_halfedge_curve(inputs_estar, 1.0) == pytest.approx(mean, abs=1e-9)
    assert living_halfedge_curve(inputs_estar, 1.0) == pytest.approx(mean, abs=1e-9)
    assert active_halfedge_curve(inputs_estar, 1.0) == pytest.approx(0.0, abs=1e-9)


def test_active_curve_vanishes_at_fixed_point(inputs_estar):
    pred = giant_prediction(inputs_estar)
    t_star = -math.log(pred.eta_l)
    assert t_star == pytest.approx(2.7481, abs=1e-4)
    assert abs(active_halfedge_curve(inputs_estar, math.exp(-t_star))) < 1e-8


def test_living_curve_closed_form(inputs_estar):
    # the tilted group-size law is a point mass at 2, so the inverse is a root
    assert living_halfedge_curve(inputs_estar, 0.5) == pytest.approx(
        2 * 0.5 * math.sqrt(0.5), abs=1e-9
    )
    with pytest.raises(OutOfDomain):
        living_halfedge_curve(inputs_estar, -0.1)


def test_active_curve_sign_pattern(inputs_estar):
    pred = giant_prediction(inputs_estar)
    t_star = -math.log(pred.eta_l)
    ts = np.linspace(1e-4, t_star - 1e-4, 1000)
    vals = [active_halfedge_curve(inputs_estar, math.exp(-t)) for t in ts]
    assert all(v > 0 for v in vals)
    just_after = active_halfedge_curve(inputs_estar, math.exp(-(t_star + 1e-3)))
    assert just_after < 0


def test_curve_domain_guard():
    inputs = make_inputs({2: 1.0}, [(complete_graph(2), 0.5), (CommunityGraph(1, []), 0.5)])
    # q1 > 0 caps the domain at q1 / E[Dr]
    q0 = inputs.q_tilde.prob(0)
    assert q0 > 0
    with pytest.raises(OutOfDomain):
        living_halfedge_curve(inputs, q0 / 2)
    assert living_halfedge_curve(inputs, q0) >= 0.0


def test_hitting_time_curve_values(inputs_estar):
    assert hitting_time_curve(inputs_estar, 1.0) == pytest.approx(0.0, abs=1e-9)
    assert hitting_time_curve(inputs_estar, 0.5) == pytest.approx(
        (2.0 / 3.0) * math.log(2.0), abs=1e-9
    )
    with pytest.raises(OutOfDomain):
        hitting_time_curve(inputs_estar, 0.0)


def test_curve_table_consistency(inputs_estar):
    z = np.linspace(0.05, 1.0, 50)
    table = curve_table(inputs_estar, z)
    for i, zi in enumerate(z):
        assert table["living"][i] == pytest.approx(
            living_halfedge_curve(inputs_estar, float(zi)), abs=1e-9
        )
        assert table["active"][i] == pytest.approx(
            active_halfedge_curve(inputs_estar, float(zi)), abs=1e-9
        )


def test_bp_survival_degenerate(k1):
    inputs = make_inputs({1: 1.0}, [(k1, 1.0)])
    frac, err = bp_survival_sim(inputs, "l", 2_000, 50, 1_000, philox(33))
    assert frac == 0.0
    assert err == 0.0


def test_bp_survival_matches_fixed_point(inputs_estar):
    pred = giant_prediction(inputs_estar)
    frac, err = bp_survival_sim(inputs_estar, "l", 20_000, 60, 10_000, philox(34))
    assert abs(frac - pred.xi_l) < 3 * max(err, 1e-4)
    frac_r, err_r = bp_survival_sim(inputs_estar, "r", 20_000, 60, 10_000, philox(35))
    assert abs(frac_r - pred.xi_r) < 3 * max(err_r, 1e-4)
