import math

import numpy as np
import pytest

from corrbounds.boxes import SliceSpec, pr_box, slice_behavior, to_probabilities
from corrbounds.qbounds import (CRITERIA, GammaMatrix, envelope_term, lo2_clique_sum, lo2_max_xi, npa1_max_xi,
                                npa1_max_xi_radical, npa1_satisfied, npa1_sum, npa1ab_max_lambda_min,
                                npa1ab_max_xi, qb3_max_xi, qb3_min_term, red_region, trace_boundary,
                                uffink_max_xi)

SQ = 1 / math.sqrt(2)


def sdp_max_lambda_min(m):
    """Independent semidefinite-programming route to the best moment-matrix eigenvalue."""
    cp = pytest.importorskip("cvxpy")
    gm = GammaMatrix(__import__("corrbounds").Behavior222.from_array(m))
    v = cp.Variable(8)
    t = cp.Variable()
    G = gm.F0 + sum(v[i] * gm.E[i] for i in range(8))
    prob = cp.Problem(cp.Maximize(t), [(G + G.T) / 2 - t * np.eye(9) >> 0])
    prob.solve(solver=cp.CLARABEL)
    return float(t.value)


def test_gamma_matrix_symmetric():
    b = slice_behavior(SliceSpec("beta", 0.3, 0.4))
    gm = GammaMatrix(b)
    M = gm.matrix(np.linspace(-0.5, 0.5, 8))
    assert np.allclose(M, M.T)
    assert np.allclose(np.diag(M), 1.0)


@pytest.mark.parametrize("kind,param,xi", [("beta", 0.3, 0.5), ("gamma", 0.2, 0.5), ("beta", 0.4, 0.52),
                                           ("gamma", 0.0, 0.72)])
def test_subgradient_matches_sdp(kind, param, xi):
    b = slice_behavior(SliceSpec(kind, param, xi))
    ref = sdp_max_lambda_min(b.as_array())
    got = npa1ab_max_lambda_min(b, iters=4000)
    assert got <= ref + 1e-7
    assert got == pytest.approx(ref, abs=2e-3)


def test_npa1_radical_matches_trig():
    for g in np.linspace(0.38, 1.0, 12):
        assert npa1_max_xi("gamma", g) == pytest.approx(npa1_max_xi_radical(g), abs=1e-10)


def test_npa1_boundary_point_saturates_sum():
    for g in (0.1, 0.4, 0.7):
        xi = npa1_max_xi("gamma", g)
        assert npa1_sum(slice_behavior(SliceSpec("gamma", g, xi))) == pytest.approx(math.pi, abs=1e-9)
        assert not npa1_satisfied(slice_behavior(SliceSpec("gamma", g, xi + 1e-3)))


def test_envelope_equals_qb3_min_term():
    for g in np.linspace(0.0, 1.0, 11):
        assert envelope_term(g) == pytest.approx(qb3_min_term(g), abs=1e-8)


def test_lo2_pr_pr():
    assert lo2_clique_sum(pr_box(), pr_box()) == pytest.approx(1.25, abs=0)


def _lo2_root(kind, g, **kw):
    from scipy.optimize import brentq

    def f(xi):
        t = to_probabilities(slice_behavior(SliceSpec(kind, g, xi)))
        return lo2_clique_sum(t, t, **kw) - 1

    return 1 - g if f(1 - g) <= 0 else brentq(f, 0.0, 1 - g, xtol=1e-14)


@pytest.mark.parametrize("kind", ["gamma", "beta"])
def test_lo2_numeric_root_matches_closed_form(kind):
    for g in np.linspace(0.0, 0.9, 10):
        assert lo2_max_xi(kind, g) == pytest.approx(_lo2_root(kind, g), abs=1e-8)


def test_lo2_pairings_agree_on_symmetric_boxes():
    for g in (0.0, 0.4):
        assert _lo2_root("gamma", g, swap_second=False) == pytest.approx(_lo2_root("gamma", g), abs=1e-12)
    assert lo2_clique_sum(pr_box(), pr_box(), swap_second=False) == pytest.approx(1.25, abs=0)


def test_lo2_white_noise_and_bilinear():
    from corrbounds.boxes import product_box, white_noise
    wn = to_probabilities(white_noise())
    assert lo2_clique_sum(wn, wn) == pytest.approx(0.625)
    a, b, c = pr_box(), product_box(0.2, 0.9), wn
    mixed = type(a)(0.3 * a.p + 0.7 * b.p)
    assert lo2_clique_sum(mixed, c) == pytest.approx(0.3 * lo2_clique_sum(a, c) + 0.7 * lo2_clique_sum(b, c))


@pytest.mark.parametrize("kind", ["gamma", "beta"])
@pytest.mark.parametrize("param", [0.1, 0.4, 0.7])
def test_relaxation_ordering(kind, param):
    a, b, c = npa1ab_max_xi(kind, param), npa1_max_xi(kind, param), uffink_max_xi(kind, param)
    assert a <= b + 1e-12
    assert b <= c + 1e-6
    assert c <= 1 - param + 1e-12


def test_qb3_min_term_concave_nonincreasing():
    g = np.linspace(0.0, 2.0, 41)
    v = np.array([qb3_min_term(t) for t in g])
    assert np.all(np.diff(v) <= 1e-10)
    assert np.all(v[1:-1] >= (v[:-2] + v[2:]) / 2 - 1e-8)


def test_lambda_min_concave_along_segments():
    rng = np.random.default_rng(1)
    gm = GammaMatrix(slice_behavior(SliceSpec("beta", 0.3, 0.5)))
    for _ in range(50):
        u, v = rng.uniform(-1, 1, (2, 8))
        assert gm.min_eigenvalue((u + v) / 2) >= (gm.min_eigenvalue(u) + gm.min_eigenvalue(v)) / 2 - 1e-12


@pytest.mark.parametrize("kind", ["gamma", "beta"])
def test_closed_forms_nonincreasing(kind):
    grid = np.linspace(0.0, 1.0, 21)
    for fn in (uffink_max_xi, npa1_max_xi, qb3_max_xi, lo2_max_xi):
        v = np.array([fn(kind, g) for g in grid])
        assert np.all(np.diff(v) <= 1e-12), fn.__name__


def test_white_noise_and_pr_feasibility():
    from corrbounds.boxes import white_noise, to_behavior
    assert npa1ab_max_lambda_min(white_noise()) >= 0
    assert npa1ab_max_lambda_min(to_behavior(pr_box())) < 0


def test_uffink_origin():
    assert uffink_max_xi("gamma", 0.0) == pytest.approx(SQ)


def test_trace_boundary_workers_and_unknown():
    params = [0.0, 0.3]
    a = trace_boundary("beta", ["qb3", "npa1ab"], params, seed=3, workers=1)
    b = trace_boundary("beta", ["qb3", "npa1ab"], params, seed=3, workers=2)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "param,criterion,xi_max,converged"
    with pytest.raises(ValueError):
        trace_boundary("beta", ["nope"], params)
    assert isinstance(red_region(a), list)
    assert set(CRITERIA) == {"uffink", "npa1", "qb3", "lo2", "npa1ab"}
