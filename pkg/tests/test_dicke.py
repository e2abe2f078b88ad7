import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrbounds.dicke import (DickeDiagonalState, full_density_matrix, jacobian_det, jx_max, jy_max,
                              mc_equivalence_scan, partial_transpose, ppt_all, ppt_all_batch, pptds_volume_mc,
                              sds_fit, sds_jacobian_fd, sds_mixture, sds_populations, sds_volume_closed,
                              sds_volume_quadrature)


def brute_ppt(s: DickeDiagonalState) -> bool:
    rho = full_density_matrix(s)
    return all(np.linalg.eigvalsh(partial_transpose(rho, s.N, k))[0] >= -1e-10 for k in range(1, s.N // 2 + 1))


def random_state(rng, N):
    return DickeDiagonalState(N, rng.dirichlet(np.ones(N + 1)))


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_ppt_matches_brute_partial_transpose(N):
    rng = np.random.default_rng(N)
    states = [random_state(rng, N) for _ in range(150)]
    agree = [ppt_all(s) == brute_ppt(s) for s in states]
    assert all(agree)
    batch = ppt_all_batch(np.array([s.chi for s in states]))
    assert list(batch) == [ppt_all(s) for s in states]


def test_partial_transpose_involution():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(16, 16))
    assert np.allclose(partial_transpose(partial_transpose(a, 4, 2), 4, 2), a)


def test_dicke_two_is_entangled():
    s = DickeDiagonalState(2, [0.0, 1.0, 0.0])
    assert not ppt_all(s)
    fit = sds_fit(s)
    assert not fit.ppt and not fit.certified


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_jacobian_matches_finite_differences(N):
    rng = np.random.default_rng(10 + N)
    x = rng.dirichlet(np.ones(jx_max(N)))
    y = np.sort(rng.uniform(0.05, 0.95, jy_max(N)))[::-1]
    assert jacobian_det(x, y, N) == pytest.approx(sds_jacobian_fd(x, y, N), rel=1e-5)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_volume_closed_equals_quadrature(N):
    assert sds_volume_quadrature(N) == pytest.approx(float(sds_volume_closed(N)), rel=1e-10)


def test_volume_values():
    assert sds_volume_closed(4) == Fraction(2, 525)
    assert sds_volume_closed(1) == 1
    assert sds_volume_closed(2) == Fraction(1, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 31))
def test_fit_recovers_random_mixtures(N, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, jx_max(N) + 1))
    s = sds_mixture(rng.dirichlet(np.ones(k)), rng.uniform(0, 1, k), N)
    fit = sds_fit(s)
    assert fit.ppt and fit.certified
    d = fit.decomposition
    assert np.abs(d.populations() - s.chi).max() < 1e-8
    assert d.x.min() >= -1e-9 and 0 <= d.y.min() and d.y.max() <= 1 + 1e-9


def test_single_node_state():
    s = sds_populations(0.5, 2)
    assert np.allclose(s.chi, [0.25, 0.5, 0.25])
    fit = sds_fit(s)
    assert fit.certified
    assert fit.decomposition.x.sum() == pytest.approx(1.0)


def test_state_json_roundtrip_and_validation():
    s = DickeDiagonalState(3, [0.1, 0.2, 0.3, 0.4])
    assert DickeDiagonalState.from_json(s.to_json()) == s
    with pytest.raises(ValueError):
        DickeDiagonalState(2, [0.5, 0.6, 0.1])
    with pytest.raises(ValueError):
        DickeDiagonalState.from_json('{"N": 2}')


def test_mc_deterministic_across_workers():
    a = pptds_volume_mc(3, 300_000, seed=7, workers=1)
    b = pptds_volume_mc(3, 300_000, seed=7, workers=2)
    assert a == b
    closed = float(sds_volume_closed(3))
    assert abs(a[0] - closed) < 4 * a[1]


@pytest.mark.parametrize("N", [2, 3, 5])
def test_equivalence_scan_small(N):
    assert mc_equivalence_scan(N, 300, seed=1) == 0
