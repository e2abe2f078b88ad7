import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrbounds.tsirelson import (TsirelsonFunctional, build_operator, char_poly, chsh_functional, classical_max,
                                  eigen_oracle, is_upper_bound, named_functional, nosig_max, table_bound,
                                  tsirelson_bound)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_char_poly_matches_eigenvalues(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (a + a.conj().T) / 2
    p = char_poly(h)
    ev = np.linalg.eigvalsh(h)
    assert np.allclose(p.coeffs, np.poly(ev).real, atol=1e-8 * max(1.0, np.abs(ev).max() ** n))
    assert p.largest_root() == pytest.approx(ev[-1], abs=1e-9)
    assert is_upper_bound(p, ev[-1] + 1e-6)
    assert not is_upper_bound(p, ev[-1] - 1e-3)


def test_operator_is_hermitian_with_zero_diagonal():
    z = build_operator(chsh_functional(), [0.3, 1.1])
    assert np.allclose(z, z.conj().T)
    assert np.allclose(np.diag(z), 0)


def test_chsh_quantum():
    assert tsirelson_bound(chsh_functional()) == pytest.approx(2 * math.sqrt(2), abs=1e-6)


def test_classical_and_nosig_chsh():
    f = chsh_functional()
    assert classical_max(f) == pytest.approx(2.0)
    assert nosig_max(f) == pytest.approx(4.0)


@pytest.mark.parametrize("x", [-2.5, -1.0, 0.0, 0.7, 2.5])
@pytest.mark.parametrize("name", ["QB1", "QB2", "QB3"])
def test_lhvm_and_nosig_closed_forms(name, x):
    f = named_functional(name)
    assert classical_max(f, x) == pytest.approx(table_bound("LHVM-" + name, x), abs=1e-9)
    assert nosig_max(f, x) == pytest.approx(table_bound("NOSIG-" + name, x), abs=1e-7)


def test_mapping_roundtrip_and_sweep():
    f = TsirelsonFunctional.from_mapping({"A0B0": 1, "A1B1": "-2*x", "B1": "1+x"})
    assert f.has_sweep
    g = TsirelsonFunctional.from_mapping(f.to_mapping())
    assert g.at(0.5) == f.at(0.5)
    with pytest.raises(ValueError):
        f.at(None)


def test_three_party_mermin():
    # A1B0C0 + A0B1C0 + A0B0C1 - A1B1C1: local 2, quantum 4
    f = TsirelsonFunctional.from_mapping({"A1B0C0": 1, "A0B1C0": 1, "A0B0C1": 1, "A1B1C1": -1})
    assert classical_max(f) == pytest.approx(2.0)
    assert tsirelson_bound(f) == pytest.approx(4.0, abs=1e-5)
    assert eigen_oracle(f) == pytest.approx(4.0, abs=1e-5)


def test_bound_is_attained_by_a_state():
    f = named_functional("QB2")
    from corrbounds.tsirelson import optimal_angles
    ang = optimal_angles(f, 1.0)
    top = np.linalg.eigvalsh(build_operator(f, ang, 1.0))[-1]
    assert top == pytest.approx(math.sqrt(10), abs=1e-6)


def test_unknown_name():
    with pytest.raises(ValueError):
        named_functional("QB9")
