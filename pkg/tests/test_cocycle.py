import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpcocycle import SL2, PotentialSpec, cocycle_product, one_step_matrix, sl2_norm
from qpcocycle.cocycle import product_log_norm

GOLDEN = (math.sqrt(5) - 1) / 2
ZERO = PotentialSpec.constant(0.0)


def amo(lam):
    return PotentialSpec((0.0, lam))


def test_one_step_examples():
    assert one_step_matrix(ZERO, 0.3, 0.0).array().tolist() == [[0, -1], [1, 0]]
    assert one_step_matrix(amo(2.0), 0.0, 0.0).array().tolist() == [[2, -1], [1, 0]]
    m = one_step_matrix(amo(4.0), 0.25, 1.0).array()
    np.testing.assert_allclose(m, [[-1, -1], [1, 0]], atol=1e-15)


def test_norm_examples():
    assert sl2_norm(np.eye(2)) == 1.0
    assert sl2_norm(np.diag([3.0, 1 / 3])) == pytest.approx(3.0, abs=1e-15)
    assert sl2_norm([[0.0, -1.0], [1.0, 0.0]]) == 1.0


entries = st.floats(-1e3, 1e3, allow_nan=False)


@given(entries, entries, entries, entries)
def test_norm_matches_closed_form(a, b, c, d):
    m = np.array([[a, b], [c, d]])
    assert sl2_norm(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-10, abs=1e-12)


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_inverse_has_same_norm(a, b, c):
    if abs(a) < 1e-3:
        return
    m = SL2(a, b, c, (1 + b * c) / a)
    assert m.is_unimodular()
    n, ni = m.norm(), m.inverse().norm()
    assert n * ni >= 1 - 1e-12
    assert ni == pytest.approx(n, rel=1e-9)


def test_constant_products():
    p = cocycle_product(ZERO, 0.123, GOLDEN, 3.0, 200)
    # log rho plus the eigenprojector term log(1.342)/200
    exact = math.log(sl2_norm(np.linalg.matrix_power(np.array([[-3.0, -1.0], [1.0, 0.0]]), 200))) / 200
    assert p.exponent == pytest.approx(exact, rel=1e-12)
    assert 0.9620 <= p.exponent <= 0.9640
    assert 0.9620 <= cocycle_product(ZERO, 0.123, GOLDEN, 3.0, 2000).exponent <= 0.9630
    p = cocycle_product(ZERO, 0.7, GOLDEN, 0.0, 4)
    assert p.log_norm == 0.0
    assert abs(abs(p.normalized[0, 0]) - 1) < 1e-15 and p.normalized[0, 1] == 0


def test_amo_product_near_log2():
    p = cocycle_product(amo(4.0), 0.1, GOLDEN, 0.0, 1000)
    assert abs(p.exponent - math.log(2)) < 0.1


def test_rejects_bad_n():
    with pytest.raises(ValueError):
        cocycle_product(ZERO, 0.0, GOLDEN, 0.0, 0)


def test_first_factor_is_shifted():
    v = amo(3.0)
    x, e = 0.2, 0.4
    p = cocycle_product(v, x, GOLDEN, e, 1)
    expect = one_step_matrix(v, x + GOLDEN, e).array()
    np.testing.assert_allclose(p.normalized * math.exp(p.log_norm), expect, rtol=1e-14)


def test_cocycle_identity():
    v = amo(4.0)
    x, e, n1, n2 = 0.37, 0.5, 300, 700
    full = cocycle_product(v, x, GOLDEN, e, n1 + n2)
    a = cocycle_product(v, x, GOLDEN, e, n1)
    b = cocycle_product(v, x + n1 * GOLDEN, GOLDEN, e, n2)
    comp = b.normalized @ a.normalized
    recon = a.log_norm + b.log_norm + math.log(sl2_norm(comp))
    assert abs(full.log_norm - recon) <= 1e-8 * (n1 + n2)


def test_rescaled_product_keeps_determinant():
    # the normalized product times its norm must stay unimodular; check on a
    # mildly hyperbolic energy where the norm stays representable
    v = amo(0.5)
    p = cocycle_product(v, 0.1, GOLDEN, 0.3, 10**6)
    det = np.linalg.det(p.normalized) * math.exp(2 * p.log_norm)
    assert abs(det - 1) < 1e-9


def test_constant_cocycle_rate():
    r = math.log((3 + math.sqrt(5)) / 2)
    errs = [abs(cocycle_product(ZERO, 0.0, GOLDEN, 3.0, n).exponent - r) for n in (100, 1000, 10000)]
    for n, err in zip((100, 1000, 10000), errs):
        assert err * n < 1.0
    assert errs[0] > errs[1] > errs[2]


def test_product_log_norm_matches_kernel():
    v = amo(4.0)
    x, e, n = 0.3, 0.2, 500
    mats = [one_step_matrix(v, x + (j + 1) * GOLDEN, e).array() for j in range(n)]
    assert product_log_norm(mats).log_norm == pytest.approx(cocycle_product(v, x, GOLDEN, e, n).log_norm, rel=1e-10)


def test_potential_spec():
    v = PotentialSpec((1.0, 2.0), (0.5,))
    assert v(0.0) == pytest.approx(3.0)
    assert v(0.25) == pytest.approx(1.0 + 0.5)
    assert v.sup_bound == pytest.approx(3.5)
    assert PotentialSpec.constant(2.0)(0.4) == 2.0
