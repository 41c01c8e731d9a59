import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parakahler import dsl
from parakahler.jets import (JetOrderError, graded_lex_key, jet_derivative, jet_lift,
                             jet_lift_many, multi_indices, xi_derivatives)

import oracles


def test_product_jet():
    j = jet_lift(dsl.parse("xi1*eta1", 1), ((0.0,), (0.0,)), (2, 2))
    nonzero = [(I, J) for (I, J), v in j.items() if v != 0]
    assert nonzero == [((1,), (1,))]
    assert jet_derivative(j, (1,), (1,)) == 1


def test_named_derivatives():
    assert jet_derivative(jet_lift(dsl.parse("xi1^2*eta1", 1), ((0.0,), (0.0,)), (2, 1)), (2,), (1,)) == 2
    j = jet_lift(dsl.parse("exp(xi1*eta1)", 1), ((0.0,), (0.0,)), (2, 2))
    assert jet_derivative(j, (2,), (2,)) == pytest.approx(2)


def test_projective_potential_coefficients():
    j = jet_lift(dsl.parse("log(1 + 2*xi1*eta1)", 1), ((0.0,), (0.0,)), (2, 2))
    assert j.coeff((1,), (1,)) == pytest.approx(2)
    assert j.coeff((2,), (2,)) == pytest.approx(-2)


def test_bump_is_flat_left_of_its_support():
    j = jet_lift(dsl.parse("bump(xi1,0)", 1), ((-1.0,), (0.0,)), (6, 0))
    assert all(v == 0 for _, v in j.items())


def test_bump_derivatives_match_finite_differences():
    expr = dsl.parse("bump(xi1,1)", 1)
    j = jet_lift(expr, ((1.7,), (0.0,)), (3, 0))
    for k in range(1, 4):
        want = oracles.fd_derivative(lambda z: float(expr(z[:1], z[1:])), [1.7, 0.0], (k, 0))
        assert jet_derivative(j, (k,), (0,)) == pytest.approx(want, rel=1e-5)


def test_order_cap():
    with pytest.raises(JetOrderError):
        jet_lift(dsl.parse("xi1", 1), ((0.0,), (0.0,)), (13, 0))


def test_graded_lex_order():
    idx = sorted(multi_indices(2, 2), key=graded_lex_key)
    assert idx == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_batch_agrees_with_single_points():
    expr = dsl.parse("exp(xi1*eta2) + xi2^3*eta1", 2)
    rng = np.random.default_rng(1)
    xi, eta = rng.uniform(-1, 1, (5, 2)), rng.uniform(-1, 1, (5, 2))
    batch = jet_lift_many(expr, xi, eta, (2, 2))
    for k in range(5):
        single = jet_lift(expr, (xi[k], eta[k]), (2, 2))
        assert batch[k].coeff((1, 1), (0, 2)) == pytest.approx(single.coeff((1, 1), (0, 2)))
    rows = xi_derivatives(expr, xi, eta, [(0, 0), (0, 1)])
    assert np.allclose(rows[0], expr(xi, eta))


coeffs = st.lists(st.floats(-2, 2), min_size=3, max_size=3)


@settings(max_examples=60, deadline=None)
@given(coeffs, coeffs, st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_leibniz_rule(a, b, x, y):
    f = f"({a[0]}*xi1 + {a[1]}*eta1 + {a[2]}*xi1*eta1)"
    g = f"exp({b[0]}*xi1 + {b[1]}*eta1 + {b[2]}*xi1*eta1)"
    jf = jet_lift(dsl.parse(f, 1), ((x,), (y,)), (1, 1))
    jg = jet_lift(dsl.parse(g, 1), ((x,), (y,)), (1, 1))
    jfg = jet_lift(dsl.parse(f"{f}*{g}", 1), ((x,), (y,)), (1, 1))
    d = lambda j, I, J: jet_derivative(j, (I,), (J,))
    want = (d(jf, 1, 1) * d(jg, 0, 0) + d(jf, 1, 0) * d(jg, 0, 1)
            + d(jf, 0, 1) * d(jg, 1, 0) + d(jf, 0, 0) * d(jg, 1, 1))
    assert d(jfg, 1, 1) == pytest.approx(want, rel=1e-10, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.45), st.floats(-0.45, 0.45), st.integers(1, 6))
def test_log_series_closed_form(x, y, k):
    j = jet_lift(dsl.parse("log(1 + 2*xi1*eta1)", 1), ((x,), (y,)), (k, 0))
    want = (-1) ** (k - 1) * math.factorial(k - 1) * (2 * y) ** k / (1 + 2 * x * y) ** k
    assert jet_derivative(j, (k,), (0,)) == pytest.approx(want, rel=1e-10, abs=1e-12)
