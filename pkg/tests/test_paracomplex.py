import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parakahler.paracomplex import (E, EBAR, ONE, TAU, NullPair, SplitComplex, d_inner,
                                    d_norm_sq, from_null, is_d_unitary, pc_mul, pc_norm_sq,
                                    to_null)

import oracles

reals = st.floats(-1e3, 1e3, allow_nan=False)


def test_products():
    assert pc_mul(TAU, TAU) == ONE
    assert pc_mul(ONE + TAU, ONE - TAU) == SplitComplex(0.0, 0.0)
    assert pc_mul(E, EBAR) == SplitComplex(0.0, 0.0)


def test_norms():
    assert pc_norm_sq(ONE + TAU) == 0
    assert pc_norm_sq(SplitComplex(3, 1)) == 8
    assert pc_norm_sq(SplitComplex.from_null(2.5, 0.0)) == 0


def test_null_coordinates():
    assert to_null(TAU) == NullPair(-1.0, 1.0)
    assert to_null(ONE) == NullPair(1.0, 1.0)
    assert to_null(E) == NullPair(1.0, 0.0)
    assert from_null(NullPair(1.0, 0.0)) == E


def test_inner_products():
    assert d_inner([ONE + TAU], [ONE + TAU]) == SplitComplex(0.0, 0.0)
    assert d_inner([ONE, TAU], [ONE, TAU]) == SplitComplex(0.0, 0.0)
    assert d_inner([SplitComplex(2, 0)], [ONE]) == SplitComplex(2.0, 0.0)
    with pytest.raises(ValueError):
        d_inner([ONE], [ONE, ONE])


def test_unitary():
    assert is_d_unitary([[ONE, SplitComplex(0, 0)], [SplitComplex(0, 0), ONE]])
    assert not is_d_unitary([[ONE + TAU]])
    assert is_d_unitary([[SplitComplex(5 / 4, 3 / 4)]])


def test_zero_divisor_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        (ONE + TAU).inverse()


@given(reals, reals, reals, reals)
def test_product_matches_matrix_representation(a, b, c, d):
    got = pc_mul(SplitComplex(a, b), SplitComplex(c, d))
    want = oracles.sc_mul((a, b), (c, d))
    assert got.re == pytest.approx(want[0], rel=1e-12, abs=1e-9)
    assert got.im == pytest.approx(want[1], rel=1e-12, abs=1e-9)


@given(reals, reals, reals, reals)
def test_norm_is_multiplicative(a, b, c, d):
    z, w = SplitComplex(a, b), SplitComplex(c, d)
    lhs = pc_norm_sq(z * w)
    rhs = pc_norm_sq(z) * pc_norm_sq(w)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-6 * (1 + abs(a * b * c * d)))


@given(reals, reals)
def test_null_round_trip_and_norm(a, b):
    z = SplitComplex(a, b)
    p = to_null(z)
    assert from_null(p).re == pytest.approx(a, abs=1e-9)
    assert from_null(p).im == pytest.approx(b, abs=1e-9)
    assert p.u * p.v == pytest.approx(oracles.sc_norm_sq((a, b)), rel=1e-9, abs=1e-6)


@given(st.lists(st.tuples(reals, reals), min_size=1, max_size=4))
def test_norm_sq_is_self_pairing(entries):
    z = [SplitComplex(a, b) for a, b in entries]
    assert d_norm_sq(z) == pytest.approx(sum(a * a - b * b for a, b in entries), rel=1e-9, abs=1e-6)


@given(st.floats(-3, 3))
def test_hyperbolic_rotations_are_unitary(t):
    z = SplitComplex(math.cosh(t), math.sinh(t))
    assert is_d_unitary([[z]], tol=1e-9)
