import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parakahler import dsl
from parakahler.diastasis import (DiastasisField, d0, diastasis, h_expression, h_function,
                                  hereditary_check)
from parakahler.spaceforms import SpaceFormModel, model_potential_expr


class Inclusion:
    """``D^1 -> D^2`` (flat), or the identity chart map of a projective model."""

    def __init__(self, target):
        self.target = target

    def null_components(self, xi, eta):
        U = np.zeros((len(xi), self.target.dim))
        V = np.zeros((len(eta), self.target.dim))
        U[:, :xi.shape[1]] = xi
        V[:, :eta.shape[1]] = eta
        return U, V


def test_flat_diastasis():
    f = DiastasisField.from_text("4*xi1*eta1")
    assert diastasis(f, (1.0, 1.0), (0.0, 0.0)) == 4
    assert diastasis(f, (0.3, -0.2), (0.3, -0.2)) == 0
    assert diastasis(f, (0.5, 0.4), (0.1, -0.3)) == pytest.approx(4 * 0.4 * 0.7)


def test_h_function_examples():
    flat = DiastasisField.from_text("4*xi1*eta1")
    assert h_function(flat, 0.0, (1.0, 2.0)) == pytest.approx(2)
    proj = DiastasisField(model_potential_expr(SpaceFormModel(4.0, 1)), [-0.5, 1.5])
    assert h_function(proj, 8.0, (1.0, 1.0)) == pytest.approx(4)


def test_d0_vanishes_on_axes_exactly():
    f = DiastasisField.from_text("exp(xi1 + eta1) + xi1^3*eta1 + log(2 + eta1)")
    xs = np.linspace(-0.5, 0.5, 7)
    assert np.all(d0(f, xs, np.zeros(7)) == 0)
    assert np.all(d0(f, np.zeros(7), xs) == 0)
    H = h_expression(f, 4.0)
    assert np.all(H(xs, np.zeros(7)) == 0)


def test_domain_must_contain_origin():
    with pytest.raises(ValueError):
        DiastasisField(dsl.parse("xi1*eta1", 1), [0.5, 1.0])


def test_identity_inclusion_is_hereditary():
    report = hereditary_check(DiastasisField.from_text("4*xi1*eta1"), Inclusion(SpaceFormModel(0, 2)))
    assert report.passed and report.max_residual == 0
    proj = DiastasisField(model_potential_expr(SpaceFormModel(4.0, 1)), [-0.4, 0.4])
    assert hereditary_check(proj, Inclusion(SpaceFormModel(4.0, 1))).max_residual < 1e-12


def test_wrong_curvature_fails():
    proj = DiastasisField(model_potential_expr(SpaceFormModel(4.0, 1)), [-0.4, 0.4])
    report = hereditary_check(proj, Inclusion(SpaceFormModel(8.0, 1)))
    assert not report.passed and report.failures
    assert '"passed": false' in report.to_json()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=4, max_size=4), st.floats(-3, 3), st.floats(-3, 3))
def test_diastasis_is_gauge_invariant(vals, a, b):
    """Adding f(xi) + g(eta) to the potential leaves the diastasis unchanged."""
    base = "xi1*eta1 + exp(xi1*eta1)"
    gauged = f"{base} + exp({a}*xi1) + {b}*eta1^3"
    p, q = (vals[0], vals[1]), (vals[2], vals[3])
    d1 = diastasis(DiastasisField.from_text(base), p, q)
    d2 = diastasis(DiastasisField.from_text(gauged), p, q)
    assert d1 == pytest.approx(d2, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4))
def test_h_matches_closed_form(x, y):
    proj = DiastasisField(model_potential_expr(SpaceFormModel(4.0, 1)), [-0.5, 0.5])
    assert h_function(proj, 12.0, (x, y)) == pytest.approx(((1 + 2 * x * y) ** 3 - 1) / 2, abs=1e-12)
    assert h_function(proj, 0.0, (x, y)) == pytest.approx(0.5 * math.log(1 + 2 * x * y), abs=1e-12)
