import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parakahler import dsl
from parakahler.classification import space_form_h
from parakahler.separability import (DegenerateSampleError, InconclusiveOrder, SampleMatrix,
                                     build_index_set, dependency_check, pivoted_rank,
                                     sample_rank, wronskian_order)

import oracles

grid8 = np.linspace(-0.5, 0.5, 8)


def test_sample_ranks():
    assert sample_rank(dsl.parse("xi1*eta1", 1), grid8, grid8) == 1
    assert sample_rank(dsl.parse("2*xi1*eta1 + 2*xi1^2*eta1^2", 1), grid8, grid8) == 2
    assert sample_rank(lambda x, y: 0.0 * x * y, grid8, grid8) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.integers(0, 2**31 - 1))
def test_pivoted_rank_matches_svd(r, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((12, r)) @ rng.standard_normal((r, 10))
    assert pivoted_rank(M)[0] == oracles.svd_rank(M, 1e-10)


def test_sample_matrix_csv():
    S = SampleMatrix.sample(dsl.parse("xi1*eta1", 1), grid8[:2], grid8[:3], "test")
    text = S.to_csv()
    assert text.count("\n") >= 2 and S.rank() == 1


def test_wronskian_orders():
    fs = ["1", "xi1", "xi1^2"]
    assert wronskian_order(fs, [0.3], 4) == 3
    assert wronskian_order(["xi1", "2*xi1"], [0.3], 4) == 1
    assert wronskian_order(["bump(xi1,0)", "bump(xi1,1)"], [0.5], 4) == 1


def test_wronskian_inconclusive():
    with pytest.raises(InconclusiveOrder):
        wronskian_order(["1", "xi1", "xi1^2", "xi1^3"], [0.2], 1)


def test_dependency_examples():
    H = dsl.parse("xi1*eta1 + xi1^2*eta1^2", 1)
    rng = np.random.default_rng(0)
    xi, eta = rng.uniform(0.1, 0.5, (6, 1)), rng.uniform(-0.5, 0.5, (8, 1))
    rep = dependency_check(H, (2,), [(0,), (1,)], xi, eta)
    assert rep.dependent and rep.residual < 1e-10
    # d^2 H = 2 eta^2 = -(2/xi^2) H + (2/xi) dH; the report stores the negated coefficients
    assert np.allclose(rep.coefficients[:, 0], 2 / xi[:, 0] ** 2)
    assert np.allclose(rep.coefficients[:, 1], -2 / xi[:, 0])

    flat = dsl.parse("xi1*eta1 + xi2*eta2", 2)
    xi2, eta2 = rng.uniform(-0.5, 0.5, (5, 2)), rng.uniform(-0.5, 0.5, (8, 2))
    assert not dependency_check(flat, (1, 0), [(0, 0)], xi2, eta2).dependent

    H0 = space_form_h(4.0, 0.0, 1)
    I = [(0,), (1,), (2,), (3,)]
    assert not dependency_check(H0, (4,), I, xi, eta).dependent


def test_too_few_samples():
    with pytest.raises(DegenerateSampleError):
        dependency_check(dsl.parse("xi1*eta1", 1), (1,), [(0,)], [[0.2]], [[0.3]])


def test_index_sets():
    assert build_index_set(dsl.parse("xi1*eta1", 1)).indices == [(0,)]
    I = build_index_set(dsl.parse("xi1*eta1 + xi1^2*eta1^2", 1))
    assert I.indices == [(0,), (1,)] and I.certified
    I2 = build_index_set(dsl.parse("xi1*eta1 + xi2*eta2 + xi1^2*eta1*eta2", 2))
    assert I2.indices == [(0, 0), (1, 0), (0, 1)]


def test_index_set_not_certified_for_blocked_ratio():
    I = build_index_set(space_form_h(4.0, 6.0, 1), max_total_order=10, domain=(-0.4, 0.4))
    assert not I.certified and I.N == 11


def test_zero_function_has_empty_index_set():
    I = build_index_set(dsl.parse("0*xi1*eta1", 1))
    assert I.N == 0 and I.certified
