import numpy as np
import pytest

from parakahler import dsl
from parakahler.builder import (NotFiniteRank, SeparableDecomposition, align, assemble_immersion,
                                cross_decompose, pde_decompose, verify_immersion, Immersion)
from parakahler.classification import space_form_h, source_field, veronese
from parakahler.diastasis import DiastasisField
from parakahler.separability import IndexSet, build_index_set, pivoted_rank
from parakahler.spaceforms import SpaceFormModel

from fixtures import FINITE_RANK

grid = np.linspace(-0.5, 0.5, 9)


def test_cross_rank_one_and_two():
    H = dsl.parse("xi1*eta1", 1)
    dec = cross_decompose(H, (-0.5, 0.5))
    assert dec.N == 1 and dec.residual(H, grid, grid) < 1e-14
    H2 = dsl.parse("2*xi1*eta1 + 2*xi1^2*eta1^2", 1)
    dec2 = cross_decompose(H2, (-0.5, 0.5))
    assert dec2.N == 2 and dec2.residual(H2, grid, grid) < 1e-14


def test_cross_cap_for_log_potential():
    with pytest.raises(NotFiniteRank) as info:
        cross_decompose(space_form_h(4.0, 0.0, 2), (-0.4, 0.4), maxN=12)
    assert info.value.decomposition.N == 12 and info.value.residual > 1e-9


def test_cross_requires_vanishing_axes():
    with pytest.raises(ValueError):
        cross_decompose(dsl.parse("xi1*eta1 + xi1", 1), (-0.5, 0.5))


def test_factors_vanish_at_origin():
    dec = cross_decompose(dsl.parse("xi1*eta1 + xi2*eta2 + xi1^2*eta1*eta2", 2), (-0.5, 0.5))
    assert np.all(dec.u(np.zeros((1, 2))) == 0) and np.all(dec.v(np.zeros((1, 2))) == 0)


@pytest.mark.parametrize("text,n,dom", FINITE_RANK)
def test_pde_route_reproduces_h(text, n, dom):
    H = dsl.parse(text, n)
    index = build_index_set(H, domain=dom)
    dec = pde_decompose(H, index, dom)
    pts = np.random.default_rng(2).uniform(dom[0], dom[1], (8, n))
    assert dec.N == index.N
    assert dec.residual(H, pts, pts[::-1]) <= 1e-7
    assert dec.construction_log["evaluations"]["pfaffian"] > 0


def test_pde_requires_certified_index_set():
    H = dsl.parse("xi1*eta1", 1)
    with pytest.raises(ValueError):
        pde_decompose(H, IndexSet([(0,)], False, 10), (-0.5, 0.5))


def test_assembly_padding_and_mismatch():
    dec = cross_decompose(dsl.parse("xi1*eta1", 1), (-0.5, 0.5))
    imm = assemble_immersion(dec, SpaceFormModel(0.0, 3))
    U, V = imm.null_components([[0.2]], [[0.3]])
    assert U.shape == (1, 3) and np.all(U[:, 1:] == 0) and not imm.full
    dec2 = cross_decompose(dsl.parse("xi1*eta1 + xi1^2*eta1^2", 1), (-0.5, 0.5))
    with pytest.raises(ValueError):
        assemble_immersion(dec2, SpaceFormModel(0.0, 1))


def test_veronese_assembly_components():
    imm = veronese(1, 2)
    U, V = imm.null_components([[0.3]], [[0.2]])
    assert np.allclose(U, [[0.6, 0.18]]) and np.allclose(V, [[0.2, 0.04]])


def test_align_scaled_copy():
    d1 = cross_decompose(dsl.parse("xi1*eta1 + xi1^2*eta1^2", 1), (-0.5, 0.5))
    d2 = SeparableDecomposition(d1.N, 1, lambda x: 2 * d1.u(x), lambda y: 0.5 * d1.v(y), d1.domain)
    result = align(d1, d2)
    matrix, residual = result
    assert np.allclose(matrix, 2 * np.eye(2)) and residual <= 1e-10


def test_align_different_functions_reports_large_residual():
    d1 = cross_decompose(dsl.parse("xi1*eta1 + xi1^2*eta1^2", 1), (-0.5, 0.5))
    d2 = cross_decompose(dsl.parse("xi1*eta1 + xi1^3*eta1^3", 1), (-0.5, 0.5))
    result = align(d1, d2)
    assert result.residual > 1e-3


def test_verify_veronese_and_identity():
    for n, p in ((1, 2), (2, 2)):
        report = verify_immersion(veronese(n, p), source_field(4.0, n, (-0.3, 0.3)))
        assert report.passed
    flat = DiastasisField.from_text("4*xi1*eta1")
    ident = Immersion.from_exprs(SpaceFormModel(0.0, 1), [dsl.parse("xi1", 1)], [dsl.parse("eta1", 1)])
    report = verify_immersion(ident, flat)
    assert report.passed and report.hereditary.max_residual == 0


def test_verify_detects_mixed_components():
    flat = DiastasisField.from_text("4*xi1*eta1")
    bad = Immersion.from_exprs(SpaceFormModel(0.0, 1), [dsl.parse("xi1 + 0.01*eta1", 1)],
                               [dsl.parse("eta1", 1)])
    report = verify_immersion(bad, flat)
    assert not report.holomorphic and not report.passed


def test_strong_fullness_of_veronese_on_sub_boxes():
    dec = veronese(2, 2).decomposition
    rng = np.random.default_rng(4)
    for _ in range(3):
        lo = rng.uniform(-0.3, 0.2, 2)
        pts_x = lo + 0.05 * rng.random((12, 2))
        pts_y = lo + 0.05 * rng.random((12, 2))
        assert pivoted_rank(dec.grid(pts_x, pts_y), 1e-10)[0] == dec.N
