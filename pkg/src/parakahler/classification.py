"""Immersions between space forms: the classifier, the monomial (Veronese-type)
construction, closed-form derivative oracles and the bump-function counterexample."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from . import dsl
from .builder import Immersion, SeparableDecomposition, assemble_immersion
from .diastasis import DiastasisField, h_expression
from .dsl import DomainError, PotentialExpr
from .jets import multi_indices
from .separability import sample_rank
from .spaceforms import SpaceFormModel, model_potential_expr

RATIO_TOL = 1e-9
RATIO_WARN = 1e-6

REASONS = ("flat_to_flat", "ratio_positive_integer", "nonflat_to_flat_blocked",
           "flat_to_nonflat_blocked", "ratio_not_integer", "ambiguous_ratio")
CASES = ("nonflat_to_flat", "flat_to_nonflat", "nonflat_to_nonflat")


@dataclass(frozen=True)
class ClassificationVerdict:
    c: float
    b: float
    n: int
    exists: bool
    minimal_N: int | None
    fullness: str | None
    reason: str

    def to_dict(self) -> dict:
        out = asdict(self)
        out["c"], out["b"] = float(self.c), float(self.b)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _ratio(c, b) -> tuple[int | None, str]:
    """Classify ``b/c`` as a positive integer, a non-integer, or ambiguous."""
    if isinstance(c, Rational) and isinstance(b, Rational):
        r = Fraction(b) / Fraction(c)
        if r.denominator == 1 and r > 0:
            return int(r), "ratio_positive_integer"
        return None, "ratio_not_integer"
    r = float(b) / float(c)
    m = round(r)
    rel = abs(r - m) / max(abs(r), 1.0)
    if m < 1 or rel > RATIO_WARN:
        return None, "ratio_not_integer"
    if rel <= RATIO_TOL:
        return int(m), "ratio_positive_integer"
    warnings.warn(f"b/c = {r!r} is within {RATIO_WARN} of {m} but not within {RATIO_TOL}",
                  RuntimeWarning, stacklevel=3)
    return None, "ambiguous_ratio"


def classify(c, b, n: int) -> ClassificationVerdict:
    """Does a local immersion of the ``n``-dimensional space form of curvature
    ``c`` into some space form of curvature ``b`` exist, and of what size?

    Exact for ``int``/``Fraction`` inputs; floats are compared with a relative
    tolerance of ``1e-9`` and reported as ``ambiguous_ratio`` inside the
    ``1e-6`` warning band.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if c == 0 and b == 0:
        return ClassificationVerdict(c, b, n, True, n, "inclusion", "flat_to_flat")
    if b == 0:
        return ClassificationVerdict(c, b, n, False, None, None, "nonflat_to_flat_blocked")
    if c == 0:
        return ClassificationVerdict(c, b, n, False, None, None, "flat_to_nonflat_blocked")
    p, reason = _ratio(c, b)
    if p is None:
        return ClassificationVerdict(c, b, n, False, None, None, reason)
    return ClassificationVerdict(c, b, n, True, math.comb(n + p, n) - 1, "strongly_full", reason)


def source_field(c: float, n: int, domain=None) -> DiastasisField:
    """The standard chart of the ``n``-dimensional model of curvature ``c``."""
    return DiastasisField(model_potential_expr(SpaceFormModel(float(c), n)), domain)


def space_form_h(c: float, b: float, n: int) -> PotentialExpr:
    """``H_b`` of the curvature-``c`` model, as an expression."""
    return h_expression(source_field(c, n), float(b))


def veronese_weight(alpha: tuple, p: int) -> float:
    k = sum(alpha)
    multinomial = math.factorial(k) // math.prod(math.factorial(a) for a in alpha)
    return 0.5 * math.comb(p, k) * 2 ** k * multinomial


def veronese_decomposition(n: int, p: int, domain=(-0.3, 0.3)) -> SeparableDecomposition:
    """Monomial factorisation of ``((1 + 2 sum xi_i eta_i)^p - 1)/2``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    alphas = [a for a in multi_indices(n, p) if sum(a) >= 1]
    A = np.array(alphas, dtype=float)  # (N, n)
    w = np.array([veronese_weight(a, p) for a in alphas])

    def monomials(x: np.ndarray) -> np.ndarray:
        return np.prod(x[:, None, :] ** A[None, :, :], axis=2)

    box = np.tile(np.asarray(domain, dtype=float), (n, 1))
    log = {"method": "veronese", "p": p, "alphas": [list(a) for a in alphas], "weights": w.tolist()}
    return SeparableDecomposition(len(alphas), n, lambda xi: monomials(xi) * w, monomials, box, log)


def veronese(n: int, p: int, c: float = 4.0, domain=(-0.3, 0.3)) -> Immersion:
    """Monomial immersion of the curvature-``c`` model into the one of curvature ``p*c``."""
    dec = veronese_decomposition(n, p, domain)
    return assemble_immersion(dec, SpaceFormModel(p * float(c), dec.N))


def closed_form_dk(case: str, c: float, b: float, k: int, xi, eta) -> float:
    """``d^k H / d xi_1^k`` for the three curvature cases, from the explicit formulas."""
    if k < 1:
        raise ValueError("k must be at least 1")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    s = float(np.dot(xi, eta))
    e1k = eta[0] ** k
    if case == "nonflat_to_flat":
        if 1 + 2 * s <= 0:
            raise DomainError("1 + 2<xi, eta> must be positive")
        return (-2.0) ** (k + 1) * math.factorial(k - 1) / (c * (1 + 2 * s) ** k) * e1k
    if case == "flat_to_nonflat":
        return b ** k / 2 ** (k + 1) * math.exp(b / 2 * s) * e1k
    if case == "nonflat_to_nonflat":
        if 1 + 2 * s <= 0:
            raise DomainError("1 + 2<xi, eta> must be positive")
        p = b / c
        falling = math.prod(p - j for j in range(k))
        if falling == 0:
            return 0.0
        return 2.0 ** (k - 1) * falling * (1 + 2 * s) ** (p - k) * e1k
    raise ValueError(f"unknown case {case!r}; expected one of {CASES}")


def counterexample_text(i_max: int) -> str:
    if i_max < 0:
        raise ValueError("i_max must be non-negative")
    terms = ["xi1*eta1"] + [f"bump(xi1,{i})*eta1^{2 * i + 3}" for i in range(i_max + 1)]
    return " + ".join(terms)


def counterexample_potential(i_max: int) -> PotentialExpr:
    """``xi eta + sum_{i <= i_max} bump(xi, i) eta^(2i+3)`` in one variable."""
    return dsl.parse(counterexample_text(i_max), 1)


def counterexample_grid(lo: float, hi: float, count: int = 32, margin: float = 0.1) -> np.ndarray:
    """Nodes in ``[lo, hi]`` kept at least ``margin`` away from the gluing points."""
    x = np.linspace(lo, hi, count * 4)
    keep = np.abs(x - np.round(x)) >= margin - 1e-12
    keep &= ~((x >= 0) & (x < margin))
    x = x[keep]
    return x[np.linspace(0, len(x) - 1, min(count, len(x))).astype(int)].reshape(-1, 1)


def counterexample_ranks(i_max: int = 3, count: int = 32, eta_count: int = 16,
                         tol: float = 1e-8) -> dict:
    """Sample ranks of ``D_0/4`` on ``xi in [-2, i + 0.9]`` and on ``[-2, -0.5]``."""
    field = DiastasisField(counterexample_potential(i_max), [[-2.0, i_max + 0.9]])
    H = h_expression(field, 0.0)
    eta = np.linspace(-1.0, 1.0, eta_count).reshape(-1, 1)
    nested = [sample_rank(H, counterexample_grid(-2.0, i + 0.9, count), eta, tol)
              for i in range(i_max + 1)]
    restricted = sample_rank(H, counterexample_grid(-2.0, -0.5, count), eta, tol)
    return {"i_max": i_max, "nested_ranks": nested, "restricted_rank": restricted,
            "domains": [[-2.0, i + 0.9] for i in range(i_max + 1)], "restricted_domain": [-2.0, -0.5]}
