"""Independent reference computations used by the test suite.

None of these call into the package: split-complex numbers via their 2x2 real
matrix representation, derivatives by Richardson-extrapolated central
differences, ranks by SVD, and closed forms written out by hand.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

# --- split-complex numbers as matrices [[a, b], [b, a]] -----------------------


def sc_matrix(a: float, b: float) -> np.ndarray:
    return np.array([[a, b], [b, a]], dtype=float)


def sc_from_matrix(m: np.ndarray) -> tuple[float, float]:
    return float(m[0, 0]), float(m[0, 1])


def sc_mul(z, w) -> tuple[float, float]:
    return sc_from_matrix(sc_matrix(*z) @ sc_matrix(*w))


def sc_norm_sq(z) -> float:
    # the determinant of the matrix representation is a^2 - b^2
    return float(np.linalg.det(sc_matrix(*z)))


# --- finite differences ---------------------------------------------------------

_STENCILS = {
    0: ([0], [1.0]),
    1: ([-1, 1], [-0.5, 0.5]),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
}


def _central(f, x: np.ndarray, orders, h: float) -> float:
    axes = [_STENCILS[k] for k in orders]
    total = 0.0
    for combo in itertools.product(*[range(len(a[0])) for a in axes]):
        shift = np.array([axes[d][0][c] for d, c in enumerate(combo)], dtype=float)
        weight = math.prod(axes[d][1][c] for d, c in enumerate(combo))
        total += weight * f(x + h * shift)
    return total / h ** sum(orders)


def fd_derivative(f, x, orders, h: float = 2e-3) -> float:
    """Mixed partial of ``f`` at ``x``; orders <= 3 per variable, O(h^4) via Richardson."""
    x = np.asarray(x, dtype=float)
    coarse = _central(f, x, orders, h)
    fine = _central(f, x, orders, h / 2)
    return (4 * fine - coarse) / 3


# --- ranks ----------------------------------------------------------------------


def svd_rank(matrix, rel_tol: float) -> int:
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def grid_matrix(fun, xs, ys) -> np.ndarray:
    return np.array([[fun(x, y) for y in ys] for x in xs], dtype=float)


# --- closed forms ---------------------------------------------------------------


def space_form_h(c: float, b: float, xi, eta) -> float:
    """``H_b`` of the curvature-``c`` chart, written out directly."""
    s = float(np.dot(xi, eta))
    if c == 0 and b == 0:
        return s
    if b == 0:
        return 2.0 / c * math.log(1 + 2 * s)
    if c == 0:
        return 0.5 * math.exp(b * s / 2) - 0.5
    return 0.5 * (1 + 2 * s) ** (b / c) - 0.5


def binomial_monomials(n: int, p: int) -> int:
    """Number of monomials of degree 1..p in n variables, counted one by one."""
    return sum(1 for a in itertools.product(range(p + 1), repeat=n) if 1 <= sum(a) <= p)


def scalar_pfaffian(a: float, x: float) -> float:
    return math.exp(a * x)


def commutator_frobenius(A, B) -> float:
    return float(np.linalg.norm(A @ B - B @ A))


def counterexample_value(x: float, y: float, i_max: int) -> float:
    total = x * y
    for i in range(i_max + 1):
        s = x - i
        if s > 0:
            total += math.exp(-1.0 / s ** (i + 1)) * y ** (2 * i + 3)
    return total
