"""Truncated multivariate Taylor jets in the split variables ``(xi, eta)``.

Jets are bi-graded: ``|I| <= p`` in the xi block and ``|J| <= q`` in the eta
block.  Coefficients are stored densely as an array of shape
``(batch, Mx, My)``, where ``Mx``/``My`` count the monomials of each block in
graded-lex order.  Products are sparse convolutions; unary functions are
applied by composing their univariate Taylor series with the jet.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .dsl import (Bump, BinOp, DomainError, Func, Neg, Num, Pow, PotentialExpr,
                  Var)

DEFAULT_ORDER_CAP = 12

MultiIndex = tuple  # tuple[int, ...]


class JetOrderError(ValueError):
    """Requested derivative order exceeds the jet truncation."""


# --- multi-indices ---------------------------------------------------------

def graded_lex_key(index: Sequence[int]):
    """Sort key: total degree first, then xi_1-heavy before xi_2-heavy."""
    return (sum(index), tuple(-i for i in index))


def multi_indices(n: int, max_degree: int) -> list[tuple]:
    """All multi-indices of length ``n`` and degree ``<= max_degree``, graded-lex."""
    out = []
    for d in range(max_degree + 1):
        for combo in combinations_with_replacement(range(n), d):
            index = [0] * n
            for k in combo:
                index[k] += 1
            out.append(tuple(index))
    return sorted(out, key=graded_lex_key)


def unit_index(n: int, k: int) -> tuple:
    """``e_k`` with a 1 in (0-based) position ``k``."""
    return tuple(1 if j == k else 0 for j in range(n))


def index_add(a: Sequence[int], b: Sequence[int]) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def multi_factorial(index: Sequence[int]) -> int:
    out = 1
    for i in index:
        out *= math.factorial(i)
    return out


# --- jet algebra -----------------------------------------------------------

class _Algebra:
    def __init__(self, n: int, p: int, q: int):
        self.n, self.p, self.q = n, p, q
        self.basis_x = multi_indices(n, p)
        self.basis_y = multi_indices(n, q)
        self.pos_x = {I: k for k, I in enumerate(self.basis_x)}
        self.pos_y = {J: k for k, J in enumerate(self.basis_y)}
        self.mx, self.my = len(self.basis_x), len(self.basis_y)
        self.max_total = p + q

        ax, bx, cx = self._table(self.basis_x, self.pos_x, p)
        ay, by, cy = self._table(self.basis_y, self.pos_y, q)
        my = self.my
        self.gather_a = (ax[:, None] * my + ay[None, :]).ravel()
        self.gather_b = (bx[:, None] * my + by[None, :]).ravel()
        target = (cx[:, None] * my + cy[None, :]).ravel()
        terms = len(target)
        self.scatter = sp.csr_matrix(
            (np.ones(terms), (target, np.arange(terms))), shape=(self.mx * my, terms))

    @staticmethod
    def _table(basis, pos, order):
        a, b, c = [], [], []
        for i, I in enumerate(basis):
            for j, J in enumerate(basis):
                K = index_add(I, J)
                if sum(K) <= order:
                    a.append(i)
                    b.append(j)
                    c.append(pos[K])
        return np.array(a, dtype=np.intp), np.array(b, dtype=np.intp), np.array(c, dtype=np.intp)

    def mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        batch = A.shape[0]
        prod = A.reshape(batch, -1)[:, self.gather_a] * B.reshape(batch, -1)[:, self.gather_b]
        out = self.scatter @ prod.T
        return np.asarray(out.T).reshape(batch, self.mx, self.my)

    def const(self, values, batch: int) -> np.ndarray:
        out = np.zeros((batch, self.mx, self.my))
        out[:, 0, 0] = values
        return out

    def compose(self, A: np.ndarray, series: np.ndarray) -> np.ndarray:
        """``g(A)`` where ``series[:, k] = g^(k)(A_0)/k!``."""
        h = A.copy()
        h[:, 0, 0] = 0.0
        top = min(self.max_total, series.shape[1] - 1)
        out = self.const(series[:, top], A.shape[0])
        for k in range(top - 1, -1, -1):
            out = self.mul(out, h)
            out[:, 0, 0] += series[:, k]
        return out

    def power(self, A: np.ndarray, m: int) -> np.ndarray:
        result = self.const(1.0, A.shape[0])
        base = A
        while m:
            if m & 1:
                result = self.mul(result, base)
            m >>= 1
            if m:
                base = self.mul(base, base)
        return result


@lru_cache(maxsize=64)
def _algebra(n: int, p: int, q: int) -> _Algebra:
    return _Algebra(n, p, q)


# --- univariate series -----------------------------------------------------

def _exp_series(f0: np.ndarray, K: int) -> np.ndarray:
    e0 = np.exp(f0)
    return e0[:, None] / np.array([math.factorial(k) for k in range(K + 1)])[None, :]


def _log_series(f0: np.ndarray, K: int) -> np.ndarray:
    if np.any(f0 <= 0):
        raise DomainError("log of a non-positive value at the jet base point")
    out = np.empty((f0.size, K + 1))
    out[:, 0] = np.log(f0)
    for k in range(1, K + 1):
        out[:, k] = (-1) ** (k + 1) / (k * f0 ** k)
    return out


def _recip_series(f0: np.ndarray, K: int) -> np.ndarray:
    if np.any(f0 == 0):
        raise DomainError("division by zero at the jet base point")
    out = np.empty((f0.size, K + 1))
    for k in range(K + 1):
        out[:, k] = (-1) ** k / f0 ** (k + 1)
    return out


def series_exp(phi: np.ndarray) -> np.ndarray:
    """Taylor coefficients of ``exp(phi(t))`` from those of ``phi`` (rows = batch)."""
    K = phi.shape[1] - 1
    out = np.zeros_like(phi)
    out[:, 0] = np.exp(phi[:, 0])
    for k in range(1, K + 1):
        j = np.arange(1, k + 1)
        out[:, k] = (j * phi[:, 1:k + 1] * out[:, k - 1::-1][:, :k]).sum(axis=1) / k
    return out


def bump_series(x0: np.ndarray, i: int, K: int) -> np.ndarray:
    """Taylor coefficients at ``x0`` of ``t -> bump(x0 + t, i)`` up to ``t^K``.

    With ``s = x0 - i > 0`` and ``m = i + 1`` the exponent is
    ``-(s + t)^(-m) = -sum_k binom(-m, k) s^(-m-k) t^k``; the flat side
    ``s <= 0`` has an identically zero series.
    """
    x0 = np.asarray(x0, dtype=float)
    out = np.zeros((x0.size, K + 1))
    s = x0 - i
    live = s > 0
    if not np.any(live):
        return out
    m = i + 1
    sl = s[live]
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        phi = np.empty((sl.size, K + 1))
        binom = 1.0
        for k in range(K + 1):
            if k:
                binom *= (-m - k + 1) / k
            phi[:, k] = -binom * sl ** (-m - k)
        val = series_exp(phi)
    # exp(phi_0) underflows long before the polynomial factors matter
    val[~np.isfinite(val)] = 0.0
    val[np.exp(phi[:, 0]) == 0.0] = 0.0
    out[live] = val
    return out


# --- lifting expressions ---------------------------------------------------

def _points(values, n: int, batch: int | None = None) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if n == 1 and arr.size != 1 else arr.reshape(1, -1)
    if arr.shape[1] != n:
        raise ValueError(f"expected points with {n} coordinates, got shape {arr.shape}")
    if batch is not None and arr.shape[0] == 1 and batch > 1:
        arr = np.repeat(arr, batch, axis=0)
    return arr


def _lift(node, alg: _Algebra, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    batch = xi.shape[0]
    if isinstance(node, Num):
        return alg.const(node.value, batch)
    if isinstance(node, Var):
        out = alg.const(0.0, batch)
        k = node.index - 1
        if node.kind == "xi":
            out[:, 0, 0] = xi[:, k]
            if alg.p >= 1:
                out[:, alg.pos_x[unit_index(alg.n, k)], 0] = 1.0
        else:
            out[:, 0, 0] = eta[:, k]
            if alg.q >= 1:
                out[:, 0, alg.pos_y[unit_index(alg.n, k)]] = 1.0
        return out
    if isinstance(node, Neg):
        return -_lift(node.arg, alg, xi, eta)
    if isinstance(node, BinOp):
        a = _lift(node.left, alg, xi, eta)
        b = _lift(node.right, alg, xi, eta)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return alg.mul(a, b)
        return alg.mul(a, alg.compose(b, _recip_series(b[:, 0, 0], alg.max_total)))
    if isinstance(node, Pow):
        return alg.power(_lift(node.base, alg, xi, eta), node.exponent)
    if isinstance(node, Func):
        a = _lift(node.arg, alg, xi, eta)
        series = _exp_series if node.name == "exp" else _log_series
        return alg.compose(a, series(a[:, 0, 0], alg.max_total))
    if isinstance(node, Bump):
        a = _lift(node.arg, alg, xi, eta)
        return alg.compose(a, bump_series(a[:, 0, 0], node.index, alg.max_total))
    raise TypeError(f"not an expression node: {node!r}")


def _check_orders(orders, cap: int) -> tuple[int, int]:
    p, q = (int(o) for o in orders)
    if p < 0 or q < 0:
        raise JetOrderError("orders must be non-negative")
    if p > cap or q > cap:
        raise JetOrderError(f"order {max(p, q)} exceeds the jet cap {cap}")
    return p, q


@dataclass(frozen=True)
class JetBatch:
    """Jets of one expression at several base points."""

    n: int
    orders: tuple
    xi: np.ndarray
    eta: np.ndarray
    coeffs: np.ndarray  # (batch, Mx, My)

    @property
    def _alg(self) -> _Algebra:
        return _algebra(self.n, *self.orders)

    def coeff(self, I, J=None) -> np.ndarray:
        alg = self._alg
        I = tuple(I)
        J = tuple(J) if J is not None else (0,) * self.n
        if sum(I) > alg.p or sum(J) > alg.q:
            raise JetOrderError(f"derivative {I},{J} outside jet orders {self.orders}")
        return self.coeffs[:, alg.pos_x[I], alg.pos_y[J]]

    def derivative(self, I, J=None) -> np.ndarray:
        J = tuple(J) if J is not None else (0,) * self.n
        return self.coeff(I, J) * multi_factorial(I) * multi_factorial(J)

    def __getitem__(self, k: int) -> "MultiJet":
        return MultiJet(self.n, self.orders, self.xi[k], self.eta[k], self.coeffs[k])


@dataclass(frozen=True)
class MultiJet:
    """Taylor data of one function at one base point ``(xi0, eta0)``."""

    n: int
    orders: tuple
    base_xi: np.ndarray
    base_eta: np.ndarray
    coeffs: np.ndarray  # (Mx, My)

    @property
    def max_order_xi(self) -> int:
        return self.orders[0]

    @property
    def max_order_eta(self) -> int:
        return self.orders[1]

    def coeff(self, I, J) -> float:
        alg = _algebra(self.n, *self.orders)
        I, J = tuple(I), tuple(J)
        if sum(I) > alg.p or sum(J) > alg.q:
            raise JetOrderError(f"derivative {I},{J} outside jet orders {self.orders}")
        return float(self.coeffs[alg.pos_x[I], alg.pos_y[J]])

    def items(self):
        alg = _algebra(self.n, *self.orders)
        for I, a in alg.pos_x.items():
            for J, b in alg.pos_y.items():
                yield (I, J), float(self.coeffs[a, b])


def jet_lift_many(expr: PotentialExpr, xi, eta, orders, cap: int = DEFAULT_ORDER_CAP) -> JetBatch:
    """Jets of ``expr`` at the point pairs ``(xi[k], eta[k])``.

    A single point on either side is broadcast against the other.
    """
    p, q = _check_orders(orders, cap)
    n = expr.nvars
    xi_pts = _points(xi, n)
    eta_pts = _points(eta, n)
    batch = max(len(xi_pts), len(eta_pts))
    xi_pts = _points(xi_pts, n, batch)
    eta_pts = _points(eta_pts, n, batch)
    if len(xi_pts) != len(eta_pts):
        raise ValueError("xi and eta point counts differ")
    coeffs = _lift(expr.ast, _algebra(n, p, q), xi_pts, eta_pts)
    return JetBatch(n, (p, q), xi_pts, eta_pts, coeffs)


def jet_lift(expr: PotentialExpr, base, orders, cap: int = DEFAULT_ORDER_CAP) -> MultiJet:
    """Jet of ``expr`` at ``base = (xi0, eta0)``."""
    xi0, eta0 = base
    return jet_lift_many(expr, np.atleast_1d(np.asarray(xi0, float)).reshape(1, -1),
                         np.atleast_1d(np.asarray(eta0, float)).reshape(1, -1),
                         orders, cap)[0]


def jet_derivative(j: MultiJet, I, J) -> float:
    """``d^{|I|+|J|} f / dxi^I deta^J`` at the jet's base point."""
    return j.coeff(I, J) * multi_factorial(I) * multi_factorial(J)


def xi_derivatives(expr: PotentialExpr, xi, eta, indices, cap: int = DEFAULT_ORDER_CAP) -> np.ndarray:
    """Rows ``d^I f/dxi^I`` at each point pair, shape ``(len(indices), batch)``."""
    indices = [tuple(I) for I in indices]
    order = max((sum(I) for I in indices), default=0)
    jets = jet_lift_many(expr, xi, eta, (order, 0), cap)
    return np.array([jets.derivative(I) for I in indices])


def eta_derivatives(expr: PotentialExpr, xi, eta, indices, cap: int = DEFAULT_ORDER_CAP) -> np.ndarray:
    """Mirror of :func:`xi_derivatives` for the eta block."""
    indices = [tuple(J) for J in indices]
    order = max((sum(J) for J in indices), default=0)
    jets = jet_lift_many(expr, xi, eta, (0, order), cap)
    zero = (0,) * expr.nvars
    return np.array([jets.derivative(zero, J) for J in indices])
