"""Split-complex (para-complex) scalars and vectors.

A para-complex number is ``x + tau*y`` with ``tau**2 == 1``.  Besides the
real/imaginary representation every value has null coordinates ``(u, v)``
in the idempotent basis ``e = (1 - tau)/2``, ``ebar = (1 + tau)/2``; in that
basis multiplication is componentwise, which is why most of the package
works with null coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class NullPair:
    """Coefficients of ``z = u*e + v*ebar``."""

    u: float
    v: float


@dataclass(frozen=True)
class SplitComplex:
    re: float
    im: float = 0.0

    @classmethod
    def from_null(cls, u: float, v: float) -> "SplitComplex":
        return cls((u + v) / 2.0, (v - u) / 2.0)

    @property
    def null(self) -> NullPair:
        return NullPair(self.re - self.im, self.re + self.im)

    def conj(self) -> "SplitComplex":
        return SplitComplex(self.re, -self.im)

    def norm_sq(self) -> float:
        return self.re * self.re - self.im * self.im

    def is_null(self) -> bool:
        return self.norm_sq() == 0.0

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return SplitComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return SplitComplex(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return SplitComplex(-self.re, -self.im)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return pc_mul(self, other)

    __rmul__ = __mul__

    def inverse(self) -> "SplitComplex":
        n = self.norm_sq()
        if n == 0.0:
            raise ZeroDivisionError(f"{self} is a zero divisor and has no inverse")
        return SplitComplex(self.re / n, -self.im / n)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __repr__(self) -> str:
        return f"SplitComplex({self.re!r}, {self.im!r})"

    def __str__(self) -> str:
        sign = "-" if self.im < 0 else "+"
        return f"{self.re:g} {sign} {abs(self.im):g}tau"


def _coerce(value):
    if isinstance(value, SplitComplex):
        return value
    if isinstance(value, (int, float, np.integer, np.floating)):
        return SplitComplex(float(value), 0.0)
    return NotImplemented


TAU = SplitComplex(0.0, 1.0)
ONE = SplitComplex(1.0, 0.0)
E = SplitComplex(0.5, -0.5)
EBAR = SplitComplex(0.5, 0.5)


def pc_mul(a: SplitComplex, b: SplitComplex) -> SplitComplex:
    return SplitComplex(a.re * b.re + a.im * b.im, a.re * b.im + a.im * b.re)


def pc_norm_sq(z: SplitComplex) -> float:
    """``|z|^2 = z * conj(z) = x^2 - y^2``; may be zero or negative."""
    return z.norm_sq()


def to_null(z: SplitComplex) -> NullPair:
    return z.null


def from_null(p: NullPair) -> SplitComplex:
    return SplitComplex.from_null(p.u, p.v)


DVector = tuple  # tuple[SplitComplex, ...]


def dvector(*entries) -> tuple:
    """Build a D-vector, coercing real entries to split-complex scalars."""
    if len(entries) == 1 and not isinstance(entries[0], (SplitComplex, int, float)):
        entries = tuple(entries[0])
    if not entries:
        raise ValueError("a D-vector needs at least one entry")
    return tuple(_coerce(z) if not isinstance(z, SplitComplex) else z for z in entries)


def d_inner(z: Sequence[SplitComplex], w: Sequence[SplitComplex]) -> SplitComplex:
    """``<z, w> = sum z_i * conj(w_i)``."""
    if len(z) != len(w):
        raise ValueError(f"length mismatch: {len(z)} != {len(w)}")
    acc = SplitComplex(0.0, 0.0)
    for zi, wi in zip(z, w):
        acc = acc + pc_mul(zi, wi.conj())
    return acc


def d_norm_sq(z: Sequence[SplitComplex]) -> float:
    return sum(zi.norm_sq() for zi in z)


def null_arrays(z: Sequence[SplitComplex]) -> tuple[np.ndarray, np.ndarray]:
    """Split a D-vector into its two real null-coordinate arrays."""
    return (np.array([zi.re - zi.im for zi in z], dtype=float),
            np.array([zi.re + zi.im for zi in z], dtype=float))


def from_null_arrays(u, v) -> tuple:
    return tuple(SplitComplex.from_null(float(a), float(b)) for a, b in zip(u, v))


def _null_matrices(A) -> tuple[np.ndarray, np.ndarray]:
    rows = [list(r) for r in A]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    Au = np.array([[_coerce(a).re - _coerce(a).im for a in r] for r in rows], dtype=float)
    Av = np.array([[_coerce(a).re + _coerce(a).im for a in r] for r in rows], dtype=float)
    return Au, Av


def d_matvec(A, w: Sequence[SplitComplex]) -> tuple:
    Au, Av = _null_matrices(A)
    wu, wv = null_arrays(w)
    return from_null_arrays(Au @ wu, Av @ wv)


def is_d_unitary(A, tol: float = 1e-12) -> bool:
    """True iff ``conj(A)^T A`` is the identity within ``tol``.

    In null coordinates ``A = Au*e + Av*ebar`` and ``||Aw||^2 = (Au wu).(Av wv)``,
    so unitarity reduces to ``Au^T Av = I``.
    """
    Au, Av = _null_matrices(A)
    defect = Au.T @ Av - np.eye(Au.shape[0])
    return bool(np.max(np.abs(defect)) <= tol)
