"""First-order Pfaffian systems ``dU/dxi_k = U A_k(xi)``.

The system is integrable iff for every pair ``h, k``::

    dA_k/dxi_h - dA_h/dxi_k + A_h A_k - A_k A_h = 0

:func:`pfaffian_solve` integrates along the axis-aligned path from ``xi0``
to ``target`` (coordinates in index order) with classical RK4 and checks the
condition above along the way.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

FD_STEP = 1e-5
DEFAULT_STEP = 1e-3
COMPAT_TOL = 1e-6


class CompatibilityError(RuntimeError):
    def __init__(self, point, residual):
        super().__init__(f"integrability condition violated at {np.round(point, 12).tolist()} "
                         f"(residual {residual:.3e})")
        self.point = np.asarray(point)
        self.residual = residual


class StepError(RuntimeError):
    """Step size underflow or a step too large for the local field."""


@dataclass(frozen=True)
class MatrixField:
    """``A_k(xi)`` for ``k = 1..n``; each callable returns an ``N x N`` array."""

    fields: tuple

    def __init__(self, fields: Sequence[Callable]):
        object.__setattr__(self, "fields", tuple(fields))

    @classmethod
    def constant(cls, *matrices) -> "MatrixField":
        mats = [np.array(m, dtype=float) for m in matrices]
        return cls([lambda xi, M=M: M for M in mats])

    @property
    def n(self) -> int:
        return len(self.fields)

    def __call__(self, k: int, xi) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.fields[k](np.asarray(xi, dtype=float)), dtype=float))


def _partial(A: MatrixField, k: int, h: int, xi: np.ndarray, step: float) -> np.ndarray:
    e = np.zeros_like(xi)
    e[h] = step
    return (A(k, xi + e) - A(k, xi - e)) / (2 * step)


def compatibility_residual(A: MatrixField, p, step: float = FD_STEP) -> float:
    """Max over pairs of the Frobenius norm of the integrability defect at ``p``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    worst = 0.0
    for h in range(A.n):
        for k in range(h + 1, A.n):
            Ah, Ak = A(h, p), A(k, p)
            defect = (_partial(A, k, h, p, step) - _partial(A, h, k, p, step)
                      + Ah @ Ak - Ak @ Ah)
            worst = max(worst, float(np.linalg.norm(defect)))
    return worst


MIN_STEP_FRACTION = 1e-4


def _rk4_step(A: MatrixField, k: int, xi: np.ndarray, U: np.ndarray, a0: float, h: float,
              limit: float | None) -> np.ndarray:
    def field(t):
        point = xi.copy()
        point[k] = t
        M = A(k, point)
        if limit is not None and abs(h) * np.linalg.norm(M, 2) > limit:
            raise _StageTooLarge()
        return M

    k1 = U @ field(a0)
    k2 = (U + 0.5 * h * k1) @ field(a0 + 0.5 * h)
    k3 = (U + 0.5 * h * k2) @ field(a0 + 0.5 * h)
    k4 = (U + h * k3) @ field(a0 + h)
    return U + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


class _StageTooLarge(Exception):
    pass


def _rk4_leg(A: MatrixField, k: int, xi: np.ndarray, U: np.ndarray, end: float,
             step: float, check: Callable | None, max_step_norm: float | None,
             min_step: float | None = None) -> np.ndarray:
    """Classical RK4 along coordinate ``k`` from ``xi[k]`` to ``end``.

    Without ``max_step_norm`` the step is fixed (the leg is split evenly).
    With it, steps shrink locally so that ``h * |A_k|`` stays below the
    bound; a step below ``min_step`` (default ``MIN_STEP_FRACTION * step``)
    is a step underflow.
    """
    span = end - xi[k]
    if span == 0:
        return U
    count = max(1, int(np.ceil(abs(span) / step - 1e-9)))
    if count > 10_000_000:
        raise StepError("step size too small for the requested path")
    if max_step_norm is None:
        h = span / count
        for i in range(count):
            U = _rk4_step(A, k, xi, U, xi[k], h, None)
            xi[k] = xi[k] + h if i < count - 1 else end
            if check is not None:
                check(xi, i)
        return U

    direction = np.sign(span)
    floor = MIN_STEP_FRACTION * step if min_step is None else min_step
    i = 0
    while direction * (end - xi[k]) > 0:
        remaining = abs(end - xi[k])
        norm = np.linalg.norm(A(k, xi), 2)
        h = min(step, remaining, max_step_norm / norm if norm > 0 else step)
        while True:
            if h < floor and h < remaining:
                raise StepError(f"step underflow: |A| = {norm:.3e} at {xi.tolist()}")
            try:
                U = _rk4_step(A, k, xi, U, xi[k], direction * h, 2 * max_step_norm)
                break
            except _StageTooLarge:
                h /= 2
        xi[k] = end if h >= remaining else xi[k] + direction * h
        if check is not None:
            check(xi, i)
        i += 1
    return U


def _integrate(A, xi0, U0, target, step, compat_tol, check_every, max_step_norm,
               min_step=None, compat_relative=False):
    xi = np.atleast_1d(np.array(xi0, dtype=float))
    target = np.atleast_1d(np.asarray(target, dtype=float))
    if step <= 0 or not np.isfinite(step):
        raise StepError("step must be positive")
    U = np.array(U0, dtype=float)

    check = None
    if A.n > 1 and compat_tol is not None:
        def check(point, i):
            if i % check_every == 0:
                res = compatibility_residual(A, point)
                bound = compat_tol
                if compat_relative:
                    bound *= 1.0 + sum(np.linalg.norm(A(k, point)) ** 2 for k in range(A.n))
                if res > bound:
                    raise CompatibilityError(point, res)
        check(xi, 0)
    for k in range(A.n):
        U = _rk4_leg(A, k, xi, U, target[k], step, check, max_step_norm, min_step)
    return U


def pfaffian_solve(A: MatrixField, xi0, U0, target, step: float = DEFAULT_STEP,
                   compat_tol: float | None = COMPAT_TOL, check_every: int = 1,
                   max_step_norm: float | None = None, return_error: bool = False,
                   min_step: float | None = None, compat_relative: bool = False):
    """``U(target)`` for ``dU/dxi_k = U A_k``, ``U(xi0) = U0``.

    The path is axis-aligned, one coordinate at a time in index order.  The
    compatibility defect is checked every ``check_every`` steps against
    ``compat_tol`` (scaled by ``1 + sum |A_k|^2`` when ``compat_relative``).
    With ``return_error`` the solve is repeated at half step and
    ``(U, err)`` is returned, ``err`` being the Richardson estimate
    ``max|U_h - U_{h/2}| / 15`` of the remaining error.
    """
    args = (compat_tol, check_every, max_step_norm, min_step, compat_relative)
    U = _integrate(A, xi0, U0, target, step, *args)
    if not return_error:
        return U
    U_half = _integrate(A, xi0, U0, target, step / 2, *args)
    return U_half, float(np.max(np.abs(U - U_half)) / 15.0)


def invertibility_persists(A: MatrixField, xi0, U0, probes, threshold: float = 1e-12,
                           step: float = DEFAULT_STEP, **kwargs) -> bool:
    """True iff ``|det U(p)| > threshold`` at every probe point.

    By Liouville's formula ``det U`` never vanishes when ``U0`` is invertible,
    so a small determinant is reported together with an underflow warning.
    """
    U0 = np.array(U0, dtype=float)
    if abs(np.linalg.det(U0)) <= threshold:
        return False
    for p in probes:
        det = np.linalg.det(pfaffian_solve(A, xi0, U0, p, step, **kwargs))
        if abs(det) <= threshold:
            if det != 0:
                warnings.warn(f"|det U| = {abs(det):.3e} at {np.atleast_1d(p).tolist()}: "
                              "numerical underflow, not a true singularity", RuntimeWarning,
                              stacklevel=2)
            return False
    return True
