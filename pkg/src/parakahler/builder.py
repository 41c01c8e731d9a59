"""Factorisations ``H(xi, eta) = sum_a u_a(xi) v_a(eta)`` and the immersions they define.

Two independent constructions are provided:

* :func:`cross_decompose` -- greedy skeleton (cross) decomposition with
  complete pivoting; the factors are closures over ``H`` itself, so they can
  be evaluated anywhere, not only on the pivot grid.
* :func:`pde_decompose` -- the derivative route: ``v_I(eta) = d^I H(xi*, eta)``
  and ``u(xi) = e_0 U(xi)^{-1}`` with ``U`` solving the Pfaffian system whose
  coefficients come from the dependency relations of the index set.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diastasis import DiastasisField, HereditaryReport, as_box, hereditary_check, sample_box
from .dsl import PotentialExpr
from .jets import index_add, unit_index, xi_derivatives
from .pfaffian import CompatibilityError, MatrixField, StepError, pfaffian_solve
from .separability import (DEPENDENCY_TOL, ZERO_ROW, IndexSet, box_grid, dependency_check,
                           pivoted_rank)
from .spaceforms import AmbientPoint, SpaceFormModel

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NotFiniteRank(RuntimeError):
    """The cap on the number of terms was reached with the residual above tolerance."""

    def __init__(self, message, decomposition=None, residual=None):
        super().__init__(message)
        self.decomposition = decomposition
        self.residual = residual


class OutsideRegularSet(RuntimeError):
    """The leading dependency coefficient vanishes here (point outside Omega')."""


def _pairs(H, xi, eta) -> np.ndarray:
    """``H`` at point pairs ``(xi[k], eta[k])``; both ``(m, n)`` or broadcastable."""
    values = np.asarray(H(xi, eta), dtype=float)
    if values.ndim == np.ndim(xi) and values.shape[-1] == 1 and np.ndim(xi) > 1:
        values = values[..., 0]
    return values


def _as_pts(values, n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(-1, 1) if n == 1 else arr.reshape(1, -1)
    return arr


@dataclass
class SeparableDecomposition:
    N: int
    n: int
    u_eval: Callable
    v_eval: Callable
    domain: np.ndarray
    construction_log: dict = field(default_factory=dict)

    def u(self, xi) -> np.ndarray:
        xi = _as_pts(xi, self.n)
        if self.N == 0:
            return np.zeros((len(xi), 0))
        return np.asarray(self.u_eval(xi), dtype=float).reshape(len(xi), self.N)

    def v(self, eta) -> np.ndarray:
        eta = _as_pts(eta, self.n)
        if self.N == 0:
            return np.zeros((len(eta), 0))
        return np.asarray(self.v_eval(eta), dtype=float).reshape(len(eta), self.N)

    @property
    def u_funcs(self) -> list:
        return [lambda xi, a=a: self.u(xi)[:, a] for a in range(self.N)]

    @property
    def v_funcs(self) -> list:
        return [lambda eta, a=a: self.v(eta)[:, a] for a in range(self.N)]

    def __call__(self, xi, eta) -> np.ndarray:
        """``sum_a u_a(xi_k) v_a(eta_k)`` at point pairs."""
        return np.sum(self.u(xi) * self.v(eta), axis=1)

    def grid(self, xi, eta) -> np.ndarray:
        return self.u(xi) @ self.v(eta).T

    def residual(self, H, xi_grid, eta_grid) -> float:
        xi = _as_pts(xi_grid, self.n)
        eta = _as_pts(eta_grid, self.n)
        values = np.asarray(H(xi[:, None, :], eta[None, :, :]), dtype=float)
        if values.ndim == 3:
            values = values[..., 0]
        return float(np.max(np.abs(values - self.grid(xi, eta)), initial=0.0))

    def to_dict(self) -> dict:
        return {"N": self.N, "n": self.n, "domain": self.domain.tolist(),
                **_jsonable(self.construction_log)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# --- cross / skeleton route --------------------------------------------------

class _Skeleton:
    """Closures for the greedy cross decomposition built so far."""

    def __init__(self, H, n: int):
        self.H = H
        self.n = n
        self.xi_star = np.zeros((0, n))
        self.eta_star = np.zeros((0, n))
        self.pivots: list[float] = []
        self.v_at_star = np.zeros((0, 0))  # [k, j] = v_j(eta*_k), j < k
        self.u_at_star = np.zeros((0, 0))  # [k, j] = u_j(xi*_k), j < k

    @property
    def N(self) -> int:
        return len(self.pivots)

    def _h(self, xi, eta) -> np.ndarray:
        values = np.asarray(self.H(xi, eta), dtype=float)
        if values.ndim == 3 and values.shape[-1] == 1:
            values = values[..., 0]
        return values

    def u(self, xi: np.ndarray) -> np.ndarray:
        if self.N == 0:
            return np.zeros((len(xi), 0))
        Hx = self._h(xi[:, None, :], self.eta_star[None, :, :]).reshape(len(xi), self.N)
        U = np.zeros((len(xi), self.N))
        for k in range(self.N):
            U[:, k] = (Hx[:, k] - U[:, :k] @ self.v_at_star[k, :k]) / self.pivots[k]
        return U

    def v(self, eta: np.ndarray) -> np.ndarray:
        if self.N == 0:
            return np.zeros((len(eta), 0))
        Hy = self._h(self.xi_star[None, :, :], eta[:, None, :]).reshape(len(eta), self.N)
        V = np.zeros((len(eta), self.N))
        for k in range(self.N):
            V[:, k] = Hy[:, k] - V[:, :k] @ self.u_at_star[k, :k]
        return V

    def residual_at(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """``R(xi_i, eta_j)`` on the product grid."""
        Hg = self._h(xi[:, None, :], eta[None, :, :]).reshape(len(xi), len(eta))
        return Hg - self.u(xi) @ self.v(eta).T

    def append(self, xs: np.ndarray, es: np.ndarray) -> float:
        xs = xs.reshape(1, self.n)
        es = es.reshape(1, self.n)
        u_prev = self.u(xs)[0]
        v_prev = self.v(es)[0]
        pivot = float(self._h(xs, es).reshape(-1)[0] - u_prev @ v_prev)
        N = self.N
        v_at = np.zeros((N + 1, N + 1))
        u_at = np.zeros((N + 1, N + 1))
        v_at[:N, :N] = self.v_at_star
        u_at[:N, :N] = self.u_at_star
        v_at[N, :N] = v_prev
        u_at[N, :N] = u_prev
        self.v_at_star, self.u_at_star = v_at, u_at
        self.xi_star = np.vstack([self.xi_star, xs])
        self.eta_star = np.vstack([self.eta_star, es])
        self.pivots.append(pivot)
        return pivot


def _golden_max(fun: Callable[[float], float], lo: float, hi: float, iters: int = 40) -> tuple[float, float]:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc > fd else (d, fd)


def _refine(point: np.ndarray, value_at: Callable, box: np.ndarray, radius: np.ndarray) -> np.ndarray:
    best = point.copy()
    best_val = value_at(best)
    for k in range(len(best)):
        lo = max(box[k, 0], best[k] - radius[k])
        hi = min(box[k, 1], best[k] + radius[k])
        if hi <= lo:
            continue

        def along(t, k=k):
            trial = best.copy()
            trial[k] = t
            return value_at(trial)

        t, val = _golden_max(along, lo, hi)
        if val > best_val:
            best[k], best_val = t, val
    return best


def _check_vanishing(H, box: np.ndarray, n: int, rng) -> None:
    pts = sample_box(box, 16, rng)
    zero = np.zeros((16, n))
    on_axes = np.concatenate([np.ravel(_pairs(H, zero, pts)), np.ravel(_pairs(H, pts, zero))])
    scale = np.max(np.abs(_pairs(H, pts, pts[::-1])), initial=0.0)
    if np.max(np.abs(on_axes)) > 1e-12 * max(scale, 1.0):
        raise ValueError("H(0, eta) and H(xi, 0) must vanish (u(0) = v(0) = 0)")


def cross_decompose(H, domain, tol: float = 1e-9, maxN: int = 32, grid: int = 24,
                    refine: bool = True, seed: int = 0, n: int | None = None) -> SeparableDecomposition:
    """Greedy skeleton decomposition of ``H`` on ``domain x domain``.

    Each step picks the largest residual entry on the sample grid (complete
    pivoting), polishes it by golden-section search in each coordinate and
    appends ``u_k = R(., eta*)/R(xi*, eta*)``, ``v_k = R(xi*, .)``.  Stops
    when the grid residual is below ``tol`` times the largest ``|H|`` on the
    grid and a fresh check grid agrees; raises :class:`NotFiniteRank` after
    ``maxN`` terms otherwise.
    """
    n = n or (H.nvars if isinstance(H, PotentialExpr) else len(np.atleast_2d(domain)))
    box = as_box(domain, n)
    rng = np.random.default_rng(seed)
    _check_vanishing(H, box, n, rng)

    xi_pool = box_grid(box, grid, n, seed)
    eta_pool = box_grid(box, grid, n, seed + 1)
    if n == 1:
        eta_pool = eta_pool.copy()
    sk = _Skeleton(H, n)
    R = sk.residual_at(xi_pool, eta_pool)
    scale = float(np.max(np.abs(R), initial=0.0))
    radius = (box[:, 1] - box[:, 0]) / grid
    history = []
    checked = 0

    def finish(status: str) -> SeparableDecomposition:
        log = {"method": "cross", "status": status, "pivots": [
            {"xi": sk.xi_star[k].tolist(), "eta": sk.eta_star[k].tolist(), "value": sk.pivots[k]}
            for k in range(sk.N)], "residual_history": history, "scale": scale, "tol": tol}
        return SeparableDecomposition(sk.N, n, sk.u, sk.v, box, log)

    if scale == 0:
        return finish("zero")
    while True:
        i, j = np.unravel_index(np.argmax(np.abs(R)), R.shape)
        if abs(R[i, j]) <= tol * scale:
            # independent check grid before accepting
            check_xi = sample_box(box, grid, rng)
            check_eta = sample_box(box, grid, rng)
            Rc = sk.residual_at(check_xi, check_eta)
            if np.max(np.abs(Rc)) <= tol * scale or checked >= 3:
                if np.max(np.abs(Rc)) > tol * scale:
                    raise NotFiniteRank("residual off the pivot grid stays above tolerance",
                                        finish("cap"), float(np.max(np.abs(Rc)) / scale))
                return finish("converged")
            checked += 1
            xi_pool = np.vstack([xi_pool, check_xi])
            eta_pool = np.vstack([eta_pool, check_eta])
            R = sk.residual_at(xi_pool, eta_pool)
            continue
        if sk.N >= maxN:
            residual = float(np.max(np.abs(R)) / scale)
            raise NotFiniteRank(f"not finite-rank within cap {maxN} (relative residual {residual:.3e})",
                                finish("cap"), residual)
        xs, es = xi_pool[i].copy(), eta_pool[j].copy()
        if refine:
            xs = _refine(xs, lambda x: abs(sk.residual_at(x[None], es[None])[0, 0]), box, radius)
            es = _refine(es, lambda e: abs(sk.residual_at(xs[None], e[None])[0, 0]), box, radius)
        sk.append(xs, es)
        R = R - np.outer(sk.u(xi_pool)[:, -1], sk.v(eta_pool)[:, -1])
        history.append(float(np.max(np.abs(R)) / scale))


# --- PDE route -----------------------------------------------------------------

class _DerivativeField:
    """``M_k(xi)`` with ``d^{I+e_k} H = -sum_J M_k[I, J] d^J H`` on the eta samples."""

    def __init__(self, h: PotentialExpr, indices: list, eta_samples: np.ndarray,
                 tol: float, guard: float):
        self.h = h
        self.n = h.nvars
        self.I = indices
        self.eta = eta_samples
        self.tol = tol
        self.guard = guard
        self.pos = {I: a for a, I in enumerate(indices)}
        self.targets = sorted({index_add(I, unit_index(self.n, k))
                               for I in indices for k in range(self.n)} - set(indices))
        self.all = indices + self.targets
        self._cache_key = None
        self._cache = None
        self.evaluations = 0

    def rows(self, xi: np.ndarray) -> np.ndarray:
        m = len(self.eta)
        return xi_derivatives(self.h, np.repeat(xi.reshape(1, -1), m, axis=0), self.eta, self.all)

    def matrices(self, xi) -> list[np.ndarray]:
        xi = np.asarray(xi, dtype=float)
        key = xi.tobytes()
        if key == self._cache_key:
            return self._cache
        self.evaluations += 1
        rows = self.rows(xi)
        N = len(self.I)
        R = rows[:N]
        norms = np.linalg.norm(R, axis=1)
        if np.any(norms == 0):
            raise OutsideRegularSet(f"a basis row vanishes at {xi.tolist()}")
        Rn = R / norms[:, None]
        sv = np.linalg.svd(Rn, compute_uv=False)
        if sv[-1] < self.guard:
            raise OutsideRegularSet(f"basis rows nearly dependent at {xi.tolist()} (sigma {sv[-1]:.1e})")
        coeff = {}
        for t, K in enumerate(self.targets):
            r = rows[N + t]
            rnorm = np.linalg.norm(r)
            if rnorm <= ZERO_ROW * norms.max():
                coeff[K] = np.zeros(N)
                continue
            c, *_ = np.linalg.lstsq(Rn.T, r, rcond=None)
            if np.linalg.norm(Rn.T @ c - r) > self.tol * rnorm:
                raise OutsideRegularSet(f"{K} left the span at {xi.tolist()}")
            coeff[K] = c / norms
        mats = []
        for k in range(self.n):
            M = np.zeros((N, N))
            for I, a in self.pos.items():
                K = index_add(I, unit_index(self.n, k))
                if K in self.pos:
                    M[a, self.pos[K]] = -1.0
                else:
                    M[a] = -coeff[K]
            mats.append(M)
        self._cache_key, self._cache = key, mats
        return mats

    def field(self) -> MatrixField:
        return MatrixField([lambda xi, k=k: self.matrices(xi)[k] for k in range(self.n)])


def pde_decompose(h: PotentialExpr, index_set: IndexSet, domain, tol: float = DEPENDENCY_TOL,
                  step: float = 1e-3, xi_count: int = 40, eta_count: int | None = None,
                  seed: int = 0, compat_tol: float = 1e-5, check_every: int = 10,
                  max_step_norm: float = 0.05, guard: float = 1e-6) -> SeparableDecomposition:
    """Decompose ``h`` through the Pfaffian system of its index set.

    ``v_I(eta) = d^I h(xi*, eta)`` (so ``U(xi*) = I``) and
    ``u(xi) = e_0 U(xi)^{-1}``, integrating from ``xi*`` to each requested
    ``xi``.  Points the integration cannot reach inside the regular set
    (where the leading coefficient is bounded away from zero) are filled in
    by ``u(xi) = [h(xi, eta_j)]_j [v_i(eta_j)]^{-1}`` at ``N`` well-conditioned
    nodes ``eta_j``.
    """
    if not index_set.certified:
        raise ValueError("index set did not stabilise; the rank is not certified")
    indices = [tuple(I) for I in index_set.indices]
    N, n = len(indices), h.nvars
    if N == 0:
        raise ValueError("empty index set: H vanishes identically")
    if indices[0] != (0,) * n:
        raise ValueError("the index set must start with the zero multi-index")
    box = as_box(domain, n)
    rng = np.random.default_rng(seed)
    eta_samples = sample_box(box, eta_count or 2 * N + 4, rng)

    # base point: largest estimated leading coefficient over a dense sample
    xi_samples = sample_box(box, xi_count, rng)
    targets = sorted({index_add(I, unit_index(n, k)) for I in indices for k in range(n)} - set(indices))
    leading = np.full(len(xi_samples), np.inf)
    dense = True
    for K in targets:
        rep = dependency_check(h, K, indices, xi_samples, eta_samples, tol)
        if not rep.dependent:
            raise ValueError(f"derivative {K} is not dependent on the index set")
        leading = np.minimum(leading, rep.leading)
        dense &= rep.dense_support
    if not targets:
        leading[:] = 1.0
    xi_star = xi_samples[int(np.argmax(leading))]

    dfield = _DerivativeField(h, indices, eta_samples, max(tol, 1e-6), guard)
    A = dfield.field()
    dfield.matrices(xi_star)

    def v_eval(eta: np.ndarray) -> np.ndarray:
        return xi_derivatives(h, np.repeat(xi_star[None], len(eta), axis=0), eta, indices).T

    # nodes for the extension formula: pivoted rows of V on a candidate set
    candidates = sample_box(box, max(8 * N, 32), rng)
    _, pivots = pivoted_rank(v_eval(candidates), 1e-14)
    nodes = candidates[[p[0] for p in pivots[:N]]]
    V_nodes = v_eval(nodes)  # [j, i] = v_i(eta_j)
    if len(nodes) < N or abs(np.linalg.det(V_nodes)) == 0:
        raise ValueError("v's do not span N dimensions on the sampled domain")
    V_inv = np.linalg.inv(V_nodes.T)  # [v_i(eta_j)]^{-1}
    stats = {"pfaffian": 0, "extension": 0}

    def extend(xi: np.ndarray) -> np.ndarray:
        Hrow = np.asarray(h(np.repeat(xi[None], N, axis=0), nodes), dtype=float)
        return Hrow @ V_inv

    def solve(start_xi, start_U, target):
        return pfaffian_solve(A, start_xi, start_U, target, step, compat_tol=compat_tol,
                              check_every=check_every, max_step_norm=max_step_norm,
                              min_step=step / 20, compat_relative=True)

    e0 = np.zeros(N)
    e0[0] = 1.0

    def u_eval(xi: np.ndarray) -> np.ndarray:
        out = np.zeros((len(xi), N))
        done = np.zeros(len(xi), dtype=bool)
        if n == 1:
            for side in (1.0, -1.0):
                order = [k for k in np.argsort(side * xi[:, 0]) if side * (xi[k, 0] - xi_star[0]) >= 0]
                current, U = xi_star.copy(), np.eye(N)
                for k in order:
                    try:
                        U = solve(current, U, xi[k])
                    except (StepError, OutsideRegularSet, np.linalg.LinAlgError):
                        break
                    current = xi[k].copy()
                    out[k] = np.linalg.solve(U.T, e0)
                    done[k] = True
        else:
            for k in range(len(xi)):
                try:
                    U = solve(xi_star, np.eye(N), xi[k])
                except (StepError, OutsideRegularSet, np.linalg.LinAlgError):
                    continue
                out[k] = np.linalg.solve(U.T, e0)
                done[k] = True
        for k in np.flatnonzero(~done):
            out[k] = extend(xi[k])
        stats["pfaffian"] += int(done.sum())
        stats["extension"] += int((~done).sum())
        return out

    log = {"method": "pde", "index_set": [list(I) for I in indices], "xi_star": xi_star.tolist(),
           "leading_at_xi_star": float(leading.max()), "eta_nodes": nodes.tolist(),
           "density_hypothesis": "sampled" if dense else "not supported on the sample",
           "step": step, "evaluations": stats}
    return SeparableDecomposition(N, n, u_eval, v_eval, box, log)


# --- immersions ------------------------------------------------------------------

@dataclass
class Immersion:
    """A para-holomorphic map into a space-form model, in chart null coordinates.

    ``map(xi, eta)`` returns ``(U, V)`` of shape ``(m, target.dim)``: the
    ``a``-th ambient coordinate is ``U[:, a] e + V[:, a] ebar`` (flat) or the
    ``a``-th chart coordinate of ``[1 : sqrt(2)(U e + V ebar)]`` (projective).
    """

    target: SpaceFormModel
    n: int
    map: Callable
    decomposition: SeparableDecomposition | None = None
    full: bool = True

    def null_components(self, xi, eta) -> tuple[np.ndarray, np.ndarray]:
        xi = _as_pts(xi, self.n)
        eta = _as_pts(eta, self.n)
        U, V = self.map(xi, eta)
        return np.asarray(U, float), np.asarray(V, float)

    def point(self, xi, eta) -> AmbientPoint:
        U, V = self.null_components(np.atleast_1d(xi).reshape(1, -1), np.atleast_1d(eta).reshape(1, -1))
        if self.target.is_flat:
            return AmbientPoint.flat(U[0], V[0])
        return AmbientPoint.from_chart(U[0], V[0])

    @classmethod
    def from_exprs(cls, target: SpaceFormModel, u_exprs, v_exprs) -> "Immersion":
        """User-supplied components as DSL expressions (may depend on both blocks)."""
        if len(u_exprs) != len(v_exprs) or len(u_exprs) > target.dim:
            raise ValueError("component counts do not fit the target")
        n = u_exprs[0].nvars

        def fmap(xi, eta):
            U = np.zeros((len(xi), target.dim))
            V = np.zeros((len(xi), target.dim))
            for a, (fu, fv) in enumerate(zip(u_exprs, v_exprs)):
                U[:, a] = fu(xi, eta)
                V[:, a] = fv(xi, eta)
            return U, V

        return cls(target, n, fmap, None, len(u_exprs) == target.dim)

    def to_dict(self) -> dict:
        out = {"target": self.target.to_dict(), "n": self.n, "full": self.full}
        if self.decomposition is not None:
            out["decomposition"] = self.decomposition.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def assemble_immersion(dec: SeparableDecomposition, target: SpaceFormModel) -> Immersion:
    if dec.N == 0:
        raise ValueError("H vanishes identically: no immersion (Jacobian cannot have maximal rank)")
    if dec.N > target.dim:
        raise ValueError(f"decomposition has {dec.N} terms but the target has dimension {target.dim}")
    dim = target.dim

    def fmap(xi, eta):
        U = np.zeros((len(xi), dim))
        V = np.zeros((len(eta), dim))
        U[:, :dec.N] = dec.u(xi)
        V[:, :dec.N] = dec.v(eta)
        return U, V

    return Immersion(target, dec.n, fmap, dec, full=dec.N == dim)


@dataclass
class Alignment:
    matrix: np.ndarray  # P with u2 = P u1 and v2 = P^{-T} v1
    residual: float
    norm_defect: float
    condition: float

    def __iter__(self):
        return iter((self.matrix, self.residual))

    @property
    def invertible(self) -> bool:
        return bool(np.isfinite(self.condition) and self.condition < 1e12)


def align(d1: SeparableDecomposition, d2: SeparableDecomposition, samples: int | None = None,
          tol: float = 1e-6, seed: int = 0) -> Alignment:
    """Real invertible ``P`` carrying ``d1`` onto ``d2`` (least squares on samples).

    ``norm_defect`` is ``max |sum u1 v1 - sum u2 v2|`` at paired samples, i.e.
    the sampled ``||f(q)||^2 = ||g(q)||^2`` identity.
    """
    if d1.N != d2.N:
        raise ValueError(f"different sizes: {d1.N} vs {d2.N}")
    N = d1.N
    rng = np.random.default_rng(seed)
    count = samples or max(3 * N, 12)
    xi = sample_box(d1.domain, count, rng)
    eta = sample_box(d1.domain, count, rng)
    U1, U2 = d1.u(xi), d2.u(xi)
    V1, V2 = d1.v(eta), d2.v(eta)
    if np.linalg.matrix_rank(U1) < N or np.linalg.matrix_rank(V1) < N:
        raise ValueError("sample matrices are rank deficient: decomposition not weakly full here")
    Pt, *_ = np.linalg.lstsq(U1, U2, rcond=None)
    P = Pt.T
    cond = float(np.linalg.cond(P))
    res_u = np.max(np.abs(U1 @ P.T - U2)) / max(np.max(np.abs(U2)), 1e-300)
    with np.errstate(all="ignore"):
        res_v = np.max(np.abs(V1 @ np.linalg.inv(P) - V2)) / max(np.max(np.abs(V2)), 1e-300) \
            if np.isfinite(cond) else np.inf
    norm_defect = float(np.max(np.abs(np.sum(U1 * V1, axis=1) - np.sum(U2 * V2, axis=1))))
    return Alignment(P, float(max(res_u, res_v)), norm_defect, cond)


@dataclass
class ImmersionReport:
    hereditary: HereditaryReport
    holomorphy_defect: float
    holo_tol: float

    @property
    def holomorphic(self) -> bool:
        return self.holomorphy_defect <= self.holo_tol

    @property
    def passed(self) -> bool:
        return self.hereditary.passed and self.holomorphic

    def to_dict(self) -> dict:
        return {"passed": self.passed, "hereditary": self.hereditary.to_dict(),
                "paraholomorphic": self.holomorphic,
                "holomorphy_defect": self.holomorphy_defect, "holo_tol": self.holo_tol}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def holomorphy_defect(f: Immersion, xi: np.ndarray, eta: np.ndarray, step: float = 1e-5) -> float:
    """Max of ``|dU/deta|`` and ``|dV/dxi|`` by central differences."""
    worst = 0.0
    for k in range(f.n):
        e = np.zeros(f.n)
        e[k] = step
        Up, _ = f.null_components(xi, eta + e)
        Um, _ = f.null_components(xi, eta - e)
        _, Vp = f.null_components(xi + e, eta)
        _, Vm = f.null_components(xi - e, eta)
        worst = max(worst, float(np.max(np.abs(Up - Um))) / (2 * step),
                    float(np.max(np.abs(Vp - Vm))) / (2 * step))
    return worst


def verify_immersion(f: Immersion, source: DiastasisField, samples: int = 100, tol: float = 1e-9,
                     holo_tol: float = 1e-7, seed: int = 0, box=None) -> ImmersionReport:
    """Pullback identity of the diastasis plus para-holomorphy of the components."""
    her = hereditary_check(source, f, f.target, samples, tol, seed, box)
    rng = np.random.default_rng(seed + 1)
    box = source.domain if box is None else as_box(box, source.n)
    shrink = np.column_stack([box[:, 0] + 1e-4, box[:, 1] - 1e-4])
    xi = sample_box(shrink, min(samples, 32), rng)
    eta = sample_box(shrink, min(samples, 32), rng)
    return ImmersionReport(her, holomorphy_defect(f, xi, eta), holo_tol)
