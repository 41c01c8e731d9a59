"""Numerical separable rank of H(xi, eta) and the derivative-dependency tests.

Two independent views of the same quantity:

* :func:`sample_rank` -- rank of the sample matrix ``[H(xi_i, eta_j)]`` by
  complete-pivoting elimination;
* :func:`build_index_set` -- greedy scan of xi-derivatives ``d^I H`` in
  graded-lex order, keeping those that are not pointwise (in xi) linear
  combinations of the ones already kept, viewed as functions of eta.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dsl
from .diastasis import as_box, sample_box
from .dsl import PotentialExpr
from .jets import (DEFAULT_ORDER_CAP, eta_derivatives, graded_lex_key,
                   jet_lift_many, multi_indices, xi_derivatives)

RANK_TOL = 1e-8
DEPENDENCY_TOL = 1e-7
# rows this small relative to the basis rows are rounding noise of an exact zero
ZERO_ROW = 1e-12


class DegenerateSampleError(ValueError):
    """The eta samples cannot separate the candidate rows; resample."""


class InconclusiveOrder(ValueError):
    """``max_order`` is too small to certify the order of a point."""


# --- sample matrices -------------------------------------------------------

def _points(values, n: int | None = None) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if n in (None, 1) else arr.reshape(1, -1)
    return arr


def grid_values(H, xi_grid, eta_grid) -> np.ndarray:
    """``[H(xi_i, eta_j)]``; ``H`` takes arrays with a trailing coordinate axis."""
    n = H.nvars if isinstance(H, PotentialExpr) else None
    xi = _points(xi_grid, n)
    eta = _points(eta_grid, n)
    values = np.asarray(H(xi[:, None, :], eta[None, :, :]), dtype=float)
    if values.ndim == 3 and values.shape[-1] == 1:
        values = values[..., 0]
    return np.broadcast_to(values, (len(xi), len(eta))).copy()


@dataclass
class SampleMatrix:
    rows: np.ndarray  # xi samples (m, n)
    cols: np.ndarray  # eta samples (k, n)
    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sample matrix has non-finite entries")

    @classmethod
    def sample(cls, H, xi_grid, eta_grid, source: str = "") -> "SampleMatrix":
        n = H.nvars if isinstance(H, PotentialExpr) else None
        return cls(_points(xi_grid, n), _points(eta_grid, n),
                   grid_values(H, xi_grid, eta_grid), source or str(H))

    def rank(self, tol: float = RANK_TOL) -> int:
        return pivoted_rank(self.values, tol)[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["# " + self.source])
        writer.writerow(["xi \\ eta"] + [" ".join(repr(float(c)) for c in col) for col in self.cols])
        for row, vals in zip(self.rows, self.values):
            writer.writerow([" ".join(repr(float(c)) for c in row)] + [repr(float(v)) for v in vals])
        return buf.getvalue()


def pivoted_rank(matrix, tol: float = RANK_TOL) -> tuple[int, list]:
    """Rank by Gaussian elimination with complete pivoting.

    Returns ``(rank, pivots)`` where ``pivots`` lists ``(row, col, value)``;
    a pivot counts iff ``|value| > tol * |first pivot|``.
    """
    A = np.array(matrix, dtype=float)
    pivots = []
    rows = np.arange(A.shape[0])
    cols = np.arange(A.shape[1])
    first = None
    for _ in range(min(A.shape)):
        if A.size == 0:
            break
        i, j = np.unravel_index(np.argmax(np.abs(A)), A.shape)
        value = A[i, j]
        if first is None:
            first = abs(value)
        if first == 0 or abs(value) <= tol * first:
            break
        pivots.append((int(rows[i]), int(cols[j]), float(value)))
        A = A - np.outer(A[:, j], A[i, :]) / value
        A = np.delete(np.delete(A, i, axis=0), j, axis=1)
        rows = np.delete(rows, i)
        cols = np.delete(cols, j)
    return len(pivots), pivots


def sample_rank(H, xi_grid, eta_grid, tol: float = RANK_TOL) -> int:
    """Numerical rank of ``[H(xi_i, eta_j)]`` (relative pivot threshold ``tol``)."""
    return pivoted_rank(grid_values(H, xi_grid, eta_grid), tol)[0]


def box_grid(domain, count: int, n: int | None = None, seed: int = 0) -> np.ndarray:
    """Sample points in a box: uniform nodes in 1-D, seeded uniform draws otherwise."""
    box = np.asarray(domain, dtype=float)
    if box.ndim == 1:
        box = box.reshape(1, 2) if n in (None, 1) else np.tile(box, (n, 1))
    if len(box) == 1:
        return np.linspace(box[0, 0], box[0, 1], count).reshape(-1, 1)
    return sample_box(box, count, np.random.default_rng(seed))


# --- generalised Wronskians ------------------------------------------------

def _as_exprs(fs, n: int) -> list[PotentialExpr]:
    return [f if isinstance(f, PotentialExpr) else dsl.parse(str(f), n) for f in fs]


def wronskian_order(fs: Sequence, p, max_order: int, n: int | None = None,
                    tol: float = RANK_TOL) -> int:
    """Order of the point ``p`` for the functions ``fs`` of xi.

    Searches the graded-lex family: rows ``D_0 = id, D_1, ...`` are taken
    greedily in graded-lex order, row ``j`` restricted to ``|I| <= j``.
    Raises :class:`InconclusiveOrder` when derivatives beyond ``max_order``
    could still raise the order.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    n = n or len(p)
    exprs = _as_exprs(fs, n)
    indices = multi_indices(n, max_order)
    xi = p.reshape(1, n)
    cols = []
    for f in exprs:
        jets = jet_lift_many(f, xi, np.zeros((1, n)), (max_order, 0))
        cols.append([jets.derivative(I)[0] for I in indices])
    D = np.array(cols).T  # rows: derivative operators, cols: functions

    chosen: list[np.ndarray] = []
    exhausted = True
    for I, row in zip(indices, D):
        if sum(I) > len(chosen):
            exhausted = False
            break
        norm = np.linalg.norm(row)
        if norm == 0:
            continue
        candidate = np.array(chosen + [row / norm])
        if np.linalg.matrix_rank(candidate, tol=tol * np.sqrt(len(candidate))) > len(chosen):
            chosen.append(row / norm)
        if len(chosen) == len(exprs):
            return len(chosen)
    if exhausted and len(chosen) > max_order:
        raise InconclusiveOrder(
            f"order is at least {len(chosen)}; derivatives above {max_order} are needed")
    return len(chosen)


# --- dependency conditions -------------------------------------------------

@dataclass
class DependencyReport:
    K: tuple
    index_set: list
    dependent: bool
    coefficients: np.ndarray  # (samples, |I|): a^I_K / a at each sampled point
    residual: float
    residuals: np.ndarray
    leading: np.ndarray  # |a| of the unit null vector at each sample
    samples: np.ndarray
    leading_at_origin: float
    side: str = "xi"
    tol: float = DEPENDENCY_TOL

    @property
    def dense_support(self) -> bool:
        """True when the leading coefficient is estimated nonzero at >= 95% of samples."""
        return bool(np.mean(self.leading > 1e-6) >= 0.95)

    def to_dict(self) -> dict:
        return {
            "K": list(self.K), "index_set": [list(I) for I in self.index_set],
            "side": self.side, "dependent": self.dependent,
            "residual": float(self.residual), "tol": self.tol,
            "samples": self.samples.tolist(),
            "coefficients": self.coefficients.tolist(),
            "leading": self.leading.tolist(),
            "leading_at_origin": float(self.leading_at_origin),
            "density_hypothesis": "assumed: coefficient a estimated nonzero on a dense sample"
            if self.dense_support else "not supported on the sample",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _derivative_rows(h: PotentialExpr, indices, pts, other, side: str) -> np.ndarray:
    """Rows ``d^I h`` at every (pts[s], other[j]); shape ``(len(indices), S, m)``."""
    S, m, n = len(pts), len(other), h.nvars
    a = np.repeat(pts, m, axis=0)
    b = np.tile(other, (S, 1))
    if side == "xi":
        rows = xi_derivatives(h, a, b, indices)
    else:
        rows = eta_derivatives(h, b, a, indices)
    return rows.reshape(len(indices), S, m)


def _normalise_rows(R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(R, axis=-1)
    safe = np.where(norms > 0, norms, 1.0)
    return R / safe[..., None], norms


def _leading(stack: np.ndarray) -> float:
    Rn, _ = _normalise_rows(stack)
    _, _, vt = np.linalg.svd(Rn.T, full_matrices=True)
    return float(abs(vt[-1, -1]))


def dependency_check(h: PotentialExpr, K, I_set, samples, other_samples,
                     tol: float = DEPENDENCY_TOL, side: str = "xi") -> DependencyReport:
    """Is ``d^K h`` pointwise in the span of ``{d^I h : I in I_set}``?

    For ``side="xi"`` derivatives are in xi, ``samples`` are xi points and the
    span is taken over functions of eta evaluated at ``other_samples``;
    ``side="eta"`` swaps the blocks.
    """
    K = tuple(K)
    I_set = [tuple(I) for I in I_set]
    n = h.nvars
    pts = _points(samples, n)
    other = _points(other_samples, n)
    m = len(other)
    if m <= len(I_set) or len(np.unique(other, axis=0)) < m:
        raise DegenerateSampleError(
            f"need more than {len(I_set)} distinct {('eta' if side == 'xi' else 'xi')} samples, got {m}")

    rows = _derivative_rows(h, I_set + [K], np.vstack([pts, np.zeros((1, n))]), other, side)
    origin = rows[:, -1, :]
    rows = rows[:, :-1, :]

    S = len(pts)
    coeffs = np.zeros((S, len(I_set)))
    residuals = np.zeros(S)
    leading = np.zeros(S)
    degenerate = 0
    for s in range(S):
        R = rows[:-1, s, :]
        r = rows[-1, s, :]
        rnorm = np.linalg.norm(r)
        Rn, norms = _normalise_rows(R)
        sv = np.linalg.svd(Rn, compute_uv=False) if len(Rn) else np.array([1.0])
        if len(Rn) and sv[-1] <= 1e-12 * max(sv[0], 1e-300):
            degenerate += 1
        if rnorm <= ZERO_ROW * norms.max(initial=0.0) or rnorm == 0:
            residuals[s] = 0.0
        else:
            c, *_ = np.linalg.lstsq(Rn.T, r, rcond=None)
            residuals[s] = np.linalg.norm(Rn.T @ c - r) / rnorm
            safe = np.where(norms > 0, norms, 1.0)
            coeffs[s] = -c / safe
        leading[s] = _leading(rows[:, s, :])
    if S and degenerate == S and len(I_set) > 1:
        raise DegenerateSampleError("candidate rows are rank deficient at every sample")

    return DependencyReport(
        K=K, index_set=I_set, dependent=bool(np.all(residuals <= tol)),
        coefficients=coeffs, residual=float(residuals.max(initial=0.0)),
        residuals=residuals, leading=leading, samples=pts,
        leading_at_origin=_leading(origin), side=side, tol=tol)


@dataclass
class IndexSet:
    indices: list
    certified: bool
    max_total_order: int
    history: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def to_dict(self) -> dict:
        return {"indices": [list(I) for I in self.indices], "N": self.N,
                "certified": self.certified, "max_total_order": self.max_total_order,
                "history": self.history}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def build_index_set(h: PotentialExpr, max_total_order: int = 10, tol: float = DEPENDENCY_TOL,
                    domain=(-0.5, 0.5), xi_count: int = 12, seed: int = 0,
                    side: str = "xi", retries: int = 3) -> IndexSet:
    """Greedy graded-lex scan for the index set of ``h``.

    A candidate is kept iff it is independent of the current set.  The scan
    stops after the first degree at which nothing is kept (higher
    derivatives then stay in the span); ``certified`` is False when no such
    degree occurs up to ``max_total_order``.
    """
    if max_total_order > DEFAULT_ORDER_CAP:
        raise ValueError(f"max_total_order above the jet cap {DEFAULT_ORDER_CAP}")
    n = h.nvars
    box = as_box(domain, n)
    rng = np.random.default_rng(seed)
    pts = sample_box(box, xi_count, rng)
    zero = (0,) * n

    probe = grid_values(h, sample_box(box, 8, rng), sample_box(box, 8, rng))
    if not np.any(probe):
        return IndexSet([], True, max_total_order,
                        [{"index": list(zero), "dependent": True, "residual": 0.0}])

    chosen = [zero]
    history = [{"index": list(zero), "dependent": False, "residual": None}]
    by_degree: dict[int, list] = {}
    for I in multi_indices(n, max_total_order):
        by_degree.setdefault(sum(I), []).append(I)

    for degree in range(1, max_total_order + 1):
        kept = False
        for K in sorted(by_degree[degree], key=graded_lex_key):
            report = None
            for _ in range(retries):
                other = sample_box(box, 2 * (len(chosen) + 1) + 4, rng)
                try:
                    report = dependency_check(h, K, chosen, pts, other, tol, side)
                    break
                except DegenerateSampleError:
                    continue
            if report is None:
                raise DegenerateSampleError(f"could not find non-degenerate samples for {K}")
            history.append({"index": list(K), "dependent": report.dependent,
                            "residual": report.residual})
            if not report.dependent:
                chosen.append(K)
                kept = True
        if not kept:
            return IndexSet(chosen, True, max_total_order, history)
    return IndexSet(chosen, False, max_total_order, history)
