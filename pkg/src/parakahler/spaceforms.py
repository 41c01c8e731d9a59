"""The flat model ``D^N`` and the projective model ``DP^N`` of curvature ``c``.

Chart convention for ``DP^N``: the point with chart null coordinates
``(xi, eta)`` has homogeneous coordinates ``[1 : sqrt(2)(xi_1 e + eta_1 ebar) : ...]``.
With that scaling the chart potential ``(8/c) log(1 + 2 sum xi_i eta_i)`` and
the homogeneous diastasis ``(8/c) log(|Z|^2 |W|^2 / |<Z, W>|^2)`` agree.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import dsl
from .dsl import DomainError, PotentialExpr
from .paracomplex import (SplitComplex, d_inner, d_norm_sq, from_null_arrays,
                          null_arrays)

CHART_SCALE = math.sqrt(2.0)


class OutsideDiastasisNeighborhood(ValueError):
    pass


@dataclass(frozen=True)
class SpaceFormModel:
    curvature: float
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")

    @property
    def kind(self) -> str:
        return "flat" if self.curvature == 0 else "projective"

    @property
    def is_flat(self) -> bool:
        return self.curvature == 0

    def to_dict(self) -> dict:
        return {"curvature": float(self.curvature), "dim": self.dim, "kind": self.kind}


@dataclass(frozen=True)
class AmbientPoint:
    """A point of a model: ``N`` coordinates (flat) or ``N+1`` homogeneous ones."""

    kind: str
    coords: tuple

    def __post_init__(self):
        if self.kind not in ("flat", "projective"):
            raise ValueError(f"unknown point kind {self.kind!r}")
        if self.kind == "projective" and d_norm_sq(self.coords) <= 0:
            raise ValueError("homogeneous coordinates must satisfy ||Z||^2 > 0")

    @classmethod
    def flat(cls, xi, eta) -> "AmbientPoint":
        """Flat point with null coordinates ``(xi_i, eta_i)``."""
        return cls("flat", from_null_arrays(np.atleast_1d(xi), np.atleast_1d(eta)))

    @classmethod
    def from_chart(cls, xi, eta) -> "AmbientPoint":
        """Projective point from chart-0 null coordinates."""
        xi = CHART_SCALE * np.atleast_1d(np.asarray(xi, float))
        eta = CHART_SCALE * np.atleast_1d(np.asarray(eta, float))
        return cls("projective", (SplitComplex(1.0),) + from_null_arrays(xi, eta))

    def chart(self, index: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Null coordinates in the flat model or in the affine chart ``Z_index != 0``."""
        if self.kind == "flat":
            return null_arrays(self.coords)
        pivot = self.coords[index]
        if pivot.norm_sq() == 0:
            raise OutsideDiastasisNeighborhood(f"|Z_{index}|^2 = 0: point not in chart {index}")
        rest = [z / pivot for k, z in enumerate(self.coords) if k != index]
        u, v = null_arrays(rest)
        return u / CHART_SCALE, v / CHART_SCALE

    def to_json(self) -> list:
        return [[z.re, z.im] for z in self.coords]

    @classmethod
    def from_json(cls, kind: str, data) -> "AmbientPoint":
        return cls(kind, tuple(SplitComplex(float(a), float(b)) for a, b in data))


def model_potential(m: SpaceFormModel, xi, eta) -> float:
    """``4 sum xi eta`` (flat) or ``(8/c) log(1 + 2 sum xi eta)``."""
    s = float(np.dot(np.atleast_1d(xi), np.atleast_1d(eta)))
    if m.is_flat:
        return 4.0 * s
    arg = 1.0 + 2.0 * s
    if arg <= 0:
        raise DomainError("point outside the chart's diastasis neighbourhood (1 + 2<xi,eta> <= 0)")
    return 8.0 / m.curvature * math.log(arg)


def model_potential_expr(m: SpaceFormModel) -> PotentialExpr:
    """The model potential as a DSL expression in ``m.dim`` variables."""
    pairing = None
    for k in range(1, m.dim + 1):
        term = dsl.mul(dsl.Var("xi", k), dsl.Var("eta", k))
        pairing = term if pairing is None else dsl.add(pairing, term)
    if m.is_flat:
        ast = dsl.mul(dsl.num(4.0), pairing)
    else:
        inner = dsl.add(dsl.num(1.0), dsl.mul(dsl.num(2.0), pairing))
        ast = dsl.mul(dsl.num(8.0 / m.curvature), dsl.Func("log", inner))
    return PotentialExpr(ast, m.dim)


def ambient_diastasis(m: SpaceFormModel, p: AmbientPoint, q: AmbientPoint) -> float:
    if m.is_flat:
        diff = tuple(a - b for a, b in zip(p.coords, q.coords))
        if len(p.coords) != len(q.coords):
            raise ValueError("points of different dimension")
        return 4.0 * d_norm_sq(diff)
    pq = d_inner(p.coords, q.coords).norm_sq()
    if pq <= 0:
        raise OutsideDiastasisNeighborhood("|<p, q>|^2 <= 0: outside the diastasis neighbourhood")
    return 8.0 / m.curvature * math.log(d_norm_sq(p.coords) * d_norm_sq(q.coords) / pq)


def chart_diastasis(m: SpaceFormModel, xi_p, eta_p, xi_q, eta_q, strict: bool = True) -> np.ndarray:
    """Vectorised diastasis between chart points given by null coordinates.

    Arrays have shape ``(..., N)``; equals :func:`ambient_diastasis` on
    :meth:`AmbientPoint.from_chart` / :meth:`AmbientPoint.flat` points.
    With ``strict=False`` inadmissible pairs give NaN instead of raising.
    """
    xi_p, eta_p, xi_q, eta_q = (np.asarray(a, float) for a in (xi_p, eta_p, xi_q, eta_q))
    if m.is_flat:
        return 4.0 * np.sum((xi_p - xi_q) * (eta_p - eta_q), axis=-1)
    dot = lambda a, b: np.sum(a * b, axis=-1)
    num = (1 + 2 * dot(xi_p, eta_p)) * (1 + 2 * dot(xi_q, eta_q))
    den = (1 + 2 * dot(xi_p, eta_q)) * (1 + 2 * dot(xi_q, eta_p))
    bad = (den <= 0) | (num <= 0)
    if np.any(bad):
        if strict:
            raise OutsideDiastasisNeighborhood("chart points outside the diastasis neighbourhood")
        num = np.where(bad, np.nan, num)
        den = np.where(bad, 1.0, den)
    return 8.0 / m.curvature * np.log(num / den)


def projective_normalize(p: AmbientPoint) -> AmbientPoint:
    """Representative with ``||Z||^2 = 1`` and first nonzero coordinate ``re > 0``."""
    if p.kind != "projective":
        raise ValueError("only projective points can be normalised")
    norm = d_norm_sq(p.coords)
    if norm <= 0:
        raise ValueError("||Z||^2 must be positive")
    scale = 1.0 / math.sqrt(norm)
    for z in p.coords:
        if z.re != 0 or z.im != 0:
            if z.re < 0:
                scale = -scale
            break
    return AmbientPoint("projective", tuple(z * scale for z in p.coords))


def points_to_json(points) -> str:
    return json.dumps([pt.to_json() for pt in points])
