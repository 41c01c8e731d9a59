"""Diastasis of a potential, the derived function H_c, and the pullback check."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import dsl
from .dsl import DomainError, PotentialExpr
from .spaceforms import SpaceFormModel, chart_diastasis


def as_box(domain, n: int) -> np.ndarray:
    """Normalise a domain description to an ``(n, 2)`` array of ``[lo, hi]`` rows."""
    box = np.asarray(domain, dtype=float)
    if box.ndim == 1:
        box = np.tile(box, (n, 1))
    if box.shape != (n, 2) or np.any(box[:, 0] >= box[:, 1]):
        raise ValueError(f"domain must be {n} intervals lo < hi, got {domain!r}")
    return box


def sample_box(box: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((count, len(box)))


@dataclass(frozen=True)
class DiastasisField:
    """A potential on ``Omega x Omega`` with ``Omega`` a box around the origin."""

    potential: PotentialExpr
    domain: np.ndarray = field(default=None)

    def __post_init__(self):
        box = as_box([-0.5, 0.5] if self.domain is None else self.domain, self.n)
        if np.any(box[:, 0] > 0) or np.any(box[:, 1] < 0):
            raise ValueError("the domain box must contain the origin")
        object.__setattr__(self, "domain", box)

    @property
    def n(self) -> int:
        return self.potential.nvars

    @classmethod
    def from_text(cls, text: str, n: int | None = None, domain=None) -> "DiastasisField":
        return cls(dsl.parse(text, n or dsl.infer_nvars(text)), domain)

    def d0_expr(self) -> PotentialExpr:
        """``D_0`` as an expression; exactly zero when either block is zero."""
        phi = self.potential.ast
        left = dsl.sub(phi, dsl.substitute(phi, eta=0.0))
        right = dsl.sub(dsl.substitute(phi, xi=0.0), dsl.substitute(phi, xi=0.0, eta=0.0))
        return PotentialExpr(dsl.sub(left, right), self.n)

    def h_expr(self, c_target: float) -> PotentialExpr:
        return h_expression(self, c_target)


def diastasis(f: DiastasisField, p, q):
    """``Phi(xi,eta) - Phi(zeta,eta) - Phi(xi,lam) + Phi(zeta,lam)`` for ``p=(xi,eta)``, ``q=(zeta,lam)``."""
    (xi, eta), (zeta, lam) = p, q
    phi = f.potential
    return (phi(xi, eta) - phi(xi, lam)) - (phi(zeta, eta) - phi(zeta, lam))


def d0(f: DiastasisField, xi, eta):
    zero = np.zeros(f.n)
    return diastasis(f, (xi, eta), (zero, zero))


def h_expression(f: DiastasisField, c_target: float) -> PotentialExpr:
    """``H_c`` built from ``D_0``: ``D_0/4`` if ``c = 0`` else ``exp(c D_0/8)/2 - 1/2``."""
    d = f.d0_expr().ast
    if c_target == 0:
        ast = dsl.mul(dsl.num(0.25), d)
    else:
        ast = dsl.sub(dsl.mul(dsl.num(0.5), dsl.Func("exp", dsl.mul(dsl.num(c_target / 8.0), d))),
                      dsl.num(0.5))
    return PotentialExpr(ast, f.n)


def h_function(f: DiastasisField, c_target: float, p):
    xi, eta = p
    return h_expression(f, c_target)(xi, eta)


@dataclass
class HereditaryReport:
    samples: int
    max_residual: float
    tol: float
    failures: list

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol and not any(
            "error" in item for item in self.failures)

    def to_dict(self) -> dict:
        return {"samples": self.samples, "max_residual": self.max_residual,
                "tol": self.tol, "passed": self.passed, "failures": self.failures}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def hereditary_check(source: DiastasisField, f, target: SpaceFormModel | None = None,
                     samples: int = 100, tol: float = 1e-9, seed: int = 0,
                     box=None) -> HereditaryReport:
    """Compare ``D^S(0, q)`` with ``D^M(f(0), f(q))`` at seeded random ``q``.

    ``f`` must provide ``null_components(xi, eta) -> (U, V)`` returning chart
    null coordinates of the image points, and ``target`` (if not passed).
    """
    target = target or f.target
    rng = np.random.default_rng(seed)
    box = source.domain if box is None else as_box(box, source.n)
    xi = sample_box(box, samples, rng)
    eta = sample_box(box, samples, rng)
    zero = np.zeros((1, source.n))

    failures = []
    try:
        ds = np.asarray(d0(source, xi, eta), dtype=float)
    except DomainError as exc:
        ds = np.full(samples, np.nan)
        failures.append({"point": None, "error": str(exc)})
    u0, v0 = f.null_components(zero, zero)
    u, v = f.null_components(xi, eta)
    dm = chart_diastasis(target, u0, v0, u, v, strict=False)
    residual = np.abs(ds - dm)
    for k in np.flatnonzero(~np.isfinite(residual)):
        failures.append({"point": [xi[k].tolist(), eta[k].tolist()],
                         "error": "image outside the target's admissible set"})
    finite = residual[np.isfinite(residual)]
    max_res = float(finite.max()) if finite.size else float("inf")
    for k in np.flatnonzero(np.isfinite(residual) & (residual > tol)):
        failures.append({"point": [xi[k].tolist(), eta[k].tolist()], "residual": float(residual[k])})
    return HereditaryReport(samples, max_res, tol, failures)
