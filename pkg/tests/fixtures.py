"""Shared potentials and finite-rank functions for the tests."""
from __future__ import annotations

import numpy as np

# (text, n, half-width of the sampling box around the origin, centre offset)
DSL_CORPUS = [
    ("4*xi1*eta1", 1, 0.5, 0.0),
    ("4*(xi1*eta1 + xi2*eta2)", 2, 0.5, 0.0),
    ("2*log(1 + 2*xi1*eta1)", 1, 0.3, 0.0),
    ("1*log(1 + 2*(xi1*eta1 + xi2*eta2))", 2, 0.3, 0.0),
    ("exp(xi1*eta1) - 1", 1, 0.5, 0.0),
    ("xi1*eta1 + xi1^2*eta1^2", 1, 0.5, 0.0),
    ("xi1*eta1 + xi2*eta2 + xi1^2*eta1*eta2", 2, 0.5, 0.0),
    ("xi1*eta2/(1 + xi2^2 + eta1^2)", 2, 0.5, 0.0),
    ("(1 + xi1*eta1)^3 - 1", 1, 0.5, 0.0),
    ("-xi1*eta1 + (xi1 - eta1)^4", 1, 0.5, 0.0),
    ("xi1*eta1 + bump(xi1,0)*eta1^3", 1, 0.3, 0.7),
    ("xi1*eta1 + bump(xi1,0)*eta1^3 + bump(xi1,1)*eta1^5", 1, 0.3, 1.6),
    ("exp(log(1 + xi1^2 + eta1^2))*xi1*eta1", 1, 0.5, 0.0),
]

# finite-rank H's with H(0, .) = H(., 0) = 0: (text, n, domain)
FINITE_RANK = [
    ("xi1*eta1", 1, (-0.5, 0.5)),
    ("xi1*eta1 + xi1^2*eta1^2", 1, (-0.5, 0.5)),
    ("2*xi1*eta1 + 2*xi1^2*eta1^2", 1, (-0.5, 0.5)),
    ("xi1*eta1 + xi2*eta2 + xi1^2*eta1*eta2", 2, (-0.5, 0.5)),
    ("xi1*eta1 + xi2*eta2", 2, (-0.5, 0.5)),
]


class PolyRankFunction:
    """``H(xi, eta) = sum_a p_a(xi) q_a(eta)`` with random polynomial factors."""

    def __init__(self, rank: int, n: int, degree: int, rng: np.random.Generator):
        exps = [e for e in np.ndindex(*(degree + 1,) * n) if 1 <= sum(e) <= degree]
        self.exps = np.array(exps, dtype=float)
        self.n = n
        self.rank = rank
        self.P = rng.standard_normal((rank, len(exps)))
        self.Q = rng.standard_normal((rank, len(exps)))

    def _mono(self, x: np.ndarray) -> np.ndarray:
        return np.prod(x[..., None, :] ** self.exps, axis=-1)

    def __call__(self, xi, eta):
        xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
        p = self._mono(xi) @ self.P.T
        q = self._mono(eta) @ self.Q.T
        return np.sum(p * q, axis=-1)
