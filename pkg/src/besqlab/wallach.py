"""Closed-form layer: Wallach-set membership, non-central Wishart Laplace transform,
the covariance reduction, and the exact Gaussian outer-product sampler."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, InvalidInputError, InvalidPointError, InvalidSigmaError
from .symcore import DEFAULT_RANK_EPS, as_symmetric, eig, is_psd, rank_tol, spectral_apply, symmetrize

HALF_INT_TOL = 1e-12


@dataclass(frozen=True)
class WallachPoint:
    x0: np.ndarray
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "x0", as_symmetric(self.x0))

    @property
    def p(self) -> int:
        return self.x0.shape[-1]


@dataclass(frozen=True)
class Membership:
    member: bool
    branch: str  # "threshold" | "discrete" | "none"
    rank: int

    def as_dict(self) -> dict:
        return {"member": self.member, "branch": self.branch, "rank": self.rank}


@dataclass(frozen=True)
class LaplaceQuery:
    """Argument ``u`` of the transform with either a time ``t`` (``Sigma = t I``) or a general ``Sigma``."""

    u: np.ndarray
    t: float | None = None
    Sigma: np.ndarray | None = None

    def __post_init__(self):
        u = as_symmetric(self.u)
        if eig(u).eigenvalues[0] <= 0:
            raise InvalidInputError("u must be positive definite")
        object.__setattr__(self, "u", u)
        if (self.t is None) == (self.Sigma is None):
            raise InvalidInputError("give exactly one of t and Sigma")
        if self.t is not None and not self.t > 0:
            raise InvalidInputError("t must be positive")
        if self.Sigma is not None:
            object.__setattr__(self, "Sigma", _check_pd(self.Sigma))

    def sigma(self) -> np.ndarray:
        if self.Sigma is not None:
            return self.Sigma
        return self.t * np.eye(self.u.shape[-1])


def discrete_index(beta: float, p: int) -> int | None:
    """Return ``2 beta`` if it is an integer in ``{0, ..., p-2}``, else None."""
    two_b = 2.0 * beta
    k = round(two_b)
    if abs(two_b - k) <= HALF_INT_TOL and 0 <= k <= p - 2:
        return int(k)
    return None


def central_member(beta: float, p: int) -> bool:
    if p < 1:
        raise InvalidInputError("p must be >= 1")
    return discrete_index(beta, p) is not None or beta >= (p - 1) / 2


def classify(point: WallachPoint, epsilon: float = DEFAULT_RANK_EPS) -> Membership:
    """Membership of ``(x0, beta)`` in the non-central Wallach set, with the deciding branch."""
    x0, beta, p = point.x0, point.beta, point.p
    if not is_psd(x0, epsilon):
        raise InvalidPointError("x0 is not positive semidefinite")
    rank = rank_tol(x0, epsilon)
    if beta >= (p - 1) / 2:
        return Membership(True, "threshold", rank)
    k = discrete_index(beta, p)
    if k is not None and rank <= k:
        return Membership(True, "discrete", rank)
    return Membership(False, "none", rank)


def noncentral_member(point: WallachPoint, epsilon: float = DEFAULT_RANK_EPS) -> bool:
    return classify(point, epsilon).member


def cone_sde_solvable(x0, alpha: float, epsilon: float = DEFAULT_RANK_EPS) -> bool:
    """Whether the matrix BESQ equation with drift ``alpha I`` has a cone-valued solution from ``x0``."""
    x0 = as_symmetric(x0)
    p = x0.shape[-1]
    if not is_psd(x0, epsilon):
        raise InvalidPointError("x0 is not positive semidefinite")
    if alpha >= p - 1:
        return True
    k = discrete_index(alpha / 2, p)
    return k is not None and rank_tol(x0, epsilon) <= k


def _check_pd(S) -> np.ndarray:
    S = as_symmetric(S)
    w = eig(S).eigenvalues
    if w[0] <= 1e-14 * max(abs(w[-1]), 1.0):
        raise InvalidSigmaError("Sigma must be positive definite")
    return S


def reduce_sigma(x0, Sigma) -> np.ndarray:
    """``Sigma^{-1/2} x0 Sigma^{-1/2}``."""
    S = _check_pd(Sigma)
    x0 = as_symmetric(x0)
    r = spectral_apply(S, lambda w: 1.0 / np.sqrt(w))
    return symmetrize(r @ x0 @ r)


def laplace_closed_form(x0, beta: float, query: LaplaceQuery) -> float:
    """``det(I + 2 Sigma u)^{-beta} * exp(-Tr(x0 (I + 2 u Sigma)^{-1} u))``.

    The trace term uses ``(I + 2 u Sigma)^{-1} u``, which is symmetric and is
    the form produced by Gaussian outer products; it coincides with
    ``(I + 2 Sigma u)^{-1} u`` whenever ``Sigma`` and ``u`` commute, e.g. ``Sigma = t I``.
    """
    if beta < 0:
        raise InvalidInputError("beta must be non-negative")
    x0 = as_symmetric(x0)
    u = query.u
    p = u.shape[-1]
    Sigma = query.sigma()
    I = np.eye(p)
    if query.Sigma is None:
        sym = I + 2.0 * query.t * u
    else:
        # det(I + 2 Sigma u) = det(I + 2 Sigma^{1/2} u Sigma^{1/2})
        h = spectral_apply(Sigma, np.sqrt)
        sym = symmetrize(I + 2.0 * h @ u @ h)
    try:
        L = np.linalg.cholesky(sym)
        Y = np.linalg.solve(I + 2.0 * u @ Sigma, u)
    except np.linalg.LinAlgError as exc:
        raise EvaluationError("I + 2 Sigma u is numerically singular") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return math.exp(-beta * logdet - float(np.trace(x0 @ Y)))


def means_for(x0, n: int, epsilon: float = DEFAULT_RANK_EPS) -> np.ndarray:
    """Mean vectors ``m_1..m_n`` with ``sum m_i m_i^T = x0``, from the spectral decomposition.

    Requires ``rank(x0) <= n``.
    """
    x0 = as_symmetric(x0)
    spec = eig(x0)
    r = rank_tol(x0, epsilon)
    if r > n:
        raise InvalidInputError(f"rank(x0) = {r} exceeds number of Gaussians n = {n}")
    p = x0.shape[-1]
    m = np.zeros((n, p))
    w, U = spec.eigenvalues[::-1], spec.eigenvectors[:, ::-1]
    for i in range(r):
        m[i] = math.sqrt(w[i]) * U[:, i]
    return m


def sample_exact_batch(means: np.ndarray, Sigma, z: np.ndarray) -> np.ndarray:
    """Vectorized sampler: ``z`` has shape ``(N, n, p)``; returns ``(N, p, p)``."""
    h = spectral_apply(_check_pd(Sigma), np.sqrt)
    xi = z @ h + means  # rows: h z_i + m_i (h symmetric)
    return np.swapaxes(xi, -1, -2) @ xi


def sample_exact(n: int, means, Sigma, rng) -> np.ndarray:
    """``sum_i xi_i xi_i^T`` with independent ``xi_i ~ N(m_i, Sigma)``."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    Sigma = _check_pd(Sigma)
    p = Sigma.shape[-1]
    means = np.zeros((n, p)) if means is None else np.asarray(means, dtype=float).reshape(n, p)
    z = rng.standard_normal((n, p))
    return sample_exact_batch(means, Sigma, z[None])[0]


def x0_from_upper(p: int, upper) -> np.ndarray:
    """Build a symmetric matrix from its row-major upper triangle."""
    vals = np.asarray(upper, dtype=float).ravel()
    if vals.size != p * (p + 1) // 2:
        raise InvalidInputError(f"expected {p * (p + 1) // 2} upper-triangle entries, got {vals.size}")
    x = np.zeros((p, p))
    x[np.triu_indices(p)] = vals
    return as_symmetric(x)


def membership_json(query: dict) -> dict:
    """``{p, beta, x0, epsilon}`` -> ``{member, branch, rank}``; ``x0`` is a row-major upper triangle."""
    p = int(query["p"])
    x0 = x0_from_upper(p, query["x0"])
    eps = float(query.get("epsilon", DEFAULT_RANK_EPS))
    return classify(WallachPoint(x0, float(query["beta"])), eps).as_dict()
