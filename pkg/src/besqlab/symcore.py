"""Symmetric-matrix algebra.

Matrices are plain ``numpy`` arrays of shape ``(..., p, p)``. :func:`as_symmetric`
is the single entry point that validates input and enforces exact symmetry
(the upper triangle is authoritative), so downstream code never re-checks it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidInputError, InvalidOrderError

DEFAULT_RANK_EPS = 1e-9


class NotPSDWarning(UserWarning):
    """Raised (as a warning) when a matrix expected to be PSD has a clearly negative eigenvalue."""


def as_symmetric(a) -> np.ndarray:
    """Return ``a`` as a float array of shape ``(..., p, p)`` with both triangles equal.

    The lower triangle is overwritten from the upper one.
    """
    arr = np.array(a, dtype=float, ndmin=2)
    if arr.shape[-1] != arr.shape[-2] or arr.shape[-1] < 1:
        raise InvalidInputError(f"expected square matrices, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix has non-finite entries")
    upper = np.triu(arr)
    return upper + np.swapaxes(np.triu(arr, 1), -1, -2)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Average with the transpose; used after products that are symmetric only up to rounding."""
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues[..., None, :]) @ np.swapaxes(U, -1, -2)


def reconstruction_tol(S: np.ndarray) -> float:
    p = S.shape[-1]
    return 1e-10 * p * max(float(np.max(np.abs(S))), 1.0)


def orthogonality_tol(p: int) -> float:
    return 1e-12 * p


def eig(S) -> Spectrum:
    """Ascending eigenvalues and orthonormal eigenvectors (LAPACK ``syevd``).

    Accepts a single matrix or a stack ``(..., p, p)``.
    """
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        raise InvalidInputError("matrix has non-finite entries")
    w, U = np.linalg.eigh(S)
    return Spectrum(w, U)


def spectral_apply(S, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Return ``U diag(g(lambda)) U^T``.

    ``g`` must be vectorized over an array of eigenvalues. A non-finite value of
    ``g`` at any eigenvalue is reported as :class:`DomainError`.
    """
    spec = eig(S)
    with np.errstate(invalid="ignore", divide="ignore"):
        gw = np.asarray(g(spec.eigenvalues), dtype=float)
    if not np.all(np.isfinite(gw)):
        raise DomainError("spectral function undefined at an eigenvalue")
    U = spec.eigenvectors
    return symmetrize((U * gw[..., None, :]) @ np.swapaxes(U, -1, -2))


def sqrt_abs(S) -> np.ndarray:
    """``sqrt(|S|)`` taken spectrally; defined for every symmetric matrix."""
    return spectral_apply(S, lambda w: np.sqrt(np.abs(w)))


def elementary_symmetric(lambdas) -> np.ndarray:
    """Elementary symmetric polynomials ``(e_1, ..., e_p)`` along the last axis.

    Builds the coefficients of ``prod(1 + lambda_i x)`` one factor at a time,
    which costs O(p^2) and works on stacks of vectors.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim == 0 or lam.shape[-1] == 0:
        raise InvalidInputError("need at least one eigenvalue")
    p = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (p + 1,))
    e[..., 0] = 1.0
    for i in range(p):
        li = lam[..., i : i + 1]
        # update high orders first so e[n-1] is still the old value
        e[..., 1 : i + 2] = e[..., 1 : i + 2] + li * e[..., 0 : i + 1]
    return e[..., 1:]


def incomplete_symmetric(lambdas, i: int, n: int) -> float:
    """``e_n`` of ``lambdas`` with coordinate ``i`` (1-based) removed; ``e_0 = 1``."""
    lam = np.asarray(lambdas, dtype=float)
    p = lam.shape[-1]
    if not 1 <= i <= p:
        raise InvalidInputError(f"index {i} outside 1..{p}")
    if not 0 <= n <= p - 1:
        raise InvalidOrderError(f"order {n} outside 0..{p - 1}")
    if n == 0:
        return 1.0
    rest = np.delete(lam, i - 1, axis=-1)
    return float(elementary_symmetric(rest)[..., n - 1])


def rank_tol(S, epsilon: float = DEFAULT_RANK_EPS) -> int:
    """Numeric rank: eigenvalues above ``epsilon * max(lambda_max, 1)``.

    Emits :class:`NotPSDWarning` if some eigenvalue is below ``-epsilon * max(lambda_max, 1)``.
    """
    w = eig(S).eigenvalues
    scale = epsilon * max(float(w[-1]), 1.0)
    if w[0] < -scale:
        warnings.warn(f"matrix is not PSD (min eigenvalue {w[0]:.3g})", NotPSDWarning, stacklevel=2)
    return int(np.count_nonzero(w > scale))


def is_psd(S, epsilon: float = DEFAULT_RANK_EPS) -> bool:
    w = eig(S).eigenvalues
    return bool(w[0] >= -epsilon * max(float(w[-1]), 1.0))
