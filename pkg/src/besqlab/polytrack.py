"""Symmetric-polynomial analytics along matrix BESQ paths."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidOrderError
from .sde import GridSpec, MatrixPath
from .symcore import elementary_symmetric


@dataclass
class PolyPath:
    grid: GridSpec
    values: np.ndarray  # (n_steps + 1, p) holding e_1..e_p
    alpha: float

    @property
    def p(self) -> int:
        return self.values.shape[-1]

    def with_e0(self) -> np.ndarray:
        """Values with the constant ``e_0 = 1`` prepended as column 0."""
        return np.concatenate([np.ones(self.values.shape[:-1] + (1,)), self.values], axis=-1)


@dataclass
class TimeChange:
    grid: GridSpec
    values: np.ndarray


@dataclass
class RegressionResult:
    """Least-squares slope through the origin with a heteroskedasticity-robust standard error."""

    name: str
    estimate: float
    stderr: float
    target: float
    n_obs: int
    inconclusive: bool = False

    def within(self, k: float = 3.0, rel: float = 0.0) -> bool:
        if self.inconclusive:
            return False
        band = max(k * self.stderr, rel * abs(self.target))
        return abs(self.estimate - self.target) <= band

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "target": self.target,
            "n_obs": self.n_obs,
            "inconclusive": self.inconclusive,
        }


def polynomials_along_path(path: MatrixPath) -> PolyPath:
    lam = np.linalg.eigvalsh(path.states)
    return PolyPath(path.grid, elementary_symmetric(lam), path.alpha)


def time_change(poly: PolyPath) -> TimeChange:
    """Cumulative trapezoid integral of ``e_{p-1}`` (``e_0 = 1`` when ``p = 1``)."""
    f = poly.with_e0()[..., poly.p - 1]
    dt = poly.grid.dt
    A = np.zeros_like(f)
    A[..., 1:] = np.cumsum(0.5 * dt * (f[..., 1:] + f[..., :-1]), axis=-1)
    return TimeChange(poly.grid, A)


def martingale_coefficient(lambdas, n: int) -> float:
    """``M_n = 2 * sqrt(sum_i |lambda_i| * (e_{n-1} without lambda_i)^2)``."""
    lam = np.asarray(lambdas, dtype=float)
    p = lam.shape[-1]
    if not 1 <= n <= p:
        raise InvalidOrderError(f"order {n} outside 1..{p}")
    total = 0.0
    for i in range(p):
        rest = np.delete(lam, i, axis=-1)
        inc = 1.0 if n == 1 else elementary_symmetric(rest)[..., n - 2]
        total = total + np.abs(lam[..., i]) * inc**2
    return 2.0 * np.sqrt(total)


def drift_coefficient(p: int, alpha: float, n: int) -> float:
    """Coefficient of ``e_{n-1} dt`` in the drift of ``e_n`` on the PSD cone."""
    if not 1 <= n <= p:
        raise InvalidOrderError(f"order {n} outside 1..{p}")
    if n == p:
        return alpha - p + 1
    return (p - n + 1) * (alpha - n + 1)


def regress_through_origin(x: np.ndarray, y: np.ndarray, target: float, name: str = "") -> RegressionResult:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    sxx = float(np.dot(x, x))
    if x.size == 0 or sxx == 0.0:
        return RegressionResult(name, float("nan"), float("nan"), target, int(x.size), inconclusive=True)
    slope = float(np.dot(x, y)) / sxx
    resid = y - slope * x
    # HC0 sandwich variance
    se = float(np.sqrt(np.dot(x**2, resid**2))) / sxx
    return RegressionResult(name, slope, se, target, int(x.size))


def _increments(values: np.ndarray, mask: np.ndarray | None):
    """Left-point states and increments over all paths; ``values`` is ``(N, n+1, p+1)``."""
    left = values[:, :-1]
    inc = values[:, 1:] - values[:, :-1]
    if mask is None:
        return left.reshape(-1, values.shape[-1]), inc.reshape(-1, values.shape[-1])
    return left[mask], inc[mask]


def _stack(ensemble):
    if isinstance(ensemble, PolyPath):
        # a single PolyPath may already hold a batch of shape (N, n+1, p)
        values = ensemble.with_e0()
        return (values if values.ndim == 3 else values[None]), ensemble.grid, ensemble.alpha
    grid, alpha = ensemble[0].grid, ensemble[0].alpha
    values = np.stack([pp.with_e0() for pp in ensemble])
    return values, grid, alpha


def psd_start_mask(values: np.ndarray, lam_min: np.ndarray | None) -> np.ndarray | None:
    """Select increments whose starting state lies in the closed PSD cone.

    ``lam_min`` has shape ``(N, n+1)``; ``None`` keeps everything.
    """
    if lam_min is None:
        return None
    return lam_min[:, :-1] >= 0.0


def drift_test(ensemble, n: int, lam_min: np.ndarray | None = None) -> RegressionResult:
    """Regress increments of ``e_n`` on ``e_{n-1} dt``.

    ``ensemble`` is a PolyPath or a list of them on a common grid. When
    ``lam_min`` (smallest eigenvalue per path and grid time) is given, only
    increments starting inside the PSD cone are used.
    """
    values, grid, alpha = _stack(ensemble)
    p = values.shape[-1] - 1
    target = drift_coefficient(p, alpha, n)
    left, inc = _increments(values, psd_start_mask(values, lam_min))
    return regress_through_origin(left[:, n - 1] * grid.dt, inc[:, n], target, name=f"drift_e{n}")


def qv_test(ensemble, lam_min: np.ndarray | None = None) -> RegressionResult:
    """Regress ``(delta e_p)^2`` on ``4 e_{p-1} e_p dt``; the slope should be 1.

    Increments starting from ``e_p = 0`` carry no martingale part and are excluded.
    """
    values, grid, _ = _stack(ensemble)
    p = values.shape[-1] - 1
    left, inc = _increments(values, psd_start_mask(values, lam_min))
    keep = left[:, p] != 0.0
    x = 4.0 * left[keep, p - 1] * left[keep, p] * grid.dt
    return regress_through_origin(x, inc[keep, p] ** 2, 1.0, name="qv_ep")


def write_polypath_csv(poly: PolyPath, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"e{n + 1}" for n in range(poly.p)])
    for t, row in zip(poly.grid.times, poly.values):
        w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
