"""Euler-Maruyama integrators for squared Bessel processes.

Three levels of API live here:

* ``step_*`` functions advance one state by one step,
* ``simulate_*`` functions integrate one path and return a path object,
* ``iter_*`` generators advance a *batch* of paths in lock-step from a block of
  pre-drawn standard normals; :func:`run_ensemble` feeds them chunk by chunk.

All three share the same arithmetic (``_matrix_step``, ``_particle_step``,
``_scalar_step``), so a single path run through any of them is bit-identical.

Noise comes from :class:`RngStream`, a Philox counter-based generator keyed by
``(master_seed, stream_index)``. Path ``i`` of an ensemble always uses stream
``i``; chunking and threading therefore never change results.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import InvalidGridError, InvalidInputError, SingularDriftError
from .symcore import as_symmetric

DEFAULT_DT = 2.0**-10
DEFAULT_EPS_REG = 1e-8

_MASK64 = (1 << 64) - 1


class RngStream:
    """Reproducible normal/gamma/Poisson source for one path.

    Replaying from the same ``(master_seed, stream_index)`` reproduces the output
    exactly; distinct keys give independent Philox streams.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if stream_index < 0:
            raise InvalidInputError("stream_index must be non-negative")
        self.master_seed = int(master_seed) & _MASK64
        self.stream_index = int(stream_index)
        key = np.array([self.master_seed, self.stream_index], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"

    def replay(self) -> "RngStream":
        return RngStream(self.master_seed, self.stream_index)

    def standard_normal(self, size) -> np.ndarray:
        return self._gen.standard_normal(size)

    def gamma(self, shape, size=None):
        return self._gen.gamma(shape, size=size)

    def poisson(self, lam, size=None):
        return self._gen.poisson(lam, size=size)


class ZeroNoise:
    """Test hook: every Gaussian draw is zero, leaving pure drift."""

    def standard_normal(self, size) -> np.ndarray:
        return np.zeros(size)


class FixedNoise:
    """Test hook: serves the given standard-normal values in order."""

    def __init__(self, values):
        self._values = np.asarray(values, dtype=float).ravel()
        self._pos = 0

    def standard_normal(self, size) -> np.ndarray:
        n = int(np.prod(size))
        if self._pos + n > self._values.size:
            raise InvalidInputError("FixedNoise exhausted")
        out = self._values[self._pos : self._pos + n].reshape(size)
        self._pos += n
        return out.copy()


@dataclass(frozen=True)
class GridSpec:
    t_end: float
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end > 0):
            raise InvalidGridError(f"need t_end > 0 and dt > 0, got t_end={self.t_end}, dt={self.dt}")
        n = round(self.t_end / self.dt)
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-12 * self.t_end:
            raise InvalidGridError(f"t_end={self.t_end} is not a whole number of steps dt={self.dt}")

    @classmethod
    def from_steps(cls, t_end: float, n_steps: int) -> "GridSpec":
        return cls(t_end, t_end / n_steps)

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass
class MatrixPath:
    grid: GridSpec
    states: np.ndarray  # (n_steps + 1, p, p)
    alpha: float
    origin: np.ndarray

    @property
    def p(self) -> int:
        return self.states.shape[-1]


@dataclass
class VectorPath:
    grid: GridSpec
    states: np.ndarray  # (n_steps + 1, p), each row ascending
    alpha: float
    clamp_count: int = 0
    resort_count: int = 0
    clamps_per_state: np.ndarray | None = field(default=None, repr=False)


def _check_dt(dt: float):
    if not dt > 0:
        raise InvalidGridError(f"dt must be positive, got {dt}")


# ---------------------------------------------------------------- matrix BESQ

def brownian_matrix_increment(p: int, dt: float, rng) -> np.ndarray:
    """A ``p x p`` matrix of independent N(0, dt) entries (not symmetrized)."""
    _check_dt(dt)
    return math.sqrt(dt) * rng.standard_normal((p, p))


SCHEMES = ("euler", "square")


def _matrix_step(X, lam, U, alpha, dt, dW, scheme="euler"):
    p = X.shape[-1]
    if scheme == "euler":
        R = (U * np.sqrt(np.abs(lam))[..., None, :]) @ np.swapaxes(U, -1, -2)
        A = R @ dW
        # A + A^T is exactly symmetric, so X stays exactly symmetric
        return X + (A + np.swapaxes(A, -1, -2)) + (alpha * dt) * np.eye(p)
    if scheme == "square":
        # (R + dW)^T (R + dW) + (X - X^+) + (alpha - p) dt I with R = sqrt(X^+);
        # same one-step mean and martingale part as "euler" on the cone
        R = (U * np.sqrt(np.maximum(lam, 0.0))[..., None, :]) @ np.swapaxes(U, -1, -2)
        A = R @ dW
        G = np.swapaxes(dW, -1, -2) @ dW
        G = 0.5 * (G + np.swapaxes(G, -1, -2))
        return X + (A + np.swapaxes(A, -1, -2)) + (G - (p * dt) * np.eye(p)) + (alpha * dt) * np.eye(p)
    raise InvalidInputError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def step_matrix_besq(X, alpha: float, dt: float, rng, scheme: str = "euler") -> np.ndarray:
    """One step of ``dX = sqrt|X| dW + dW^T sqrt|X| + alpha I dt``.

    ``scheme="euler"`` is plain Euler-Maruyama with the coefficient as written.
    ``scheme="square"`` uses ``sqrt(X^+)`` and adds the zero-mean term
    ``dW^T dW - p dt I``; it keeps eigenvalues absorbed at 0 from leaking below
    the cone when ``alpha >= p - 1`` while leaving exits for smaller ``alpha``.
    """
    X = as_symmetric(X)
    dW = brownian_matrix_increment(X.shape[-1], dt, rng)
    lam, U = np.linalg.eigh(X)
    return _matrix_step(X, lam, U, alpha, dt, dW, scheme)


def iter_matrix_besq(x0, alpha: float, dt: float, z: np.ndarray, scheme: str = "euler") -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Advance ``N`` matrix paths; ``z`` has shape ``(N, n_steps, p, p)``.

    Yields ``(X_k, eigenvalues of X_k)`` for ``k = 0..n_steps``; batch shapes
    ``(N, p, p)`` and ``(N, p)``.
    """
    _check_dt(dt)
    if scheme not in SCHEMES:
        raise InvalidInputError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    N, n_steps, p, _ = z.shape
    X = np.broadcast_to(as_symmetric(x0), (N, p, p)).copy()
    sq = math.sqrt(dt)
    for k in range(n_steps):
        lam, U = np.linalg.eigh(X)
        yield X, lam
        X = _matrix_step(X, lam, U, alpha, dt, sq * z[:, k], scheme)
    yield X, np.linalg.eigvalsh(X)


def simulate_matrix_besq(x0, alpha: float, grid: GridSpec, rng, scheme: str = "euler") -> MatrixPath:
    x0 = as_symmetric(x0)
    p = x0.shape[-1]
    z = rng.standard_normal((grid.n_steps, p, p))[None]
    states = np.stack([X[0] for X, _ in iter_matrix_besq(x0, alpha, grid.dt, z, scheme)])
    return MatrixPath(grid, states, alpha, x0)


# ----------------------------------------------------------- particle system

def _check_sorted(lam):
    if np.any(np.diff(lam, axis=-1) < 0):
        raise InvalidInputError("particle positions must be sorted ascending")


def particle_drift(lam: np.ndarray, alpha: float, eps_reg: float = DEFAULT_EPS_REG):
    """Drift ``alpha + sum_{k != i} (|l_i| + |l_k|) / (l_i - l_k)`` with clamped denominators.

    Each denominator ``l_i - l_k`` is replaced by ``sign(l_i - l_k) * max(|l_i - l_k|, eps_reg)``;
    an exactly coincident pair contributes zero. Returns ``(drift, clamps)`` where
    ``clamps`` counts pairs closer than ``eps_reg`` in each state.
    """
    lam = np.asarray(lam, dtype=float)
    p = lam.shape[-1]
    diff = lam[..., :, None] - lam[..., None, :]
    num = np.abs(lam)[..., :, None] + np.abs(lam)[..., None, :]
    gap = np.abs(diff)
    off = ~np.eye(p, dtype=bool)
    if eps_reg <= 0:
        if np.any((gap == 0) & off):
            raise SingularDriftError("colliding particles with eps_reg = 0")
        inter = np.where(off, num / np.where(off, diff, 1.0), 0.0)
    else:
        inter = np.sign(diff) * num / np.maximum(gap, eps_reg)
    clamps = np.count_nonzero(np.triu(gap < eps_reg, 1), axis=(-2, -1)) if eps_reg > 0 else np.zeros(lam.shape[:-1], int)
    return alpha + inter.sum(axis=-1), clamps


def _particle_step(lam, alpha, dt, dB, eps_reg):
    drift, clamps = particle_drift(lam, alpha, eps_reg)
    raw = lam + 2.0 * np.sqrt(np.abs(lam)) * dB + drift * dt
    disordered = np.any(np.diff(raw, axis=-1) < 0, axis=-1)
    return np.sort(raw, axis=-1), clamps, disordered


def step_particles(lambdas, alpha: float, dt: float, rng, eps_reg: float = DEFAULT_EPS_REG) -> np.ndarray:
    """One Euler step of the eigenvalue particle system; output re-sorted ascending."""
    _check_dt(dt)
    lam = np.asarray(lambdas, dtype=float)
    _check_sorted(lam)
    dB = math.sqrt(dt) * rng.standard_normal(lam.shape)
    return _particle_step(lam, alpha, dt, dB, eps_reg)[0]


def iter_particles(lam0, alpha: float, dt: float, z: np.ndarray, eps_reg: float = DEFAULT_EPS_REG):
    """Advance ``N`` particle systems; ``z`` has shape ``(N, n_steps, p)``.

    Yields ``(lam_k, clamps_k, disordered_k)`` for ``k = 0..n_steps``. ``clamps_k``
    counts regularized pairs in state ``k``; ``disordered_k`` flags paths whose
    raw update into state ``k`` needed re-sorting.
    """
    _check_dt(dt)
    N, n_steps, p = z.shape
    lam = np.broadcast_to(np.asarray(lam0, dtype=float), (N, p)).copy()
    _check_sorted(lam)
    sq = math.sqrt(dt)
    disordered = np.zeros(N, dtype=bool)
    for k in range(n_steps):
        new, clamps, dis = _particle_step(lam, alpha, dt, sq * z[:, k], eps_reg)
        yield lam, clamps, disordered
        lam, disordered = new, dis
    yield lam, particle_drift(lam, alpha, eps_reg)[1] if eps_reg > 0 else np.zeros(N, int), disordered


def _collect_particles(it, grid, alpha):
    states, clamps, dis = [], [], []
    for lam, c, d in it:
        states.append(lam[0])
        clamps.append(int(c[0]))
        dis.append(bool(d[0]))
    clamps = np.array(clamps)
    # the final state is never stepped from, so its clamp count is diagnostic only
    return VectorPath(grid, np.array(states), alpha, int(clamps[:-1].sum()), int(sum(dis)), clamps)


def simulate_particles(lambda0, alpha: float, grid: GridSpec, rng, eps_reg: float = DEFAULT_EPS_REG) -> VectorPath:
    lam0 = np.atleast_1d(np.asarray(lambda0, dtype=float))
    z = rng.standard_normal((grid.n_steps, lam0.size))[None]
    return _collect_particles(iter_particles(lam0, alpha, grid.dt, z, eps_reg), grid, alpha)


# ---------------------------------------------------------------- scalar BESQ

def _scalar_step(x, delta, dt, dB):
    return x + 2.0 * np.sqrt(np.abs(x)) * dB + delta * dt


def iter_scalar_besq(x0, delta: float, dt: float, z: np.ndarray):
    """Euler paths of ``dx = 2 sqrt|x| dB + delta dt``; ``z`` has shape ``(N, n_steps)``."""
    _check_dt(dt)
    N, n_steps = z.shape
    x = np.broadcast_to(np.asarray(x0, dtype=float), (N,)).copy()
    sq = math.sqrt(dt)
    for k in range(n_steps):
        yield x
        x = _scalar_step(x, delta, dt, sq * z[:, k])
    yield x


def besq_transition(x: float, delta: float, h: float, rng) -> float:
    """Exact BESQ^delta transition over time ``h`` for ``delta >= 0``, ``x >= 0``.

    Uses the Poisson mixture of chi-squares: ``X_h = h * chi2(delta + 2N)`` with
    ``N ~ Poisson(x / (2h))``; a chi-square with zero degrees of freedom is 0.
    """
    n = rng.poisson(x / (2.0 * h))
    shape = 0.5 * delta + n
    return 2.0 * h * float(rng.gamma(shape)) if shape > 0 else 0.0


def simulate_scalar_besq(x0: float, delta: float, grid: GridSpec, rng, exact: bool = False) -> np.ndarray:
    """Path of the scalar squared Bessel process of dimension ``delta``.

    ``exact=False`` runs Euler on ``dx = 2 sqrt|x| dB + delta dt``. ``exact=True``
    samples the exact law on the grid: for ``delta >= 0`` and ``x0 >= 0`` by exact
    transitions, and for ``delta < 0`` from ``x0 = 0`` as the negation of a
    BESQ^|delta|(0) path.
    """
    if not exact:
        z = rng.standard_normal(grid.n_steps)[None]
        return np.array([x[0] for x in iter_scalar_besq(x0, delta, grid.dt, z)])
    if delta < 0:
        if x0 != 0:
            raise InvalidInputError("exact mode for negative dimension requires x0 = 0")
        return -simulate_scalar_besq(0.0, -delta, grid, rng, exact=True)
    if x0 < 0:
        raise InvalidInputError("exact mode for delta >= 0 requires x0 >= 0")
    out = np.empty(grid.n_steps + 1)
    out[0] = x0
    for k in range(grid.n_steps):
        out[k + 1] = besq_transition(out[k], delta, grid.dt, rng)
    return out


# ------------------------------------------------------ comparison coupling

def iter_coupled(lam0, alpha: float, dt: float, z: np.ndarray, eps_reg: float = DEFAULT_EPS_REG):
    """Particle system plus ``d tilde = 2 sqrt|tilde| dB_1 + (alpha - (p-1)) dt``.

    The scalar process is driven by the increment given to the lowest particle.
    Yields ``(lam_k, tilde_k, clamps_k)``.
    """
    _check_dt(dt)
    N, n_steps, p = z.shape
    lam = np.broadcast_to(np.asarray(lam0, dtype=float), (N, p)).copy()
    _check_sorted(lam)
    if np.any(lam[:, 0] < 0):
        raise InvalidInputError("comparison requires lambda_1(0) >= 0")
    tilde = lam[:, 0].copy()
    delta = alpha - (p - 1)
    sq = math.sqrt(dt)
    for k in range(n_steps):
        dB = sq * z[:, k]
        new, clamps, _ = _particle_step(lam, alpha, dt, dB, eps_reg)
        yield lam, tilde, clamps
        lam, tilde = new, _scalar_step(tilde, delta, dt, dB[:, 0])
    yield lam, tilde, np.zeros(N, int)


def simulate_coupled_comparison(x0, alpha: float, grid: GridSpec, rng, eps_reg: float = DEFAULT_EPS_REG):
    """Return ``(VectorPath of lambda, path of tilde-lambda_1)`` on shared noise.

    ``x0`` may be a symmetric matrix (its eigenvalues are used) or a sorted vector.
    """
    a = np.asarray(x0, dtype=float)
    lam0 = np.linalg.eigvalsh(as_symmetric(a)) if a.ndim == 2 else np.atleast_1d(a)
    z = rng.standard_normal((grid.n_steps, lam0.size))[None]
    states, tildes, clamps = [], [], []
    for lam, tilde, c in iter_coupled(lam0, alpha, grid.dt, z, eps_reg):
        states.append(lam[0])
        tildes.append(tilde[0])
        clamps.append(int(c[0]))
    path = VectorPath(grid, np.array(states), alpha, int(sum(clamps)), 0, np.array(clamps))
    return path, np.array(tildes)


# ------------------------------------------------------------------ ensembles

def draw_block(master_seed: int, indices, shape) -> np.ndarray:
    """Standard normals of ``shape`` for each stream index, stacked on axis 0."""
    return np.stack([RngStream(master_seed, i).standard_normal(shape) for i in indices])


def default_chunk(shape) -> int:
    per_path = int(np.prod(shape))
    return int(max(1, min(4096, (1 << 24) // max(per_path, 1))))


def run_ensemble(
    n_paths: int,
    master_seed: int,
    noise_shape: tuple,
    run_chunk: Callable[[np.ndarray], dict],
    chunk_size: int | None = None,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """Apply ``run_chunk`` to blocks of per-path noise and concatenate the results.

    ``run_chunk`` receives an array ``(chunk, *noise_shape)`` and returns a dict of
    arrays whose leading axis is the chunk. Output is independent of
    ``chunk_size`` and ``threads`` because path ``i`` always reads stream ``i``.
    """
    if n_paths < 1:
        raise InvalidInputError("n_paths must be >= 1")
    chunk_size = chunk_size or default_chunk(noise_shape)
    starts = list(range(0, n_paths, chunk_size))

    def job(start):
        idx = range(start, min(start + chunk_size, n_paths))
        return run_chunk(draw_block(master_seed, idx, noise_shape))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(s) for s in starts]
    return {k: np.concatenate([part[k] for part in parts]) for k in parts[0]}


# ------------------------------------------------------------------ CSV dumps

def _fmt(x: float) -> str:
    return repr(float(x))


def write_matrix_path_csv(path: MatrixPath, fh) -> None:
    """One row per grid time: ``t`` then the upper triangle, row-major."""
    p = path.p
    iu = np.triu_indices(p)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}{j + 1}" for i, j in zip(*iu)])
    for t, X in zip(path.grid.times, path.states):
        w.writerow([_fmt(t)] + [_fmt(v) for v in X[iu]])


def write_vector_path_csv(times, states, fh, prefix: str = "lambda") -> None:
    states = np.asarray(states)
    if states.ndim == 1:
        states = states[:, None]
    w = csv.writer(fh, lineterminator="\n")
    names = [prefix] if states.shape[1] == 1 else [f"{prefix}{i + 1}" for i in range(states.shape[1])]
    w.writerow(["t"] + names)
    for t, row in zip(times, states):
        w.writerow([_fmt(t)] + [_fmt(v) for v in row])
