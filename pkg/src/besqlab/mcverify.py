"""Monte Carlo experiments that turn the cone results into pass/fail verdicts.

Every experiment takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentReport`. Each verdict in a report is stored together with the
numbers that decide it (value, stderr, target, band, rule), so it can be
re-derived from the JSON alone via :meth:`Estimate.recompute`.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import polytrack, sde, wallach
from .errors import BesqError, InvalidInputError, PreconditionError
from .symcore import as_symmetric, elementary_symmetric, rank_tol

log = logging.getLogger(__name__)

PASS, FAIL, INCONCLUSIVE, ERROR = "pass", "fail", "inconclusive", "error"


# ------------------------------------------------------------------ matrices

def parse_matrix_spec(spec: str, p: int) -> np.ndarray:
    """Parse ``diag:a,b,c`` | ``file:PATH`` | ``zero`` | ``identity``.

    ``file:`` reads a CSV holding the row-major upper triangle (any layout of
    rows; values are read in order).
    """
    spec = spec.strip()
    if spec == "zero":
        return np.zeros((p, p))
    if spec == "identity":
        return np.eye(p)
    kind, _, body = spec.partition(":")
    if kind == "diag":
        try:
            vals = [float(v) for v in body.split(",") if v.strip()]
        except ValueError as exc:
            raise InvalidInputError(f"bad diagonal entries in {spec!r}") from exc
        if len(vals) != p:
            raise InvalidInputError(f"{spec!r} has {len(vals)} entries, expected p = {p}")
        return np.diag(vals)
    if kind == "file":
        try:
            with open(body, newline="") as fh:
                vals = [float(v) for row in csv.reader(fh) for v in row if v.strip()]
        except (OSError, ValueError) as exc:
            raise InvalidInputError(f"cannot read matrix from {body!r}: {exc}") from exc
        return wallach.x0_from_upper(p, vals)
    raise InvalidInputError(f"unrecognized matrix spec {spec!r}")


def parse_vector(spec: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in spec.split(",") if v.strip()])
    except ValueError as exc:
        raise InvalidInputError(f"bad vector {spec!r}") from exc


# -------------------------------------------------------------------- config

@dataclass
class ExperimentConfig:
    experiment: str
    p: int = 2
    alpha: float = 3.0
    x0: str = "identity"
    lambda0: str | None = None
    u: str = "diag:0.3,0.1"
    t_end: float = 1.0
    dt: float = sde.DEFAULT_DT
    n_paths: int = 1000
    master_seed: int = 42
    name: str | None = None
    k: float = 3.0
    bias_allowance: float = 0.01
    psd_slack: float = 0.05
    exit_budget: float = 0.01
    comparison_slack: float = 10.0
    rel_tol: float = 0.10
    eps_reg: float = sde.DEFAULT_EPS_REG
    rank_eps: float = 1e-9
    mode: str = "default"
    scheme: str | None = None
    threads: int = 1
    chunk_size: int | None = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise InvalidInputError("n_paths must be >= 1")
        for f in ("k", "psd_slack", "exit_budget", "comparison_slack", "rel_tol"):
            if not getattr(self, f) > 0:
                raise InvalidInputError(f"{f} must be positive")
        if self.bias_allowance < 0:
            raise InvalidInputError("bias_allowance must be non-negative")

    @property
    def label(self) -> str:
        return self.name or self.experiment

    def grid(self) -> sde.GridSpec:
        return sde.GridSpec(self.t_end, self.dt)

    def x0_matrix(self) -> np.ndarray:
        return parse_matrix_spec(self.x0, self.p)

    def u_matrix(self) -> np.ndarray:
        return parse_matrix_spec(self.u, self.p)

    def start_eigenvalues(self) -> np.ndarray:
        if self.lambda0:
            lam = np.sort(parse_vector(self.lambda0))
            if lam.size != self.p:
                raise InvalidInputError(f"lambda0 has {lam.size} entries, expected p = {self.p}")
            return lam
        return np.linalg.eigvalsh(self.x0_matrix())

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def coerce_field(key: str, value: str):
    """Convert a string to the type of config field ``key``."""
    if key not in _FIELD_TYPES:
        raise InvalidInputError(f"unknown config key {key!r}")
    typ = str(_FIELD_TYPES[key])
    if value.lower() in ("none", "") and "None" in typ:
        return None
    try:
        if typ.startswith("int"):
            return int(value)
        if typ.startswith("float"):
            return float(value)
    except ValueError as exc:
        raise InvalidInputError(f"bad value {value!r} for {key}") from exc
    return value


def read_config_file(path: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
            key = key.strip().replace("-", "_")
            out[key] = coerce_field(key, value.strip())
    return out


def load_config(path: str, **overrides) -> ExperimentConfig:
    values = read_config_file(path)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "experiment" not in values:
        raise InvalidInputError(f"{path}: missing 'experiment' key")
    return ExperimentConfig(**values)


# -------------------------------------------------------------------- report

@dataclass
class Estimate:
    name: str
    value: float
    stderr: float
    target: float
    band: float
    rule: str
    verdict: str = ""

    def __post_init__(self):
        if not self.verdict:
            self.verdict = self.recompute()

    def recompute(self) -> str:
        """Re-derive the verdict from the stored numbers."""
        v, t, b = self.value, self.target, self.band
        if any(isinstance(x, float) and math.isnan(x) for x in (v, b)):
            return INCONCLUSIVE
        ok = {
            "abs_diff_le_band": abs(v - t) <= b,
            "value_minus_band_gt_target": v - b > t,
            "value_le_target": v <= t,
            "value_gt_target": v > t,
            "value_eq_target": v == t,
        }[self.rule]
        return PASS if ok else FAIL

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ExperimentReport:
    name: str
    experiment: str
    config: dict
    estimates: list[Estimate] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    error: str | None = None
    runtime_s: float = 0.0
    per_path: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def verdict(self) -> str:
        if self.error is not None:
            return ERROR
        verdicts = [e.verdict for e in self.estimates]
        if FAIL in verdicts:
            return FAIL
        if INCONCLUSIVE in verdicts or not verdicts:
            return INCONCLUSIVE
        return PASS

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def as_dict(self, include_runtime: bool = False) -> dict:
        d = {
            "name": self.name,
            "experiment": self.experiment,
            "verdict": self.verdict,
            "config": self.config,
            "estimates": [e.as_dict() for e in self.estimates],
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
            "error": self.error,
        }
        if include_runtime:
            d["runtime_s"] = self.runtime_s
        return d

    def to_json(self, include_runtime: bool = False) -> str:
        return json.dumps(_jsonable(self.as_dict(include_runtime)), indent=2, sort_keys=True)

    def write(self, out_dir: str) -> tuple[str, str]:
        """Write ``<name>.json`` and ``<name>_paths.csv``; returns both paths."""
        os.makedirs(out_dir, exist_ok=True)
        jpath = os.path.join(out_dir, f"{self.name}.json")
        cpath = os.path.join(out_dir, f"{self.name}_paths.csv")
        with open(jpath, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")
        with open(cpath, "w", newline="") as fh:
            write_per_path_csv(self.per_path, fh)
        return jpath, cpath


PER_PATH_COLUMNS = ("min_lambda1", "exit_flag", "laplace_value")


def write_per_path_csv(per_path: dict, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("path_index",) + PER_PATH_COLUMNS)
    n = max((len(v) for v in per_path.values()), default=0)
    for i in range(n):
        row = [i]
        for col in PER_PATH_COLUMNS:
            arr = per_path.get(col)
            if arr is None:
                row.append("")
            elif arr.dtype == bool:
                row.append(int(arr[i]))
            else:
                row.append(repr(float(arr[i])))
        w.writerow(row)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _provenance(cfg: ExperimentConfig, n_streams: int) -> dict:
    return {
        "generator": "numpy Philox4x64, key=(master_seed, stream_index)",
        "master_seed": cfg.master_seed,
        "stream_indices": [0, n_streams - 1],
    }


def _new_report(cfg: ExperimentConfig) -> ExperimentReport:
    return ExperimentReport(cfg.label, cfg.experiment, cfg.as_dict())


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")
    return float(np.mean(x)), se


def _require_solvable(cfg: ExperimentConfig, x0: np.ndarray):
    if wallach.cone_sde_solvable(x0, cfg.alpha, cfg.rank_eps):
        return
    p = cfg.p
    B = list(range(p - 1))
    with_rank = rank_tol(x0, cfg.rank_eps)
    if wallach.discrete_index(cfg.alpha / 2, p) is None:
        why = f"alpha={cfg.alpha} < p-1={p - 1} and alpha not in B={B}"
    else:
        why = f"alpha={cfg.alpha} in B={B} but rank(x0)={with_rank} > alpha"
    raise PreconditionError(f"non-solvable parameters: no cone-valued solution ({why})")


# --------------------------------------------------------------- experiments

def _matrix_chunk(x0, alpha, dt, u=None, keep_poly=False, scheme="euler"):
    def run(z):
        N = z.shape[0]
        lam_min = np.full(N, np.inf)
        polys, mins = [], []
        X = None
        for X, lam in sde.iter_matrix_besq(x0, alpha, dt, z, scheme):
            lam_min = np.minimum(lam_min, lam[:, 0])
            if keep_poly:
                polys.append(elementary_symmetric(lam))
                mins.append(lam[:, 0])
        out = {"min_lambda1": lam_min}
        if u is not None:
            out["laplace_value"] = np.exp(-np.einsum("ij,nji->n", u, X))
        if keep_poly:
            out["poly"] = np.stack(polys, axis=1)
            out["lam_min"] = np.stack(mins, axis=1)
        return out

    return run


def verify_laplace(cfg: ExperimentConfig) -> ExperimentReport:
    """Monte Carlo mean of ``exp(-Tr(u X_t))`` over Euler paths vs the closed form."""
    rep = _new_report(cfg)
    x0, u = cfg.x0_matrix(), cfg.u_matrix()
    _require_solvable(cfg, x0)
    grid = cfg.grid()
    target = wallach.laplace_closed_form(x0, cfg.alpha / 2, wallach.LaplaceQuery(u, t=cfg.t_end))
    res = sde.run_ensemble(
        cfg.n_paths, cfg.master_seed, (grid.n_steps, cfg.p, cfg.p),
        _matrix_chunk(x0, cfg.alpha, grid.dt, u, scheme=cfg.scheme or "euler"), cfg.chunk_size, cfg.threads,
    )
    m, se = _mean_se(res["laplace_value"])
    rep.estimates.append(Estimate("laplace", m, se, target, cfg.k * se + cfg.bias_allowance, "abs_diff_le_band"))
    rep.per_path = {"min_lambda1": res["min_lambda1"], "laplace_value": res["laplace_value"]}
    rep.diagnostics = {"bias_allowance": cfg.bias_allowance, "min_lambda1_overall": float(res["min_lambda1"].min())}
    rep.provenance = _provenance(cfg, cfg.n_paths)
    return rep


def verify_laplace_exact(cfg: ExperimentConfig) -> ExperimentReport:
    """Same transform, sampled exactly as a sum of ``alpha`` Gaussian outer products (``Sigma = t I``)."""
    rep = _new_report(cfg)
    n = round(cfg.alpha)
    if n < 1 or abs(cfg.alpha - n) > 1e-12:
        raise PreconditionError(f"exact sampler needs 2*beta = alpha a positive integer, got alpha={cfg.alpha}")
    x0, u = cfg.x0_matrix(), cfg.u_matrix()
    means = wallach.means_for(x0, n, cfg.rank_eps)
    Sigma = cfg.t_end * np.eye(cfg.p)
    target = wallach.laplace_closed_form(x0, n / 2, wallach.LaplaceQuery(u, Sigma=Sigma))

    def run(z):
        X = wallach.sample_exact_batch(means, Sigma, z)
        return {
            "laplace_value": np.exp(-np.einsum("ij,nji->n", u, X)),
            "min_lambda1": np.linalg.eigvalsh(X)[:, 0],
        }

    res = sde.run_ensemble(cfg.n_paths, cfg.master_seed, (n, cfg.p), run, cfg.chunk_size, cfg.threads)
    m, se = _mean_se(res["laplace_value"])
    rep.estimates.append(Estimate("laplace_exact", m, se, target, cfg.k * se, "abs_diff_le_band"))
    rep.per_path = res
    rep.diagnostics = {"n_gaussians": n, "means": means.tolist()}
    rep.provenance = _provenance(cfg, cfg.n_paths)
    return rep


def estimate_negativity(cfg: ExperimentConfig) -> ExperimentReport:
    """Fraction of particle paths with ``lambda_1(t_end) < 0`` when ``0 < alpha < p-1``.

    ``mode = "scalar_exact"`` instead samples the comparison process from 0 by the
    exact negative-dimension law. ``mode = "diagnostic"`` is meant for
    ``alpha >= p-1`` and checks that the fraction below ``-psd_slack`` is not
    significantly positive.
    """
    rep = _new_report(cfg)
    p, alpha = cfg.p, cfg.alpha
    diagnostic = cfg.mode == "diagnostic"
    if not diagnostic and not 0 < alpha < p - 1:
        raise PreconditionError(f"negativity needs 0 < alpha < p-1; got alpha={alpha}, p={p}")
    grid = cfg.grid()
    if cfg.mode == "scalar_exact":
        delta = alpha - (p - 1)
        finals = np.array([
            sde.simulate_scalar_besq(0.0, delta, grid, sde.RngStream(cfg.master_seed, i), exact=True)[-1]
            for i in range(cfg.n_paths)
        ])
        res = {"min_lambda1": finals}
        clamps = 0
    else:
        lam0 = cfg.start_eigenvalues()

        def run(z):
            lam_min = np.full(z.shape[0], np.inf)
            clamps = np.zeros(z.shape[0], dtype=int)
            for lam, c, _ in sde.iter_particles(lam0, alpha, grid.dt, z, cfg.eps_reg):
                lam_min = np.minimum(lam_min, lam[:, 0])
                clamps += c
            return {"final_lambda1": lam[:, 0], "min_lambda1": lam_min, "clamps": clamps}

        res = sde.run_ensemble(cfg.n_paths, cfg.master_seed, (grid.n_steps, p), run, cfg.chunk_size, cfg.threads)
        finals = res["final_lambda1"]
        clamps = int(res["clamps"].sum())
    threshold = -cfg.psd_slack if diagnostic else 0.0
    flags = finals < threshold
    f = float(flags.mean())
    se = math.sqrt(f * (1 - f) / flags.size)
    if diagnostic:
        rep.estimates.append(Estimate("negative_fraction_floor", f - cfg.k * se, se, 0.0, 0.0, "value_le_target"))
    else:
        rep.estimates.append(Estimate("negative_fraction", f, se, 0.0, cfg.k * se, "value_minus_band_gt_target"))
    rep.per_path = {"min_lambda1": res["min_lambda1"], "exit_flag": flags}
    rep.diagnostics = {"fraction": f, "threshold": threshold, "clamp_activations": clamps}
    rep.provenance = _provenance(cfg, cfg.n_paths)
    return rep


def verify_psd_retention(cfg: ExperimentConfig) -> ExperimentReport:
    """Fraction of matrix paths whose smallest eigenvalue dips below ``-psd_slack``.

    Runs the ``square`` scheme unless ``cfg.scheme`` says otherwise. Plain Euler
    lets an eigenvalue that reached 0 diffuse below the cone (its drift vanishes
    there), so its exit fraction is reported alongside as a diagnostic.
    """
    rep = _new_report(cfg)
    x0 = cfg.x0_matrix()
    _require_solvable(cfg, x0)
    grid = cfg.grid()
    scheme = cfg.scheme or "square"
    shape = (grid.n_steps, cfg.p, cfg.p)

    def exit_run(s):
        return sde.run_ensemble(
            cfg.n_paths, cfg.master_seed, shape, _matrix_chunk(x0, cfg.alpha, grid.dt, scheme=s),
            cfg.chunk_size, cfg.threads,
        )

    res = exit_run(scheme)
    exits = res["min_lambda1"] < -cfg.psd_slack
    frac = float(exits.mean())
    se = math.sqrt(frac * (1 - frac) / exits.size)
    rep.estimates.append(Estimate("exit_fraction", frac, se, cfg.exit_budget, 0.0, "value_le_target"))
    rep.per_path = {"min_lambda1": res["min_lambda1"], "exit_flag": exits}
    rep.diagnostics = {
        "scheme": scheme,
        "psd_slack": cfg.psd_slack,
        "min_lambda1_overall": float(res["min_lambda1"].min()),
    }
    if scheme != "euler":
        other = exit_run("euler")
        rep.diagnostics["euler_exit_fraction"] = float(np.mean(other["min_lambda1"] < -cfg.psd_slack))
    rep.provenance = _provenance(cfg, cfg.n_paths)
    return rep


def verify_comparison(cfg: ExperimentConfig) -> ExperimentReport:
    """Count grid events where ``lambda_1`` exceeds its comparison process by more than ``slack * sqrt(dt)``."""
    rep = _new_report(cfg)
    lam0 = cfg.start_eigenvalues()
    if lam0[0] < 0:
        raise PreconditionError("comparison needs lambda_1(0) >= 0")
    grid = cfg.grid()
    slack = cfg.comparison_slack * math.sqrt(grid.dt)

    def run(z):
        N = z.shape[0]
        events = np.zeros(N, dtype=int)
        excess = np.full(N, -np.inf)
        lam_min = np.full(N, np.inf)
        clamps = np.zeros(N, dtype=int)
        for lam, tilde, c in sde.iter_coupled(lam0, cfg.alpha, grid.dt, z, cfg.eps_reg):
            d = lam[:, 0] - tilde
            events += d > slack
            excess = np.maximum(excess, d)
            lam_min = np.minimum(lam_min, lam[:, 0])
            clamps += c
        return {"events": events, "max_excess": excess, "min_lambda1": lam_min, "clamps": clamps}

    res = sde.run_ensemble(cfg.n_paths, cfg.master_seed, (grid.n_steps, cfg.p), run, cfg.chunk_size, cfg.threads)
    total = int(res["events"].sum())
    rep.estimates.append(Estimate("violations", float(total), 0.0, 0.0, 0.0, "value_le_target"))
    rep.per_path = {"min_lambda1": res["min_lambda1"], "exit_flag": res["events"] > 0}
    rep.diagnostics = {
        "slack": slack,
        "max_excess": float(res["max_excess"].max()),
        "clamp_activations": int(res["clamps"].sum()),
    }
    rep.provenance = _provenance(cfg, cfg.n_paths)
    return rep


def verify_noncollision(cfg: ExperimentConfig) -> ExperimentReport:
    """Smallest adjacent gap over ``[t_end/10, t_end]`` and clamp activations there."""
    rep = _new_report(cfg)
    p, alpha = cfg.p, cfg.alpha
    lam0 = cfg.start_eigenvalues()
    if p == 1:
        rep.estimates.append(Estimate("min_gap", math.inf, 0.0, 0.0, 0.0, "value_gt_target"))
        rep.diagnostics = {"note": "single particle, no pairs"}
        return rep
    in_b = wallach.discrete_index(alpha / 2, p) is not None
    if not (in_b or alpha >= p - 1):
        raise PreconditionError(f"non-collision is checked for alpha in B or alpha >= p-1; got alpha={alpha}")
    if not lam0[0] > 0:
        raise PreconditionError("non-collision needs a full-rank start")
    grid = cfg.grid()
    k0 = math.ceil(round(grid.n_steps / 10, 9))

    def run(z):
        N = z.shape[0]
        gap = np.full(N, np.inf)
        clamps = np.zeros(N, dtype=int)
        resorts = np.zeros(N, dtype=int)
        lam_min = np.full(N, np.inf)
        for k, (lam, c, dis) in enumerate(sde.iter_particles(lam0, alpha, grid.dt, z, cfg.eps_reg)):
            resorts += dis
            lam_min = np.minimum(lam_min, lam[:, 0])
            if k >= k0:
                gap = np.minimum(gap, np.diff(lam, axis=-1).min(axis=-1))
                clamps += c
        return {"min_gap": gap, "clamps": clamps, "resorts": resorts, "min_lambda1": lam_min}

    res = sde.run_ensemble(cfg.n_paths, cfg.master_seed, (grid.n_steps, p), run, cfg.chunk_size, cfg.threads)
    rep.estimates.append(Estimate("min_gap", float(res["min_gap"].min()), 0.0, 0.0, 0.0, "value_gt_target"))
    rep.estimates.append(Estimate("window_clamps", float(res["clamps"].sum()), 0.0, 0.0, 0.0, "value_eq_target"))
    rep.per_path = {"min_lambda1": res["min_lambda1"]}
    rep.diagnostics = {"window_start": k0 * grid.dt, "resort_events": int(res["resorts"].sum())}
    rep.provenance = _provenance(cfg, cfg.n_paths)
    return rep


def verify_polynomial_dynamics(cfg: ExperimentConfig) -> ExperimentReport:
    """Drift regressions for every ``e_n`` plus the quadratic variation of ``e_p``.

    Only increments that start inside the PSD cone enter the regressions.
    """
    rep = _new_report(cfg)
    x0 = cfg.x0_matrix()
    grid = cfg.grid()
    res = sde.run_ensemble(
        cfg.n_paths, cfg.master_seed, (grid.n_steps, cfg.p, cfg.p),
        _matrix_chunk(x0, cfg.alpha, grid.dt, keep_poly=True, scheme=cfg.scheme or "euler"),
        cfg.chunk_size, cfg.threads,
    )
    poly = polytrack.PolyPath(grid, res["poly"], cfg.alpha)
    results = [polytrack.drift_test(poly, n, res["lam_min"]) for n in range(1, cfg.p + 1)]
    results.append(polytrack.qv_test(poly, res["lam_min"]))
    for r in results:
        band = float("nan") if r.inconclusive else max(cfg.k * r.stderr, cfg.rel_tol * abs(r.target))
        rep.estimates.append(Estimate(r.name, r.estimate, r.stderr, r.target, band, "abs_diff_le_band"))
    rep.per_path = {"min_lambda1": res["min_lambda1"]}
    rep.diagnostics = {
        "n_increments": int(res["lam_min"][:, :-1].size),
        "n_used": results[0].n_obs,
        "regressions": [r.as_dict() for r in results],
    }
    rep.provenance = _provenance(cfg, cfg.n_paths)
    return rep


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "laplace": verify_laplace,
    "laplace_exact": verify_laplace_exact,
    "negativity": estimate_negativity,
    "psd_retention": verify_psd_retention,
    "comparison": verify_comparison,
    "noncollision": verify_noncollision,
    "polynomial": verify_polynomial_dynamics,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.experiment not in EXPERIMENTS:
        raise InvalidInputError(f"unknown experiment {cfg.experiment!r}; choose from {sorted(EXPERIMENTS)}")
    t0 = time.perf_counter()
    rep = EXPERIMENTS[cfg.experiment](cfg)
    rep.runtime_s = time.perf_counter() - t0
    log.info("%s: %s in %.1fs", rep.name, rep.verdict, rep.runtime_s)
    return rep


def run_suite(configs, out_dir: str | None = None) -> tuple[list[ExperimentReport], dict]:
    """Run each config; failures of one experiment never abort the others."""
    reports = []
    for cfg in configs:
        try:
            rep = run_experiment(cfg)
        except BesqError as exc:
            rep = _new_report(cfg)
            rep.error = f"{type(exc).__name__}: {exc}"
            log.warning("%s: %s", rep.name, rep.error)
        reports.append(rep)
        if out_dir is not None:
            rep.write(out_dir)
    verdicts = {r.name: r.verdict for r in reports}
    summary = {
        "n_experiments": len(reports),
        "verdicts": verdicts,
        "counts": {v: list(verdicts.values()).count(v) for v in (PASS, FAIL, INCONCLUSIVE, ERROR)},
        "all_pass": all(v == PASS for v in verdicts.values()),
    }
    if out_dir is not None:
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return reports, summary


# ------------------------------------------------------------------- presets

PRESETS: dict[str, ExperimentConfig] = {
    "laplace-p2-a3": ExperimentConfig(
        "laplace", p=2, alpha=3.0, x0="diag:1,0.5", u="diag:0.3,0.1", n_paths=200_000, name="laplace-p2-a3"),
    "laplace-exact-p2-b1": ExperimentConfig(
        "laplace_exact", p=2, alpha=2.0, x0="diag:1,0.5", u="diag:0.3,0.1", n_paths=200_000,
        name="laplace-exact-p2-b1"),
    "negativity-p2-a0.5": ExperimentConfig(
        "negativity", p=2, alpha=0.5, x0="diag:1,2", n_paths=10_000, name="negativity-p2-a0.5"),
    "psd-p2-a1": ExperimentConfig(
        "psd_retention", p=2, alpha=1.0, x0="diag:1,2", dt=2.0**-12, n_paths=1000, name="psd-p2-a1"),
    "psd-p3-a2": ExperimentConfig(
        "psd_retention", p=3, alpha=2.0, x0="diag:1,2,3", dt=2.0**-12, n_paths=1000, name="psd-p3-a2"),
    "comparison-p2-a0.5": ExperimentConfig(
        "comparison", p=2, alpha=0.5, lambda0="0,1", n_paths=1000, name="comparison-p2-a0.5"),
    "comparison-p3-a1.5": ExperimentConfig(
        "comparison", p=3, alpha=1.5, lambda0="0,1,2", n_paths=1000, name="comparison-p3-a1.5"),
    "noncollision-p2-a1": ExperimentConfig(
        "noncollision", p=2, alpha=1.0, x0="diag:1,2", n_paths=1000, name="noncollision-p2-a1"),
    "noncollision-p3-a1": ExperimentConfig(
        "noncollision", p=3, alpha=1.0, x0="diag:1,2,3", n_paths=1000, name="noncollision-p3-a1"),
    # many short paths: 1000 x 100 steps = 1e5 increments with nearly independent regressors
    "polynomial-p2-a3": ExperimentConfig(
        "polynomial", p=2, alpha=3.0, x0="identity", t_end=100 * 2.0**-10, n_paths=1000, name="polynomial-p2-a3"),
    "polynomial-p3-a1": ExperimentConfig(
        "polynomial", p=3, alpha=1.0, x0="identity", t_end=100 * 2.0**-10, n_paths=1000, name="polynomial-p3-a1"),
}
# short aliases
PRESETS["p2-a3"] = PRESETS["laplace-p2-a3"]


def default_suite(scale: float = 1.0) -> list[ExperimentConfig]:
    """All presets (aliases excluded), with ``n_paths`` multiplied by ``scale``."""
    out = []
    for key, cfg in PRESETS.items():
        if key != cfg.name:
            continue
        out.append(cfg.replace(n_paths=max(2, int(cfg.n_paths * scale))))
    return out
