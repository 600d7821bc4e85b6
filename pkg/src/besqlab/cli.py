"""Command-line front end: ``besqlab {wallach-check,simulate,verify,suite}``.

Exit codes: 0 success or pass, 1 usage/input/precondition error, 2 non-member
or failed verdict.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import mcverify, sde, wallach
from .errors import BesqError

SEED_ENV = "BESQLAB_SEED"
DEFAULT_SEED = 42

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def resolve_seed(flag: int | None, config_seed: int | None = None) -> int:
    """Seed precedence: flag > environment > config file > default."""
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError as exc:
            raise BesqError(f"{SEED_ENV}={env!r} is not an integer") from exc
    if config_seed is not None:
        return config_seed
    return DEFAULT_SEED


# ------------------------------------------------------------ wallach-check

def cmd_wallach_check(args) -> int:
    x0 = mcverify.parse_matrix_spec(args.x0, args.p)
    result = wallach.classify(wallach.WallachPoint(x0, args.beta), args.epsilon).as_dict()
    print(json.dumps(result))
    return EXIT_OK if result["member"] else EXIT_NEGATIVE


# ------------------------------------------------------------------ simulate

def cmd_simulate(args) -> int:
    grid = sde.GridSpec(args.t, args.dt)
    seed = resolve_seed(args.seed)
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.paths):
        rng = sde.RngStream(seed, i)
        fname = os.path.join(args.out, f"{args.mode}_path_{i:05d}.csv")
        with open(fname, "w", newline="") as fh:
            if args.mode == "matrix":
                x0 = mcverify.parse_matrix_spec(args.x0 or "identity", args.p)
                path = sde.simulate_matrix_besq(x0, args.alpha, grid, rng, scheme=args.scheme)
                sde.write_matrix_path_csv(path, fh)
            elif args.mode == "particles":
                if args.lambda0:
                    lam0 = np.sort(mcverify.parse_vector(args.lambda0))
                else:
                    lam0 = np.linalg.eigvalsh(mcverify.parse_matrix_spec(args.x0 or "identity", args.p))
                path = sde.simulate_particles(lam0, args.alpha, grid, rng, args.eps_reg)
                sde.write_vector_path_csv(grid.times, path.states, fh)
                if path.clamp_count or path.resort_count:
                    logging.info("path %d: %d clamp activations, %d re-sorts", i, path.clamp_count, path.resort_count)
            else:
                try:
                    x0 = float(args.x0 or 0.0)
                except ValueError as exc:
                    raise BesqError(f"scalar mode needs a numeric --x0, got {args.x0!r}") from exc
                xs = sde.simulate_scalar_besq(x0, args.delta, grid, rng, exact=args.exact_law)
                sde.write_vector_path_csv(grid.times, xs, fh, prefix="x")
        print(fname)
    return EXIT_OK


# -------------------------------------------------------------------- verify

_CONFIG_FLAGS = {
    "p": "p", "alpha": "alpha", "x0": "x0", "lambda0": "lambda0", "u": "u", "t": "t_end", "dt": "dt",
    "paths": "n_paths", "k": "k", "bias_allowance": "bias_allowance", "psd_slack": "psd_slack",
    "exit_budget": "exit_budget", "comparison_slack": "comparison_slack", "rel_tol": "rel_tol",
    "eps_reg": "eps_reg", "mode": "mode", "scheme": "scheme", "name": "name", "threads": "threads",
    "chunk_size": "chunk_size",
}


def build_config(args, experiment: str | None) -> mcverify.ExperimentConfig:
    values: dict = {}
    if args.preset:
        if args.preset not in mcverify.PRESETS:
            raise BesqError(f"unknown preset {args.preset!r}; choose from {sorted(mcverify.PRESETS)}")
        values.update(mcverify.PRESETS[args.preset].as_dict())
    if args.config:
        values.update(mcverify.read_config_file(args.config))
    if experiment:
        values["experiment"] = experiment.replace("-", "_")
    for flag, key in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    values["master_seed"] = resolve_seed(args.seed, values.get("master_seed") if (args.preset or args.config) else None)
    if "experiment" not in values:
        raise BesqError("no experiment named (positional argument, preset, or config file)")
    return mcverify.ExperimentConfig(**values)


def _emit(rep: mcverify.ExperimentReport, out: str | None):
    print(rep.to_json())
    if out:
        rep.write(out)
    print(f"{rep.name}: {rep.verdict} ({rep.runtime_s:.1f}s)", file=sys.stderr)


def cmd_verify(args) -> int:
    cfg = build_config(args, args.experiment)
    rep = mcverify.run_experiment(cfg)
    _emit(rep, args.out)
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_suite(args) -> int:
    if args.config:
        configs = []
        for path in args.config:
            cfg = mcverify.load_config(path)
            configs.append(cfg.replace(master_seed=resolve_seed(args.seed, cfg.master_seed)))
    else:
        configs = mcverify.default_suite(args.scale)
        if args.only:
            configs = [c for c in configs if c.name in args.only]
        configs = [c.replace(master_seed=resolve_seed(args.seed, c.master_seed)) for c in configs]
    if args.threads:
        configs = [c.replace(threads=args.threads) for c in configs]
    reports, summary = mcverify.run_suite(configs, args.out)
    for rep in reports:
        line = f"{rep.verdict.upper():13s} {rep.name}"
        if rep.error:
            line += f"  [{rep.error}]"
        print(line, file=sys.stderr)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if summary["all_pass"] else EXIT_NEGATIVE


# -------------------------------------------------------------------- parser

def _add_experiment_flags(sp):
    sp.add_argument("-p", type=int)
    sp.add_argument("-a", "--alpha", type=float)
    sp.add_argument("--x0")
    sp.add_argument("--lambda0")
    sp.add_argument("--u")
    sp.add_argument("--t", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--paths", type=int)
    sp.add_argument("--k", type=float)
    sp.add_argument("--bias-allowance", type=float)
    sp.add_argument("--psd-slack", type=float)
    sp.add_argument("--exit-budget", type=float)
    sp.add_argument("--comparison-slack", type=float)
    sp.add_argument("--rel-tol", type=float)
    sp.add_argument("--eps-reg", type=float)
    sp.add_argument("--mode")
    sp.add_argument("--scheme", choices=sde.SCHEMES)
    sp.add_argument("--name")
    sp.add_argument("--chunk-size", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="besqlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("wallach-check", help="non-central Wallach set membership")
    sp.add_argument("-p", type=int, required=True)
    sp.add_argument("-b", "--beta", type=float, required=True)
    sp.add_argument("--x0", required=True, help="diag:a,b,c | file:PATH | zero | identity")
    sp.add_argument("--epsilon", type=float, default=1e-9)
    sp.set_defaults(func=cmd_wallach_check)

    sp = sub.add_parser("simulate", help="write simulated paths as CSV")
    sp.add_argument("--mode", choices=("matrix", "particles", "scalar"), default="matrix")
    sp.add_argument("-p", type=int, default=2)
    sp.add_argument("-a", "--alpha", type=float, default=3.0)
    sp.add_argument("--delta", type=float, default=0.0, help="scalar mode dimension")
    sp.add_argument("--x0")
    sp.add_argument("--lambda0")
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--dt", type=float, default=sde.DEFAULT_DT)
    sp.add_argument("--paths", type=int, default=1)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--eps-reg", type=float, default=sde.DEFAULT_EPS_REG)
    sp.add_argument("--exact-law", action="store_true")
    sp.add_argument("--scheme", choices=sde.SCHEMES, default="euler")
    sp.add_argument("--out", default="paths")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run one Monte Carlo experiment")
    sp.add_argument("experiment", nargs="?", help=", ".join(sorted(mcverify.EXPERIMENTS)))
    sp.add_argument("--preset")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--out")
    _add_experiment_flags(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("suite", help="run the default experiment suite")
    sp.add_argument("--config", nargs="*", help="config files, one experiment each")
    sp.add_argument("--only", nargs="*", help="preset names to keep")
    sp.add_argument("--scale", type=float, default=1.0, help="multiply every n_paths")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (BesqError, OSError) as exc:
        print(f"besqlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
