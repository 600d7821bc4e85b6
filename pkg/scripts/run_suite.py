"""Run every preset experiment and write JSON reports plus per-path CSVs.

    python3 scripts/run_suite.py --out results --scale 1.0
"""
import argparse
import json
import logging

from besqlab import mcverify


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--scale", type=float, default=1.0, help="multiply every preset's path count")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    configs = mcverify.default_suite(args.scale)
    configs = [c.replace(threads=args.threads, **({} if args.seed is None else {"master_seed": args.seed}))
               for c in configs]
    reports, summary = mcverify.run_suite(configs, args.out)
    for rep in reports:
        print(f"{rep.verdict:13s} {rep.name:24s} {rep.runtime_s:7.1f}s  "
              + ", ".join(f"{e.name}={e.value:.4g}" for e in rep.estimates))
    print(json.dumps(summary["counts"]))


if __name__ == "__main__":
    main()
