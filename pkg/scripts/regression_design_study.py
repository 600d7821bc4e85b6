"""Spread of the drift and quadratic-variation slopes over seeds for two
ways of spending the same number of increments: few long paths or many short
ones."""
import argparse

import numpy as np

from besqlab import mcverify

DESIGNS = {"100 x 1024": dict(n_paths=100, t_end=1.0), "1000 x 100": dict(n_paths=1000, t_end=100 * 2.0**-10)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="polynomial-p2-a3")
    ap.add_argument("--seeds", type=int, default=60)
    ap.add_argument("--first-seed", type=int, default=100)
    args = ap.parse_args()

    base = mcverify.PRESETS[args.preset]
    for label, kw in DESIGNS.items():
        rows = []
        for seed in range(args.first_seed, args.first_seed + args.seeds):
            rep = mcverify.run_experiment(base.replace(master_seed=seed, **kw))
            rows.append([e.value for e in rep.estimates])
        a = np.array(rows)
        names = [e.name for e in rep.estimates]
        print(f"{label}:")
        for j, name in enumerate(names):
            target = rep.estimates[j].target
            print(f"  {name:9s} mean {a[:, j].mean():8.4f}  sd {a[:, j].std(ddof=1):.4f}  target {target:g}")
        qv = a[:, names.index("qv_ep")]
        print(f"  qv slope outside 10% of 1 in {np.mean(np.abs(qv - 1) > 0.1):.1%} of seeds")


if __name__ == "__main__":
    main()
