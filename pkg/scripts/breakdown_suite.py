"""Breakdown probes for every registered estimator over a range of contamination sizes.

    python scripts/breakdown_suite.py --n 20 --q 3 --out probes.json
"""

import argparse
import json
import sys

import numpy as np

from robscatter.harness import breakdown_probe

SUITE = (
    ("sscm-known", {}),
    ("sscm-spatial", {}),
    ("kl", {"kappa": 1.5, "gamma": 0.5}),
    ("kl", {"weight": "tyler", "kappa": 1.5, "gamma": 0.5}),
    ("tyler-beta", {"beta": 0.9}),
    ("tyler-beta", {"beta": 2.5}),
    ("tyler", {}),
)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--directions", type=int, default=20)
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)

    X = np.random.default_rng(args.seed).standard_normal((args.n, args.q))
    reports = []
    for name, params in SUITE:
        if params.get("beta", 0) >= args.q:
            continue
        for m in sorted({1, args.n // 4, args.n // 2 - 1, args.n // 2, args.n - 1}):
            rep = breakdown_probe(name, X, m, params=params, n_directions=args.directions, seed=args.seed + m)
            reports.append(rep.as_dict())
            bound = "" if rep.theoretical_bound is None else f" (bound {rep.theoretical_bound:.3f})"
            print(f"{name} {params} m={m} eps={rep.fraction:.3f}: {rep.verdict}{bound}", file=sys.stderr)
    text = json.dumps(reports, indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
