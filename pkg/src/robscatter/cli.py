"""Command-line interface: ``robscatter <command> [options]``.

Every command accepts ``--config FILE`` with flat ``key=value`` lines whose
keys mirror the long options (``draws=100000`` for ``--draws``); options
given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import harness, population, tuning
from .core import condition_number, shape_of, shifted_weight, tyler_weight
from .location import CenterSpec, compute_center, center_data
from .penalized import PenaltySpec, solve_penalized
from .sscm import sscm


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _center(text: str) -> CenterSpec:
    if text.startswith("known="):
        return CenterSpec.known(_floats(text[len("known="):]))
    return CenterSpec(text)


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SystemExit(f"{path}: line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _matrix(a) -> list:
    return [[float(v) for v in row] for row in np.asarray(a)]


def _dump(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _weight(args):
    if args.weight == "tyler":
        return tyler_weight(args.kappa)
    return shifted_weight(args.kappa, args.shift)


def _target(args):
    if args.target.startswith("file="):
        return harness.read_csv(args.target[len("file="):])
    return args.target


def cmd_estimate(args) -> int:
    X = harness.read_csv(args.input)
    spec = _center(args.center)
    center = compute_center(X, spec)
    Xc = center_data(X, spec)
    out = {
        "method": args.method,
        "center_used": {
            "mode": spec.mode,
            "value": None if center is None else [float(v) for v in center],
        },
        "seed": args.seed,
        "v": None,
    }
    if args.method == "sscm":
        sigma = sscm(Xc, CenterSpec.known(np.zeros(X.shape[1])))
        out.update(parameters={}, converged=True, iterations=0)
    elif args.method == "sigma-r":
        from .hbd import sigma_R
        from .penalized import scaled_scatter

        res = sigma_R(Xc, restarts=args.restarts, seed=args.seed)
        sigma = scaled_scatter(res.shape, Xc)
        out.update(
            parameters={"restarts": res.restarts},
            converged=True,
            iterations=int(sum(t["nfev"] for t in res.optimizer_trace)),
            objective=res.objective_value,
        )
    else:
        target = _target(args)
        if args.method == "tp":
            penalty, weight = PenaltySpec.tp(args.eta, target), _weight(args)
        elif args.method == "kl":
            penalty, weight = PenaltySpec.kl(args.gamma, target), _weight(args)
        else:
            penalty, weight = PenaltySpec.tyler_beta(args.beta, args.gamma, target), None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = solve_penalized(Xc, weight, penalty)
        sigma = est.sigma
        params = penalty.parameters()
        if weight is not None:
            params.update(weight=weight.kind, kappa=weight.kappa)
            if weight.kind == "shifted":
                params["shift"] = weight.shift
        params["target"] = target if isinstance(target, str) else "matrix"
        v = est.v
        out.update(
            parameters=params,
            converged=bool(est.converged),
            iterations=int(est.iterations),
            v=None if v is None else _matrix(v),
        )
    shape = shape_of(sigma)
    out.update(sigma=_matrix(sigma), shape=_matrix(shape), condition_number=condition_number(sigma))
    _dump(out, args.out)
    return 0


def cmd_cv(args) -> int:
    X = harness.read_csv(args.input)
    Xc = center_data(X, _center(args.center))
    grid = tuning.beta_grid(X.shape[1], args.grid_step)
    curve = tuning.cv_curves(Xc, kind=args.kind, k=args.folds, seed=args.seed, grid=grid)
    lines = ["beta,cn," + ",".join(tuning.CRITERIA)]
    for j, b in enumerate(curve.grid):
        vals = [curve.scores[c][j] for c in tuning.CRITERIA]
        lines.append(",".join([repr(float(b)), repr(float(curve.condition_numbers[j]))] + [repr(float(v)) for v in vals]))
    for c in tuning.CRITERIA:
        try:
            r = tuning.select_beta(curve, c)
            lines.append(f"# selected,{c},{r.beta_star!r},{r.condition_number!r}")
        except ValueError:
            lines.append(f"# selected,{c},nan,nan")
    lines.append(f"# center,{args.center}")
    text = "\n".join(lines) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def cmd_population_table(args) -> int:
    rows = population.population_table(
        models=_ints(args.models),
        kappas=_floats(args.kappas),
        gammas=_floats(args.gammas),
        q=args.q,
        N=args.draws,
        seed=args.seed,
        shift=args.shift,
    )
    header = ["model", "q", "kappa", "gamma", "cn", "cn_v", "ref_cn", "ref_cn_v", "converged", "error"]
    lines = [",".join(header)]
    for r in rows:
        ref = population.REFERENCE_Q5.get((r["model"], r["kappa"])) if r["q"] == 5 else None
        if ref is not None and r["gamma"] in population.TABLE_GAMMAS:
            j = population.TABLE_GAMMAS.index(r["gamma"])
            rc, rv = ref[0][j], ref[1][j]
        else:
            rc = rv = math.nan
        vals = [r["model"], r["q"], r["kappa"], r["gamma"], r["cn"], r["cn_v"], rc, rv, r["converged"], r["error"]]
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in vals))
    text = "\n".join(lines) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def cmd_breakdown_probe(args) -> int:
    X = harness.read_csv(args.input)
    params = {}
    for key in ("kappa", "gamma", "beta", "eta", "shift"):
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    if args.weight is not None:
        params["weight"] = args.weight
    report = harness.breakdown_probe(
        args.estimator,
        X,
        args.m,
        params=params,
        n_directions=args.directions,
        mode=args.mode,
        seed=args.seed,
    )
    out = report.as_dict()
    out["seed"] = args.seed
    _dump(out, args.out)
    return 0


def cmd_contaminate(args) -> int:
    X = harness.read_csv(args.input)
    q = X.shape[1]
    if args.scheme == "paper":
        scheme = harness.ContaminationScheme.symmetric_cluster(
            q, m=args.m, seed=args.seed, location=args.location, spread=args.spread
        )
    else:
        d = _floats(args.direction) if args.direction else [1.0] * q
        scheme = harness.ContaminationScheme.radial(d, args.distance, args.m, mode=args.mode, seed=args.seed)
    harness.write_csv(args.out, harness.contaminate(X, scheme))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robscatter", description="Regularized robust scatter estimation")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="key=value file; command-line options override it")
        sp.add_argument("--out", default="-", help="output path (default stdout)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("estimate", help="fit a scatter estimator")
    common(e)
    e.add_argument("--input", required=True)
    e.add_argument("--method", choices=["sscm", "tp", "kl", "tyler-beta", "sigma-r"], default="tyler-beta")
    e.add_argument("--weight", choices=["tyler", "shifted"], default="shifted")
    e.add_argument("--kappa", type=float, default=1.0)
    e.add_argument("--shift", type=float, default=2.0)
    e.add_argument("--eta", type=float, default=1.0)
    e.add_argument("--gamma", type=float, default=0.5)
    e.add_argument("--beta", type=float, default=1.0)
    e.add_argument("--center", default="spatial", help="spatial|marginal|pairwise|known=v1,v2,...")
    e.add_argument("--target", default="identity", help="identity|sigma2|file=matrix.csv")
    e.add_argument("--restarts", type=int, default=20)
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("cv", help="cross-validation curves over beta")
    common(c)
    c.add_argument("--input", required=True)
    c.add_argument("--kind", choices=["sigma", "v"], default="sigma")
    c.add_argument("--folds", type=int, default=5)
    c.add_argument("--grid-step", type=float, default=0.1)
    c.add_argument("--center", default="spatial")
    c.set_defaults(func=cmd_cv)

    t = sub.add_parser("population-table", help="population condition-number table")
    common(t)
    t.add_argument("--draws", type=int, default=100000)
    t.add_argument("--models", default="1,2")
    t.add_argument("--kappas", default="0.5,1,3,5,8")
    t.add_argument("--gammas", default="0.05,0.2,0.5,0.8,0.95")
    t.add_argument("--q", type=int, default=5)
    t.add_argument("--shift", type=float, default=2.0)
    t.set_defaults(func=cmd_population_table)

    b = sub.add_parser("breakdown-probe", help="empirical breakdown probe")
    common(b)
    b.add_argument("--input", required=True)
    b.add_argument("--estimator", choices=sorted(harness.ESTIMATORS), required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--mode", choices=["add", "replace"], default="add")
    b.add_argument("--directions", type=int, default=harness.N_DIRECTIONS)
    b.add_argument("--weight", choices=["tyler", "shifted"])
    for key in ("kappa", "gamma", "beta", "eta", "shift"):
        b.add_argument(f"--{key}", type=float)
    b.set_defaults(func=cmd_breakdown_probe)

    k = sub.add_parser("contaminate", help="write a contaminated copy of a data set")
    common(k)
    k.add_argument("--input", required=True)
    k.add_argument("--scheme", choices=["paper", "radial"], default="paper")
    k.add_argument("--m", type=int, default=10)
    k.add_argument("--location", type=float, default=5.0)
    k.add_argument("--spread", type=float, default=0.1)
    k.add_argument("--direction")
    k.add_argument("--distance", type=float, default=1e6)
    k.add_argument("--mode", choices=["add", "replace"], default="replace")
    k.set_defaults(func=cmd_contaminate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command:
        cfg = read_config(known.config)
        sub = parser._subparsers._group_actions[0].choices[known.command]
        dests = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - dests)
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**cfg)
        for a in sub._actions:
            if a.dest in cfg:
                a.required = False
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
