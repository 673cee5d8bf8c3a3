"""Contamination schemes, breakdown probes, experiment drivers and CSV I/O."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    as_data,
    riemannian_distance,
    shape_of,
    shifted_weight,
    tyler_weight,
)
from .location import CenterSpec, center_data
from .penalized import PenaltySpec, solve_penalized, tyler_shape
from .sscm import sscm

LADDER = (1e2, 1e4, 1e6)
N_DIRECTIONS = 20
DIVERGENCE_FACTOR = 10.0


# ---------------------------------------------------------------------------
# contamination
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContaminationScheme:
    """How to generate ``m`` bad points and insert them.

    ``kind`` is ``"symmetric-cluster"`` (``+-y_j`` pairs with ``y_j`` normal
    around ``center`` with standard deviation ``spread`` per coordinate),
    ``"radial"`` (``distance * direction + xi_j`` with standard normal
    ``xi_j``) or ``"custom"`` (the given ``points``). ``mode`` is
    ``"replace"`` (swap randomly chosen rows) or ``"add"`` (append).
    """

    kind: str
    m: int
    mode: str = "replace"
    seed: int = 0
    center: tuple | None = None
    spread: float = 0.1
    direction: tuple | None = None
    distance: float = 1.0
    points: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("symmetric-cluster", "radial", "custom"):
            raise ValueError(f"unknown contamination kind {self.kind!r}")
        if self.mode not in ("replace", "add"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.kind == "custom" and (self.points is None or len(self.points) != self.m):
            raise ValueError("custom contamination needs exactly m points")

    @classmethod
    def symmetric_cluster(cls, q: int, m: int = 10, seed: int = 0, location: float = 5.0, spread: float = 0.1):
        """``+-y_j`` pairs with ``y_j ~ N(location * 1, spread^2 I)``, replacing rows."""
        return cls("symmetric-cluster", m, "replace", seed, center=(location,) * q, spread=spread)

    @classmethod
    def radial(cls, direction, distance: float, m: int, mode: str = "add", seed: int = 0):
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return cls("radial", m, mode, seed, direction=tuple(d), distance=float(distance))

    def fraction(self, n: int) -> float:
        """Fraction of bad points in the contaminated sample."""
        return self.m / n if self.mode == "replace" else self.m / (n + self.m)


def _bad_points(scheme: ContaminationScheme, q: int, rng) -> np.ndarray:
    if scheme.kind == "custom":
        P = np.asarray(scheme.points, dtype=float)
        if P.shape != (scheme.m, q):
            raise ValueError(f"custom points must have shape ({scheme.m}, {q})")
        return P
    if scheme.kind == "symmetric-cluster":
        c = np.zeros(q) if scheme.center is None else np.asarray(scheme.center, dtype=float)
        half = -(-scheme.m // 2)
        Y = c + scheme.spread * rng.standard_normal((half, q))
        return np.vstack([Y, -Y])[: scheme.m]
    d = np.asarray(scheme.direction, dtype=float)
    return scheme.distance * d + rng.standard_normal((scheme.m, q))


def contaminate(X, scheme: ContaminationScheme) -> np.ndarray:
    """Contaminated copy of ``X``; deterministic in ``scheme.seed``."""
    X = as_data(X)
    n, q = X.shape
    if scheme.mode == "replace" and scheme.m > n:
        raise ValueError(f"cannot replace {scheme.m} of {n} rows")
    rng = np.random.default_rng(scheme.seed)
    Y = _bad_points(scheme, q, rng)
    if scheme.mode == "add":
        return np.vstack([X, Y])
    out = X.copy()
    out[rng.choice(n, scheme.m, replace=False)] = Y
    return out


# ---------------------------------------------------------------------------
# estimator registry
# ---------------------------------------------------------------------------

Estimator = Callable[[np.ndarray], np.ndarray]


def _sscm_known(X, **_):
    return sscm(X, CenterSpec.known(np.zeros(X.shape[1])))


def _sscm_spatial(X, **_):
    return sscm(X, CenterSpec("spatial"))


def _weight(params):
    kappa = float(params.get("kappa", 1.0))
    if params.get("weight", "shifted") == "tyler":
        return tyler_weight(kappa)
    return shifted_weight(kappa, float(params.get("shift", 2.0)))


def _kl(X, **p):
    return solve_penalized(X, _weight(p), PenaltySpec.kl(float(p.get("gamma", 0.5)))).sigma


def _tp(X, **p):
    return solve_penalized(X, _weight(p), PenaltySpec.tp(float(p.get("eta", 1.0)))).sigma


def _tyler_beta(X, **p):
    spec = PenaltySpec.tyler_beta(float(p.get("beta", 0.5)), float(p.get("gamma", 0.5)))
    return solve_penalized(X, None, spec).sigma


def _tyler(X, **_):
    return tyler_shape(X).shape


def _sigma_r(X, **p):
    from .hbd import sigma_R

    return sigma_R(X, restarts=int(p.get("restarts", 20)), seed=int(p.get("seed", 0))).shape


ESTIMATORS: dict[str, Callable] = {
    "sscm-known": _sscm_known,
    "sscm-spatial": _sscm_spatial,
    "kl": _kl,
    "tp": _tp,
    "tyler-beta": _tyler_beta,
    "tyler": _tyler,
    "sigma-r": _sigma_r,
}


def get_estimator(name: str, **params) -> Estimator:
    """Scatter estimator ``X -> matrix`` from the registry with bound parameters."""
    if name not in ESTIMATORS:
        raise ValueError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}")
    f = ESTIMATORS[name]
    return lambda X: f(X, **params)


# ---------------------------------------------------------------------------
# breakdown probes
# ---------------------------------------------------------------------------


@dataclass
class BreakdownReport:
    """Empirical bias of an estimator's shape along a ladder of contamination distances.

    ``bias[i]`` is the largest Riemannian distance between the clean and
    contaminated shapes over the random directions at ``ladder[i]``. The
    verdict is ``"diverging"`` when the top-rung bias exceeds
    ``DIVERGENCE_FACTOR * clean_spread`` (or any fit fails), where
    ``clean_spread = max(1, d(clean shape, I))``. This is a finite probe,
    not a statement about the supremum bias.
    """

    estimator: str
    params: dict
    n: int
    m: int
    mode: str
    ladder: tuple
    bias: list
    clean_spread: float
    verdict: str
    notes: list = field(default_factory=list)
    theoretical_bound: float | None = None

    @property
    def fraction(self) -> float:
        return self.m / self.n if self.mode == "replace" else self.m / (self.n + self.m)

    def as_dict(self) -> dict:
        return {
            "kind": "probe",
            "estimator": self.estimator,
            "params": self.params,
            "n": self.n,
            "m": self.m,
            "mode": self.mode,
            "fraction": self.fraction,
            "ladder": list(self.ladder),
            "bias": list(self.bias),
            "clean_spread": self.clean_spread,
            "verdict": self.verdict,
            "notes": list(self.notes),
            "theoretical_bound": self.theoretical_bound,
        }


def theoretical_bound(name: str, n: int, q: int, params: dict) -> float | None:
    """Known lower bound on the breakdown point, where one is available."""
    if name == "tyler-beta":
        beta = float(params.get("beta", 0.5))
        if beta <= 1:
            return 1.0
        return (n - beta) / ((n - 1) * beta)
    if name == "sscm-known":
        return 1.0
    if name == "sscm-spatial":
        return 0.5
    if name in ("kl", "tp"):
        p = dict(params)
        kappa = float(p.get("kappa", 1.0))
        eff = (1 - float(p.get("gamma", 0.5))) * kappa if name == "kl" else kappa
        return 1.0 if eff < 1 else None
    return None


def breakdown_probe(
    estimator: str,
    X,
    m: int,
    params: dict | None = None,
    ladder=LADDER,
    n_directions: int = N_DIRECTIONS,
    mode: str = "add",
    seed: int = 0,
) -> BreakdownReport:
    """Push ``m`` contaminants out along random directions and record the shape bias.

    For each of ``n_directions`` random unit directions ``d`` the bad
    points are ``t d + xi_j`` for every ``t`` on the ladder, with the
    offsets ``xi_j`` fixed across rungs, so the contaminants concentrate
    in direction as ``t`` grows.
    """
    params = dict(params or {})
    X = as_data(X)
    n, q = X.shape
    est = get_estimator(estimator, **params)
    notes = []
    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        clean = shape_of(est(X))
        clean_spread = max(1.0, riemannian_distance(clean, np.eye(q)))
        bias = []
        failed = False
        dirs = rng.standard_normal((n_directions, q))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        seeds = rng.integers(0, 2**63 - 1, size=n_directions)
        for t in ladder:
            worst = 0.0
            for d, s in zip(dirs, seeds):
                scheme = ContaminationScheme.radial(d, t, m, mode=mode, seed=int(s))
                Z = contaminate(X, scheme)
                try:
                    S = shape_of(est(Z))
                    worst = max(worst, riemannian_distance(clean, S))
                except (ValueError, np.linalg.LinAlgError) as exc:
                    failed = True
                    worst = math.inf
                    notes.append(f"fit failed at distance {t:g}: {exc}")
                    break
            bias.append(worst)
    diverging = failed or bias[-1] > DIVERGENCE_FACTOR * clean_spread
    return BreakdownReport(
        estimator=estimator,
        params=params,
        n=n,
        m=m,
        mode=mode,
        ladder=tuple(ladder),
        bias=bias,
        clean_spread=clean_spread,
        verdict="diverging" if diverging else "resistant",
        notes=notes,
        theoretical_bound=theoretical_bound(estimator, n, q, params),
    )


# ---------------------------------------------------------------------------
# cross-validation experiment
# ---------------------------------------------------------------------------

CASES = {1: (1.0, 1.0, 1.0, 1.0, 1.0), 2: (10.0, 1.0, 1.0, 1.0, 1.0)}


def cv_experiment_data(case: int, seed: int, n: int = 35, m: int = 10, contaminated: bool = True):
    """Normal sample with covariance ``diag(CASES[case])``, optionally with the symmetric cluster."""
    lam = np.asarray(CASES[case])
    q = lam.size
    rng = np.random.default_rng([seed, case])
    X = rng.standard_normal((n, q)) * np.sqrt(lam)
    if contaminated:
        scheme = ContaminationScheme.symmetric_cluster(q, m=m, seed=int(rng.integers(2**63 - 1)))
        X = contaminate(X, scheme)
    return X


def cv_experiment(case: int, seed: int, kind: str = "sigma", contaminated: bool = True, k: int = 5):
    """CV curves on one simulated data set, centered at its spatial median."""
    from .tuning import cv_curves

    X = center_data(cv_experiment_data(case, seed, contaminated=contaminated), CenterSpec("spatial"))
    return cv_curves(X, kind=kind, k=k, seed=seed)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def read_csv(path) -> np.ndarray:
    """Comma-separated numeric rows with an optional header line.

    Any row that fails to parse (other than a first-line header) raises a
    ``ValueError`` naming its line number.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                if lineno == 1:
                    continue
                raise ValueError(f"{path}: line {lineno}: cannot parse {rec!r}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValueError(f"{path}: line {lineno}: expected {width} fields, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return as_data(np.array(rows))


def write_csv(path, X, header=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for row in np.asarray(X):
            w.writerow([repr(float(v)) for v in row])
