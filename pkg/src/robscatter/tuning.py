"""Cross-validation of the regularized Tyler shape over its tuning parameter beta.

Candidates are compared through the angular central Gaussian negative
log-likelihood, which depends on a candidate only through its shape and on
each observation only through its direction. The mean of the
per-observation terms is the ordinary criterion; their (lower) median is
the robust one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConvergenceWarning,
    acg_terms,
    as_data,
    as_spd,
    condition_number,
    lower_median,
    parallel_map,
    row_norms,
    shape_of,
)
from .penalized import PenaltySpec, condition_a_limit, solve_penalized, tyler_shape

CRITERIA = ("cvmean", "cvmed", "cvmedmean", "cvmedmed", "acgmean", "acgmed")
KINDS = ("sigma", "v")
FIT_GAMMA = 0.5


def _nonzero(sample) -> np.ndarray:
    Z = as_data(sample)
    Z = Z[row_norms(Z) > 0]
    if Z.shape[0] == 0:
        raise ValueError("sample has no nonzero rows")
    return Z


def cv_value(shape_candidate, sample) -> float:
    """Mean angular central Gaussian term ``q log(x'S^-1x / x'x) + log det S``.

    Zero rows are dropped. Invariant under rescaling the candidate and
    under rescaling individual observations.
    """
    return float(np.mean(acg_terms(_nonzero(sample), shape_candidate)))


def cvr_value(shape_candidate, sample) -> float:
    """Lower median of the angular central Gaussian terms (zero rows dropped)."""
    return lower_median(acg_terms(_nonzero(sample), shape_candidate))


# ---------------------------------------------------------------------------
# folds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    """Balanced random partition of ``range(n)`` into ``k`` folds labelled ``1..k``."""

    n: int
    k: int
    assignment: tuple[int, ...]
    seed: int

    def validation(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignment) == fold)

    def training(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignment) != fold)

    @property
    def sizes(self) -> list[int]:
        a = np.asarray(self.assignment)
        return [int(np.count_nonzero(a == f)) for f in range(1, self.k + 1)]


def kfold_split(n: int, k: int, seed: int) -> FoldPlan:
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[perm] = np.arange(n) % k + 1
    return FoldPlan(n=n, k=k, assignment=tuple(int(a) for a in assignment), seed=seed)


# ---------------------------------------------------------------------------
# fits along the beta grid
# ---------------------------------------------------------------------------


def beta_grid(q: int, step: float = 0.1) -> np.ndarray:
    """``0, step, ..., q`` (the endpoint is always included)."""
    m = int(round(q / step))
    return np.round(np.linspace(0.0, q, m + 1), 12)


@dataclass
class PathFit:
    """Shapes along the beta grid for one data set (``None`` where no fit exists)."""

    grid: np.ndarray
    shapes: list
    notes: list[str]
    iterations: list[int]


def fit_path(X, grid, kind: str = "sigma") -> PathFit:
    """Regularized Tyler shapes for every beta in ``grid``.

    ``kind="sigma"`` gives the shape of the regularized solution,
    ``kind="v"`` the shape of the adjusted estimator. Below ``q`` the fits
    are warm-started from the previous grid point, rescaled so that the
    start satisfies the trace identity ``tr(S^-1) = (q - beta) / gamma``
    of the solution. At ``beta = q`` both kinds use Tyler's shape. A grid
    point is missing when the existence condition fails there or the
    solver does not converge.
    """
    X = as_data(X)
    q = X.shape[1]
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    Xn = X[row_norms(X) > 0]
    limit = condition_a_limit(Xn)[0] if Xn.shape[0] else 0.0
    shapes, notes, iters = [], [], []
    prev = None
    for beta in grid:
        beta = float(beta)
        if beta > q:
            raise ValueError(f"beta={beta} exceeds q={q}")
        if beta >= 1 and not beta < limit:
            shapes.append(None)
            notes.append(f"existence condition fails (limit {limit:.4g})")
            iters.append(0)
            prev = None
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            if beta == q:
                fit = tyler_shape(Xn, check=False)
                ok, shape, it = fit.converged, fit.shape, fit.iterations
            else:
                init = None
                if prev is not None:
                    c = FIT_GAMMA * np.trace(np.linalg.inv(prev)) / (q - beta)
                    init = c * prev
                est = solve_penalized(
                    Xn, None, PenaltySpec.tyler_beta(beta, FIT_GAMMA), init=init, check=False
                )
                ok, it = est.converged, est.iterations
                prev = est.sigma
                src = est.sigma if kind == "sigma" else est.weighted_sum
                shape = shape_of(src)
        if ok:
            shapes.append(shape)
            notes.append("")
        else:
            shapes.append(None)
            notes.append("solver did not converge")
            prev = None
        iters.append(it)
    return PathFit(grid=np.asarray(grid, dtype=float), shapes=shapes, notes=notes, iterations=iters)


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


@dataclass
class CvCurve:
    """Scores of the six criteria along the beta grid.

    ``scores[c][j]`` is NaN where the fit at ``grid[j]`` is missing on the
    full data or on any training set it needs. ``shapes`` and
    ``condition_numbers`` hold the full-data fits.
    """

    grid: np.ndarray
    scores: dict
    kind: str
    selected: dict
    shapes: list
    condition_numbers: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _argmin_first(scores) -> int | None:
    s = np.asarray(scores, dtype=float)
    if np.all(np.isnan(s)):
        return None
    return int(np.nanargmin(s))


def _fold_job(args):
    X, train, grid, kind = args
    return fit_path(X[train], grid, kind)


def cv_curves(X, kind: str = "sigma", k: int = 5, seed: int = 0, grid=None) -> CvCurve:
    """K-fold curves of all six criteria for the regularized Tyler shape.

    Parameters
    ----------
    X : array-like, shape (n, q)
        Centered data.
    kind : {"sigma", "v"}
        Whether candidates are shapes of the regularized solution or of the
        adjusted estimator.
    k : int
        Number of folds.
    seed : int
        Seed of the fold plan.
    grid : array-like, optional
        Beta values; defaults to ``0, 0.1, ..., q``.

    Notes
    -----
    ``cvmean`` averages the per-fold mean criteria, ``cvmedmean`` and
    ``cvmedmed`` take the mean and lower median of the per-fold median
    criteria, ``cvmed`` is the lower median of all ``n`` pooled
    per-observation terms. ``acgmean`` and ``acgmed`` score the full-data
    fit on the full data.
    """
    X = as_data(X)
    n, q = X.shape
    if n < 2 * k:
        raise ValueError(f"need n >= 2k, got n={n}, k={k}")
    grid = beta_grid(q) if grid is None else np.asarray(grid, dtype=float)
    plan = kfold_split(n, k, seed)
    folds = range(1, k + 1)
    jobs = [(X, plan.training(f), grid, kind) for f in folds] + [(X, np.arange(n), grid, kind)]
    paths = parallel_map(_fold_job, jobs)
    fold_paths, full = paths[:k], paths[k]

    G = len(grid)
    scores = {c: np.full(G, np.nan) for c in CRITERIA}
    for j in range(G):
        means, meds, pooled = [], [], []
        missing = False
        for f, path in zip(folds, fold_paths):
            S = path.shapes[j]
            if S is None:
                missing = True
                break
            Z = X[plan.validation(f)]
            Z = Z[row_norms(Z) > 0]
            terms = acg_terms(Z, S)
            means.append(terms.mean())
            meds.append(lower_median(terms))
            pooled.append(terms)
        if not missing:
            scores["cvmean"][j] = float(np.mean(means))
            scores["cvmedmean"][j] = float(np.mean(meds))
            scores["cvmedmed"][j] = lower_median(meds)
            scores["cvmed"][j] = lower_median(np.concatenate(pooled))
        S = full.shapes[j]
        if S is not None:
            scores["acgmean"][j] = cv_value(S, X)
            scores["acgmed"][j] = cvr_value(S, X)

    cns = np.array([condition_number(S) if S is not None else np.nan for S in full.shapes])
    selected = {}
    for c in CRITERIA:
        i = _argmin_first(scores[c])
        selected[c] = None if i is None else float(grid[i])
    diagnostics = {
        "folds": plan,
        "fold_notes": [p.notes for p in fold_paths],
        "full_notes": full.notes,
        "iterations": [p.iterations for p in fold_paths] + [full.iterations],
    }
    return CvCurve(
        grid=grid,
        scores=scores,
        kind=kind,
        selected=selected,
        shapes=full.shapes,
        condition_numbers=cns,
        diagnostics=diagnostics,
    )


@dataclass
class TuningResult:
    beta_star: float
    criterion: str
    shape: np.ndarray
    condition_number: float
    diagnostics: dict = field(default_factory=dict)


def select_beta(curve: CvCurve, criterion: str) -> TuningResult:
    """Smallest grid beta attaining the minimum score, with the full-data shape there."""
    if criterion not in curve.scores:
        raise ValueError(f"unknown criterion {criterion!r}")
    i = _argmin_first(curve.scores[criterion])
    if i is None:
        raise ValueError(f"every {criterion} score is missing")
    S = curve.shapes[i]
    if S is None:
        raise ValueError(f"no full-data fit at beta={curve.grid[i]}")
    S = as_spd(S)
    return TuningResult(
        beta_star=float(curve.grid[i]),
        criterion=criterion,
        shape=S,
        condition_number=condition_number(S),
        diagnostics={"score": float(curve.scores[criterion][i]), "kind": curve.kind},
    )


def tilde_beta(X, kind: str = "sigma", grid=None) -> TuningResult:
    """Beta minimizing the median criterion of the full-data fit on the full data.

    No subsampling is involved. The default grid runs from 0 to ``q`` in
    steps of 0.1, including Tyler's shape at ``q``.
    """
    X = as_data(X)
    q = X.shape[1]
    grid = beta_grid(q) if grid is None else np.asarray(grid, dtype=float)
    path = fit_path(X, grid, kind)
    scores = np.array([cvr_value(S, X) if S is not None else np.nan for S in path.shapes])
    i = _argmin_first(scores)
    if i is None:
        raise ValueError("no beta on the grid admits a fit")
    S = path.shapes[i]
    return TuningResult(
        beta_star=float(grid[i]),
        criterion="acgmed",
        shape=S,
        condition_number=condition_number(S),
        diagnostics={"scores": scores, "grid": grid, "notes": path.notes, "kind": kind},
    )
