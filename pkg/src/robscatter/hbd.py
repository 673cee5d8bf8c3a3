"""Median angular objective and the high-breakdown shape estimator built on it.

``D(Z; S)`` is the lower median over the rows of ``Z`` of

    d(z, S) = q log(z' S^-1 z / z'z) + log det S,

the per-observation angular central Gaussian term. Minimizing ``D`` over
shapes gives a shape statistic whose breakdown point tends to one half.
It is orthogonally equivariant but not linearly equivariant: for
nonsingular ``A``, ``d(Az, A S A') = d(z, S) - q log(|Az|^2/|z|^2) + 2 log|det A|``,
and the offset varies with ``z``, so the median moves. There is no
closed-form algorithm, so :func:`sigma_R` runs a multi-start Nelder-Mead
search over a log-Cholesky parameterization and is limited to small
dimensions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import (
    RankDeficientError,
    acg_terms,
    as_data,
    as_spd,
    lower_median,
    parallel_map,
    riemannian_distance,
    row_norms,
    shape_of,
)
from .location import CenterSpec
from .penalized import scaled_scatter
from .sscm import sscm

MAX_Q = 6
DEFAULT_RESTARTS = 20
DEFAULT_MAX_CONDITION = 1e8


def d_value(z, shape) -> float:
    """``q log(z' S^-1 z / z'z) + log det S`` for a nonzero vector ``z``."""
    z = np.asarray(z, dtype=float).ravel()
    if not np.any(z):
        raise ValueError("d is undefined at z = 0")
    return float(acg_terms(z[None, :], shape)[0])


def D_value(Z, shape) -> float:
    """Lower median of :func:`d_value` over the nonzero rows of ``Z``."""
    Z = as_data(Z)
    Z = Z[row_norms(Z) > 0]
    if Z.shape[0] == 0:
        raise ValueError("all rows are zero")
    return lower_median(acg_terms(Z, shape))


# ---------------------------------------------------------------------------
# parameterization
# ---------------------------------------------------------------------------


def _tril(q):
    return np.tril_indices(q)


def shape_from_params(theta, q: int, max_condition: float = DEFAULT_MAX_CONDITION) -> np.ndarray:
    """Trace-``q`` shape ``L L'`` with ``log diag(L)`` and the strict lower triangle in ``theta``.

    Eigenvalues below ``lambda_max / max_condition`` are raised to that
    floor, so every returned shape has condition number at most
    ``max_condition``.
    """
    L = np.zeros((q, q))
    L[_tril(q)] = theta
    d = np.diag_indices(q)
    L[d] = np.exp(np.clip(L[d], -300, 300))
    S = L @ L.T
    lam, P = np.linalg.eigh((S + S.T) / 2)
    floor = lam[-1] / max_condition
    if lam[0] < floor:
        lam = np.maximum(lam, floor)
        S = (P * lam) @ P.T
    S = q * S / np.trace(S)
    return (S + S.T) / 2


def params_from_shape(shape) -> np.ndarray:
    S = shape_of(shape)
    L = np.linalg.cholesky(S)
    L[np.diag_indices(S.shape[0])] = np.log(np.diag(L))
    return L[_tril(S.shape[0])].copy()


# ---------------------------------------------------------------------------
# the estimator
# ---------------------------------------------------------------------------


@dataclass
class HbdResult:
    """Best shape found by the multi-start search.

    ``optimizer_trace`` has one entry per restart: start label, final
    objective and function evaluations. ``spread`` is the largest
    Riemannian distance between the best shape and any other restart that
    reached the best objective (to 1e-9), a measure of non-uniqueness.
    """

    shape: np.ndarray
    objective_value: float
    optimizer_trace: list
    restarts: int
    spread: float = 0.0
    max_condition: float = DEFAULT_MAX_CONDITION
    notes: list = field(default_factory=list)


def _objective(theta, Z, q, max_condition):
    S = shape_from_params(theta, q, max_condition)
    try:
        return lower_median(acg_terms(Z, S))
    except np.linalg.LinAlgError:
        return np.inf


def _run_start(args):
    label, theta0, Z, q, max_condition, maxiter = args
    theta = np.asarray(theta0, dtype=float)
    nfev = 0
    best = _objective(theta, Z, q, max_condition)
    # Nelder-Mead restarted from its own solution until it stops improving
    for _ in range(5):
        res = minimize(
            _objective,
            theta,
            args=(Z, q, max_condition),
            method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-9, "fatol": 1e-12, "adaptive": True},
        )
        nfev += res.nfev
        if res.fun < best - 1e-12:
            best, theta = float(res.fun), res.x
        else:
            break
    return label, theta, float(best), nfev


def _half_tyler(U, S, q, inner=30):
    """A few Tyler iterations on unit rows ``U``, started at ``S``."""
    for _ in range(inner):
        w = 1.0 / np.einsum("ij,jk,ik->i", U, np.linalg.inv(S), U)
        W = (U * w[:, None]).T @ U
        new = q * W / np.trace(W)
        if not np.all(np.isfinite(new)):
            break
        S = (new + new.T) / 2
        if np.linalg.cond(S) > DEFAULT_MAX_CONDITION:
            break
    return S


def _concentrate(Z, S, q, max_condition, steps=3):
    """Refit on the half of the points with the smallest ``d``, repeatedly."""
    U = Z / row_norms(Z)[:, None]
    h = (Z.shape[0] + 1) // 2
    best_S, best_f = S, lower_median(acg_terms(Z, S))
    for _ in range(steps):
        idx = np.argsort(acg_terms(Z, S), kind="stable")[: max(h, q)]
        try:
            S = _half_tyler(U[idx], S, q)
            S = shape_from_params(params_from_shape(S), q, max_condition)
            f = lower_median(acg_terms(Z, S))
        except (ValueError, np.linalg.LinAlgError):
            break
        if not f < best_f:
            break
        best_S, best_f = S, f
    return best_S, best_f


def _deterministic_starts(Z, q):
    starts = [("identity", np.eye(q))]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            starts.append(("sscm", sscm(Z, CenterSpec.known(np.zeros(q)))))
        except ValueError:
            pass
        from .tuning import fit_path, tilde_beta

        try:
            starts.append(("tilde-beta", tilde_beta(Z).shape))
        except ValueError:
            pass
        try:
            betas = np.linspace(0.5, q, 2 * q)
            path = fit_path(Z, betas, "sigma")
            for b, S in zip(betas, path.shapes):
                if S is not None:
                    starts.append((f"tyler-beta={b:.3g}", S))
        except ValueError:
            pass
    out = []
    for label, S in starts:
        try:
            out.append((label, params_from_shape(as_spd(S))))
        except (ValueError, np.linalg.LinAlgError):
            continue
    return out


def _default_starts(Z, q, n_restarts, seed, max_condition, n_screen):
    """Best ``n_restarts`` distinct shapes from a seeded screening pool.

    The pool holds the deterministic starts, random log-Cholesky
    perturbations of them at several scales, and Tyler fits on random
    half-samples. The best candidates are improved by concentration steps
    before the distinct best ones are kept.
    """
    rng = np.random.default_rng(seed)
    base = _deterministic_starts(Z, q)
    pool = list(base)
    U = Z / row_norms(Z)[:, None]
    h = max((Z.shape[0] + 1) // 2, q + 1)
    n_half = n_screen // 4
    for i in range(n_half):
        idx = rng.choice(Z.shape[0], size=min(h, Z.shape[0]), replace=False)
        try:
            S = _half_tyler(U[idx], np.eye(q), q)
            pool.append((f"half-{i}", params_from_shape(S)))
        except (ValueError, np.linalg.LinAlgError):
            continue
    scales = (0.25, 0.5, 1.0, 2.0)
    p = base[0][1].size
    for i in range(n_screen - n_half):
        t = base[i % len(base)][1] + rng.normal(scale=scales[i % len(scales)], size=p)
        pool.append((f"perturbed-{i}", t))

    scored = []
    for label, t in pool:
        S = shape_from_params(t, q, max_condition)
        f = lower_median(acg_terms(Z, S))
        if np.isfinite(f):
            scored.append((f, label, S))
    scored.sort(key=lambda r: r[0])
    refined = []
    for f, label, S in scored[: 4 * n_restarts]:
        S2, f2 = _concentrate(Z, S, q, max_condition)
        refined.append((f2, label if f2 == f else f"{label}+c", S2))
    refined.sort(key=lambda r: r[0])

    out = []
    kept = []
    for f, label, S in refined:
        if any(riemannian_distance(S, K) < 1e-3 for K in kept):
            continue
        kept.append(S)
        out.append((label, params_from_shape(S)))
        if len(out) == n_restarts:
            break
    return out


def sigma_R(
    X,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    max_condition: float = DEFAULT_MAX_CONDITION,
    maxiter: int | None = None,
    starts=None,
    n_screen: int = 400,
) -> HbdResult:
    """Shape minimizing the median angular objective ``D(X; S)``.

    Parameters
    ----------
    X : array-like, shape (n, q)
        Centered data spanning ``R^q``, ``q <= 6``.
    restarts : int
        Number of local searches. Starts are the best distinct candidates
        of a screening pool: the identity, the SSCM shape, regularized
        Tyler shapes along a beta grid and at the median-selected beta,
        random perturbations of those and Tyler fits on random half-samples
        (seeded by ``seed``). The result is never worse than any member
        of the pool.
    max_condition : float
        Search domain bound: candidate shapes are clamped to this
        condition number. The objective can be unbounded below on data
        not in general position; the clamp keeps the problem well posed.
    starts : list of SPD matrices, optional
        Extra starting shapes, tried first.
    n_screen : int
        Size of the random part of the screening pool.

    Returns
    -------
    HbdResult
        Best of all restarts (ties go to the earliest restart).
    """
    X = as_data(X)
    n, q = X.shape
    if q > MAX_Q:
        raise ValueError(f"sigma_R is limited to q <= {MAX_Q}")
    Z = X[row_norms(X) > 0]
    if Z.shape[0] < q or np.linalg.matrix_rank(Z) < q:
        raise RankDeficientError("data do not span R^q")
    init = [(f"user-{i}", params_from_shape(as_spd(S))) for i, S in enumerate(starts or [])]
    init += _default_starts(Z, q, max(restarts - len(init), 1), seed, max_condition, n_screen)
    maxiter = maxiter or 400 * q * (q + 1)
    jobs = [(label, t, Z, q, max_condition, maxiter) for label, t in init]
    results = parallel_map(_run_start, jobs)

    trace = [{"start": lab, "objective": f, "nfev": nfev} for lab, _, f, nfev in results]
    best_i = int(np.argmin([f for _, _, f, _ in results]))
    best_theta, best_f = results[best_i][1], results[best_i][2]
    shape = shape_from_params(best_theta, q, max_condition)
    spread = 0.0
    for _, t, f, _ in results:
        if f <= best_f + 1e-9:
            spread = max(spread, riemannian_distance(shape, shape_from_params(t, q, max_condition)))
    return HbdResult(
        shape=shape,
        objective_value=D_value(Z, shape),
        optimizer_trace=trace,
        restarts=len(results),
        spread=spread,
        max_condition=max_condition,
    )


def sigma_sc_R(X, **kwargs) -> np.ndarray:
    """Scatter ``sigma2 * S`` with ``S`` from :func:`sigma_R` and ``sigma2 = lower_median{x'S^-1x}/q``."""
    res = sigma_R(X, **kwargs)
    return scaled_scatter(res.shape, X)


@dataclass
class AffineLocScatter:
    """Location and scatter read off an augmented ``(q+1) x (q+1)`` scatter.

    The augmented matrix is ``[[sigma + alpha mu mu', alpha mu], [alpha mu', alpha]]``.
    """

    mu: np.ndarray
    sigma: np.ndarray
    alpha: float
    augmented: np.ndarray | None = None

    def recompose(self) -> np.ndarray:
        q = self.mu.size
        B = np.empty((q + 1, q + 1))
        B[:q, :q] = self.sigma + self.alpha * np.outer(self.mu, self.mu)
        B[:q, q] = B[q, :q] = self.alpha * self.mu
        B[q, q] = self.alpha
        return B


def affine_location_scatter(X, **kwargs) -> AffineLocScatter:
    """Location and scatter read off :func:`sigma_sc_R` on the rows ``(x', 1)``.

    A translation acts on the augmented rows as a non-orthogonal linear
    map, so the fit is not translation equivariant in general, and on
    symmetric data the minimizer may be one of a mirror pair rather than
    ``mu = 0``.
    """
    X = as_data(X)
    n, q = X.shape
    if q + 1 > MAX_Q:
        raise ValueError(f"augmented dimension must be <= {MAX_Q}")
    B = sigma_sc_R(np.hstack([X, np.ones((n, 1))]), **kwargs)
    alpha = float(B[q, q])
    if alpha <= 0:
        raise ValueError(f"augmented fit has alpha={alpha} <= 0; the optimizer failed")
    mu = B[:q, q] / alpha
    sigma = B[:q, :q] - alpha * np.outer(mu, mu)
    sigma = (sigma + sigma.T) / 2
    return AffineLocScatter(mu=mu, sigma=sigma, alpha=alpha, augmented=B)
