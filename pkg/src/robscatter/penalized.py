"""Fixed-point solvers for penalized and regularized M-estimators of scatter.

Three estimating equations are covered, all pulling toward a target
``T`` (the identity unless stated otherwise):

* trace-precision (``"tp"``): ``S = (1/n) sum u(x' S^-1 x) x x' + eta T``
* Kullback-Leibler (``"kl"``): ``S = (1-gamma)(1/n) sum u(x' S^-1 x) x x' + gamma T``
* regularized Tyler (``"tyler-beta"``): ``S = (beta/n) sum x x' / (x' S^-1 x) + gamma T``

A general target is handled by whitening the data with ``T^{-1/2}``,
solving the identity-target equation and transforming back.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConvergenceWarning,
    DegenerateScaleError,
    RankDeficientError,
    WeightFunction,
    as_data,
    as_spd,
    lower_median,
    row_norms,
    shape_of,
    sqrtm_spd,
    tyler_weight,
)
from .location import robust_sigma2

MAX_ITER = 2000
TOL = 1e-10
RESIDUAL_TOL = 1e-8


class ConditionAError(ValueError):
    """Too many data points lie in a low-dimensional subspace for the given beta."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty kind, its tuning parameters and the shrinkage target.

    ``target`` is ``"identity"``, ``"sigma2"`` (``sigma2_hat * I`` with the
    median-based scale of the already centered data) or an explicit
    positive definite matrix.
    """

    kind: str
    eta: float | None = None
    gamma: float | None = None
    beta: float | None = None
    target: object = field(default="identity", compare=False)

    def __post_init__(self):
        if self.kind == "tp":
            if self.eta is None or self.eta < 0:
                raise ValueError("trace-precision penalty needs eta >= 0")
        elif self.kind == "kl":
            if self.gamma is None or not 0 <= self.gamma <= 1:
                raise ValueError("Kullback-Leibler penalty needs gamma in [0, 1]")
        elif self.kind == "tyler-beta":
            if self.beta is None or self.beta < 0:
                raise ValueError("regularized Tyler needs beta >= 0")
            if self.gamma is None or not 0 < self.gamma <= 1:
                raise ValueError("regularized Tyler needs gamma in (0, 1]")
        else:
            raise ValueError(f"unknown penalty kind {self.kind!r}")

    @classmethod
    def tp(cls, eta, target="identity"):
        return cls("tp", eta=float(eta), target=target)

    @classmethod
    def kl(cls, gamma, target="identity"):
        return cls("kl", gamma=float(gamma), target=target)

    @classmethod
    def tyler_beta(cls, beta, gamma=0.5, target="identity"):
        return cls("tyler-beta", beta=float(beta), gamma=float(gamma), target=target)

    @property
    def coefficients(self) -> tuple[float, float]:
        """``(a, b)`` in ``S = a * weighted_sum(S) + b * T``."""
        if self.kind == "tp":
            return 1.0, self.eta
        if self.kind == "kl":
            return 1.0 - self.gamma, self.gamma
        return self.beta, self.gamma

    def parameters(self) -> dict:
        return {k: getattr(self, k) for k in ("eta", "gamma", "beta") if getattr(self, k) is not None}


@dataclass
class ScatterEstimate:
    """Solution of a penalized estimating equation with diagnostics.

    ``weighted_sum`` is ``(1/n) sum u(x' S^-1 x) x x'`` evaluated at the
    final iterate (with ``u(s) = 1/s`` for the regularized Tyler kind);
    the adjusted estimator is a multiple of it.
    """

    sigma: np.ndarray
    weighted_sum: np.ndarray
    penalty: PenaltySpec
    weight: WeightFunction
    target: np.ndarray
    iterations: int
    final_step: float
    residual: float
    converged: bool
    n_used: int

    @property
    def shape(self) -> np.ndarray:
        return shape_of(self.sigma)

    @property
    def v(self) -> np.ndarray | None:
        try:
            return adjusted_v(self)
        except ValueError:
            return None


# ---------------------------------------------------------------------------
# Condition A
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionAResult:
    holds: bool
    beta: float
    witness: tuple[int, ...] | None = None
    dim: int | None = None
    count: int | None = None
    probabilistic: bool = False

    def __bool__(self) -> bool:
        return self.holds


def _subspace_counts(U, d, tol, budget, n_random, rng):
    """Largest number of rows of ``U`` lying in a span of ``d`` rows.

    Yields ``(count, subset)`` for the best subset found.
    """
    n, q = U.shape
    total = math.comb(n, d)
    if total <= budget:
        combos = itertools.combinations(range(n), d)
        probabilistic = False
    else:
        combos = (tuple(sorted(rng.choice(n, d, replace=False))) for _ in range(n_random))
        probabilistic = True
    best, best_subset = 0, None
    while True:
        chunk = list(itertools.islice(combos, 4096))
        if not chunk:
            break
        idx = np.asarray(chunk)
        B = U[idx]  # (m, d, q)
        sv = np.linalg.svd(B, compute_uv=False)
        full = sv[:, -1] > 1e-9
        if not np.any(full):
            continue
        idx, B = idx[full], B[full]
        Q, _ = np.linalg.qr(np.swapaxes(B, 1, 2))  # (m, q, d)
        coef = np.einsum("nq,mqd->mnd", U, Q)
        resid = U[None, :, :] - np.einsum("mnd,mqd->mnq", coef, Q)
        dist = np.sqrt(np.einsum("mnq,mnq->mn", resid, resid))
        counts = np.count_nonzero(dist <= tol, axis=1)
        j = int(np.argmax(counts))
        if counts[j] > best:
            best, best_subset = int(counts[j]), tuple(int(i) for i in idx[j])
    return best, best_subset, probabilistic


def condition_a_limit(
    X,
    tol: float = 1e-9,
    budget: int = 10**6,
    n_random: int = 10**4,
    seed: int = 0,
    max_dim: int | None = None,
):
    """Supremum of the betas for which Condition A holds on the nonzero rows.

    Condition A holds for ``beta`` iff ``beta < limit``. Returns
    ``(limit, witness_dim, witness_subset, probabilistic)``. Subspaces of
    dimension above ``max_dim`` are skipped; a ``d``-dimensional subspace
    can only violate the condition when ``d <= beta``.
    """
    X = as_data(X)
    norms = row_norms(X)
    U = X[norms > 0] / norms[norms > 0, None]
    n, q = U.shape
    rng = np.random.default_rng(seed)
    limit, wdim, wsub, prob = math.inf, None, None, False
    top = min(q - 1, n) if max_dim is None else min(q - 1, n, max_dim)
    for d in range(1, top + 1):
        count, subset, p = _subspace_counts(U, d, tol, budget, n_random, rng)
        prob = prob or p
        if count and d * n / count < limit:
            limit, wdim, wsub = d * n / count, d, subset
    return limit, wdim, wsub, prob


def check_condition_a(X, beta: float, **kwargs) -> ConditionAResult:
    """Check ``#{x_i in V} / n < dim(V) / beta`` over data-spanned subspaces.

    Only subspaces spanned by data points with dimension ``1..q-1`` are
    examined: a maximally populated violating subspace can always be taken
    to be such a span. Zero rows are excluded. Always holds for
    ``beta < 1``.
    """
    X = as_data(X)
    q = X.shape[1]
    if not 0 <= beta <= q:
        raise ValueError(f"beta must lie in [0, q], got {beta}")
    if beta < 1:
        return ConditionAResult(True, beta)
    limit, d, subset, prob = condition_a_limit(X, max_dim=int(math.floor(beta)), **kwargs)
    if beta < limit:
        return ConditionAResult(True, beta, probabilistic=prob)
    n = int(np.count_nonzero(row_norms(X) > 0))
    return ConditionAResult(
        False, beta, witness=subset, dim=d, count=int(round(d * n / limit)), probabilistic=prob
    )


# ---------------------------------------------------------------------------
# fixed-point iteration
# ---------------------------------------------------------------------------


def _weighted_sum(Y, S, u, divisor):
    L = np.linalg.cholesky(S)
    Z = np.linalg.solve(L, Y.T)
    s = np.einsum("ij,ij->j", Z, Z)
    w = u(s)
    M = (Y.T * w) @ Y / divisor
    return (M + M.T) / 2


def _resolve_target(X, target) -> np.ndarray:
    q = X.shape[1]
    if isinstance(target, str):
        if target == "identity":
            return np.eye(q)
        if target == "sigma2":
            return robust_sigma2(X) * np.eye(q)
        raise ValueError(f"unknown target {target!r}")
    T = as_spd(target)
    if T.shape != (q, q):
        raise ValueError("target has the wrong dimension")
    return T


def _effective_beta(weight: WeightFunction, penalty: PenaltySpec) -> float | None:
    """Regularized-Tyler beta of a Tyler-weight problem (``None`` otherwise)."""
    if penalty.kind == "tyler-beta":
        return penalty.beta
    if not weight.is_tyler:
        return None
    if penalty.kind == "tp":
        return weight.kappa
    return (1.0 - penalty.gamma) * weight.kappa


def _unit(s):
    with np.errstate(divide="ignore"):
        return 1.0 / s


def penalized_rhs(X, weight: WeightFunction, penalty: PenaltySpec, sigma, target=None) -> np.ndarray:
    """Right-hand side of the estimating equation evaluated at ``sigma``.

    Useful as an independent residual check of a solution.
    """
    X = as_data(X)
    T = _resolve_target(X, penalty.target) if target is None else target
    a, b = penalty.coefficients
    tylerish = penalty.kind == "tyler-beta" or weight.is_tyler
    if tylerish:
        Xn = X[row_norms(X) > 0]
        u = _unit if penalty.kind == "tyler-beta" else weight.u
        M = _weighted_sum(Xn, as_spd(sigma), u, Xn.shape[0])
    else:
        M = _weighted_sum(X, as_spd(sigma), weight.u, X.shape[0])
    return a * M + b * T


def solve_penalized(
    X,
    weight: WeightFunction | None,
    penalty: PenaltySpec,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    init=None,
    check: bool = True,
) -> ScatterEstimate:
    """Solve a penalized M-estimating equation by fixed-point iteration.

    Parameters
    ----------
    X : array-like, shape (n, q)
        Data, already centered.
    weight : WeightFunction
        Weight function ``u``. Ignored (may be ``None``) for the
        ``"tyler-beta"`` kind, which always uses ``u(s) = 1/s`` scaled by beta.
    penalty : PenaltySpec
    tol : float
        Stop when the relative Frobenius change between iterates is below
        ``tol``.
    max_iter : int
        Iteration cap. Hitting it returns the last iterate with
        ``converged=False`` and emits a :class:`ConvergenceWarning`.
    init : array-like, optional
        Starting value; defaults to the target.
    check : bool
        Verify Condition A for Tyler-type problems with effective beta >= 1.

    Returns
    -------
    ScatterEstimate

    Notes
    -----
    For Tyler weights zero rows are dropped and the divisor is the number
    of nonzero rows. A Tyler-weight TP problem is the regularized Tyler
    equation with ``beta = kappa``; a Tyler-weight KL problem has
    ``beta = (1 - gamma) kappa``. Either needs ``beta < q``.
    """
    X = as_data(X)
    n, q = X.shape
    if penalty.kind == "tyler-beta":
        weight = tyler_weight(penalty.beta) if penalty.beta > 0 else tyler_weight(1.0)
    elif weight is None:
        raise ValueError("a weight function is required for tp and kl penalties")

    T = _resolve_target(X, penalty.target)
    beta = _effective_beta(weight, penalty)
    a, b = penalty.coefficients

    if beta is not None:
        Xw = X[row_norms(X) > 0]
        if Xw.shape[0] == 0:
            raise RankDeficientError("all rows are zero")
        if beta >= q:
            raise ValueError(f"no solution exists for effective beta={beta} >= q={q}")
        if check and beta >= 1:
            res = check_condition_a(Xw, beta)
            if not res:
                raise ConditionAError(
                    f"Condition A fails for beta={beta}: {res.count} of {Xw.shape[0]} points "
                    f"lie in a {res.dim}-dimensional subspace",
                    witness=res.witness,
                )
        u = _unit if penalty.kind == "tyler-beta" else weight.u
    else:
        Xw = X
        u = weight.u
    divisor = Xw.shape[0]

    if b == 0 and np.linalg.matrix_rank(Xw) < q:
        raise RankDeficientError("data do not span R^q and the penalty is zero")

    # whiten so that the target becomes the identity
    T_half = sqrtm_spd(T, 0.5)
    T_ihalf = sqrtm_spd(T, -0.5)
    Y = Xw @ T_ihalf
    I = np.eye(q)
    S = I.copy() if init is None else T_ihalf @ as_spd(init) @ T_ihalf
    S = (S + S.T) / 2

    step = math.inf
    it = 0
    M = np.zeros((q, q))
    for it in range(1, max_iter + 1):
        M = _weighted_sum(Y, S, u, divisor)
        new = a * M + b * I
        step = float(np.linalg.norm(new - S) / np.linalg.norm(new))
        S = new
        if step < tol:
            break
    converged = step < tol

    sigma = T_half @ S @ T_half
    sigma = (sigma + sigma.T) / 2
    wsum = T_half @ M @ T_half
    wsum = (wsum + wsum.T) / 2
    rhs = penalized_rhs(X, weight, penalty, sigma, target=T)
    residual = float(np.linalg.norm(sigma - rhs) / np.linalg.norm(sigma))
    converged = converged and residual < RESIDUAL_TOL
    if not converged:
        warnings.warn(
            f"{penalty.kind} solver stopped after {it} iterations (step {step:.2e}, "
            f"residual {residual:.2e})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return ScatterEstimate(
        sigma=sigma,
        weighted_sum=wsum,
        penalty=penalty,
        weight=weight,
        target=T,
        iterations=it,
        final_step=step,
        residual=residual,
        converged=converged,
        n_used=divisor,
    )


def adjusted_v(est: ScatterEstimate) -> np.ndarray:
    """The adjusted estimator with the regularization offset removed.

    ``S - eta T`` for the TP penalty, ``(S - gamma T) / (1 - gamma)`` for
    the KL and regularized Tyler kinds. Computed from the weighted sum at
    the solution, which equals these differences without the cancellation.
    For ``gamma = 1`` use :func:`robscatter.sscm.generalized_sscm`.
    """
    p = est.penalty
    if p.kind == "tp":
        V = est.weighted_sum
    elif p.gamma >= 1:
        raise ValueError("gamma = 1: the adjusted estimator is the generalized SSCM of the data")
    elif p.kind == "kl":
        V = est.weighted_sum
    else:
        V = p.beta * est.weighted_sum / (1.0 - p.gamma)
    return (V + V.T) / 2


def scaled_scatter(shape, X) -> np.ndarray:
    """Scale a trace-``q`` shape by ``lower_median{x' shape^-1 x} / q``.

    Zero rows take part in the median.
    """
    S = as_spd(shape)
    X = as_data(X)
    q = S.shape[0]
    if abs(np.trace(S) - q) > 1e-8 * q:
        raise ValueError("shape must have trace q")
    L = np.linalg.cholesky(S)
    Z = np.linalg.solve(L, X.T)
    quad = np.einsum("ij,ij->j", Z, Z)
    s2 = lower_median(quad) / q
    if s2 <= 0:
        raise DegenerateScaleError("median quadratic form is zero")
    return s2 * S


# ---------------------------------------------------------------------------
# unregularized Tyler (the beta = q endpoint)
# ---------------------------------------------------------------------------


@dataclass
class TylerFit:
    shape: np.ndarray
    iterations: int
    final_step: float
    converged: bool


def tyler_shape(X, tol: float = TOL, max_iter: int = MAX_ITER, init=None, check: bool = True) -> TylerFit:
    """Tyler's distribution-free M-estimator of shape, normalized to trace ``q``.

    Iterates ``S <- q W(S) / tr W(S)`` with ``W(S) = (1/n) sum x x' / x' S^-1 x``
    over the nonzero rows. Raises :class:`ConditionAError` if the data put
    too much mass in a subspace for a solution to exist.
    """
    X = as_data(X)
    q = X.shape[1]
    Xn = X[row_norms(X) > 0]
    n = Xn.shape[0]
    if n < q or np.linalg.matrix_rank(Xn) < q:
        raise RankDeficientError("Tyler's estimator needs data spanning R^q")
    if check:
        limit, d, subset, _ = condition_a_limit(Xn)
        if not q < limit:
            raise ConditionAError(
                f"Condition A fails at beta=q: a {d}-dimensional subspace holds too many points",
                witness=subset,
            )
    S = np.eye(q) if init is None else shape_of(init)
    step, it = math.inf, 0
    for it in range(1, max_iter + 1):
        W = _weighted_sum(Xn, S, _unit, n)
        new = q * W / np.trace(W)
        step = float(np.linalg.norm(new - S) / np.linalg.norm(new))
        S = new
        if step < tol:
            break
    converged = step < tol
    if not converged:
        warnings.warn(
            f"Tyler iteration stopped after {it} iterations (step {step:.2e})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return TylerFit(shape=shape_of(S), iterations=it, final_step=step, converged=converged)
