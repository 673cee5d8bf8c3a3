"""Matrix primitives, weight functions and general-position checks.

Every estimator in the package works on plain ``numpy`` arrays: a data
matrix is an ``(n, q)`` float array with one observation per row, and a
scatter matrix is a symmetric positive definite ``(q, q)`` array.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

SYMMETRY_RTOL = 1e-12
WORKERS_ENV = "ROBSCATTER_WORKERS"


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix expected to be positive definite is not."""


class RankDeficientError(ValueError):
    """Raised when the data (or a weighted sum of outer products) is singular."""


class DegenerateScaleError(ValueError):
    """Raised when a median-based scale statistic is zero."""


class ConvergenceWarning(RuntimeWarning):
    """Emitted when an iterative solver stops at its iteration cap."""


# ---------------------------------------------------------------------------
# data and matrix validation
# ---------------------------------------------------------------------------


def as_data(X) -> np.ndarray:
    """Validate a data matrix and return it as a 2-D float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"data must be 2-D (n, q), got shape {X.shape}")
    n, q = X.shape
    if n < 1 or q < 1:
        raise ValueError(f"data must have n >= 1 and q >= 1, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite entries")
    return X


def row_norms(X: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", X, X))


def nonzero_rows(X: np.ndarray) -> np.ndarray:
    """Rows of ``X`` with positive Euclidean norm."""
    X = as_data(X)
    return X[row_norms(X) > 0]


def n_nonzero(X: np.ndarray) -> int:
    return int(np.count_nonzero(row_norms(as_data(X)) > 0))


def lower_median(values) -> float:
    """The ceil(n/2)-th order statistic.

    Used for every median in the package; for even ``n`` it is the smaller
    of the two middle values rather than their average.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("median of an empty sample")
    k = (v.size - 1) // 2
    return float(np.partition(v, k)[k])


def as_symmetric(M, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Check symmetry to a relative tolerance and return ``(M + M.T) / 2``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > rtol * max(scale, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")
    return (M + M.T) / 2


def as_spd(M) -> np.ndarray:
    """Validate a symmetric positive definite matrix."""
    M = as_symmetric(M)
    lam = np.linalg.eigvalsh(M)
    if lam[0] <= 0:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (smallest eigenvalue {lam[0]:.3g})"
        )
    return M


# ---------------------------------------------------------------------------
# spectral helpers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted in descending order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        P = self.eigenvectors
        return (P * self.eigenvalues) @ P.T


def spectral_decompose(M) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come back in descending order. Each eigenvector is signed so
    that its entry of largest absolute value is positive, which makes the
    output deterministic across runs and platforms.
    """
    M = as_symmetric(M)
    lam, P = np.linalg.eigh(M)
    lam = lam[::-1].copy()
    P = P[:, ::-1].copy()
    idx = np.argmax(np.abs(P), axis=0)
    signs = np.sign(P[idx, np.arange(P.shape[1])])
    signs[signs == 0] = 1.0
    P *= signs
    return SpectralDecomposition(eigenvalues=lam, eigenvectors=P)


def condition_number(M) -> float:
    """Ratio of the largest to the smallest eigenvalue."""
    lam = np.linalg.eigvalsh(as_symmetric(M))
    if lam[0] <= 0:
        raise NotPositiveDefiniteError("condition number of a singular matrix")
    return float(lam[-1] / lam[0])


def sqrtm_spd(M: np.ndarray, power: float = 0.5) -> np.ndarray:
    """Symmetric matrix power ``M**power`` of a positive definite matrix."""
    lam, P = np.linalg.eigh(as_spd(M))
    out = (P * lam**power) @ P.T
    return (out + out.T) / 2


def riemannian_distance(V1, V2) -> float:
    r"""Affine-invariant distance :math:`\|\log(V_1^{-1/2} V_2 V_1^{-1/2})\|_F`.

    Computed from the generalized eigenvalues of the pencil ``(V2, V1)``,
    which coincide with the eigenvalues of the congruence above.
    """
    V1 = as_spd(V1)
    V2 = as_spd(V2)
    if V1.shape != V2.shape:
        raise ValueError(f"dimension mismatch: {V1.shape} vs {V2.shape}")
    L = np.linalg.cholesky(V1)
    Linv = np.linalg.inv(L)
    C = Linv @ V2 @ Linv.T
    lam = np.linalg.eigvalsh((C + C.T) / 2)
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def shape_of(M) -> np.ndarray:
    """Trace-``q`` normalization ``q M / tr(M)``."""
    M = as_spd(M)
    q = M.shape[0]
    S = q * M / np.trace(M)
    S *= q / np.trace(S)
    return S


def acg_terms(Z: np.ndarray, shape: np.ndarray) -> np.ndarray:
    """Per-observation angular central Gaussian terms.

    ``q log(z' S^{-1} z / z'z) + log det S`` for every row ``z`` of ``Z``.
    Rows must be nonzero; callers drop zero rows first.
    """
    S = as_spd(shape)
    q = S.shape[0]
    L = np.linalg.cholesky(S)
    Y = np.linalg.solve(L, Z.T)
    quad = np.einsum("ij,ij->j", Y, Y)
    sq = np.einsum("ij,ij->i", Z, Z)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return q * np.log(quad / sq) + logdet


# ---------------------------------------------------------------------------
# weight functions
# ---------------------------------------------------------------------------

_GRID = np.logspace(-6, 12, 1000)


@dataclass(frozen=True)
class WeightFunction:
    """An M-estimation weight ``u(s)`` with ``psi(s) = s u(s)`` and ``kappa = sup psi``.

    Use :func:`tyler_weight`, :func:`shifted_weight` or :func:`custom_weight`
    rather than constructing this directly.
    """

    kind: str
    kappa: float
    shift: float = 0.0
    func: Callable | None = None
    nonincreasing: bool = True

    def u(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "tyler":
            with np.errstate(divide="ignore"):
                return self.kappa / s
        if self.kind == "shifted":
            return self.kappa / (s + self.shift)
        return np.asarray(self.func(s), dtype=float)

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "tyler":
            return np.full_like(s, self.kappa)
        return s * self.u(s)

    @property
    def is_tyler(self) -> bool:
        return self.kind == "tyler"


def tyler_weight(kappa: float) -> WeightFunction:
    """``u(s) = kappa / s``; the psi-function is constant at ``kappa``."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return WeightFunction(kind="tyler", kappa=float(kappa))


def shifted_weight(kappa: float, shift: float = 2.0) -> WeightFunction:
    """``u(s) = kappa / (s + shift)``.

    With ``kappa = q + nu`` and ``shift = nu`` this is the weight of the
    maximum likelihood estimator for a multivariate t on ``nu`` degrees of
    freedom.
    """
    if not kappa > 0 or not shift > 0:
        raise ValueError("kappa and shift must be positive")
    return WeightFunction(kind="shifted", kappa=float(kappa), shift=float(shift))


def custom_weight(
    u: Callable, kappa: float | None = None, nonincreasing: bool = True
) -> WeightFunction:
    """Wrap a user supplied ``u`` after numerically validating it.

    ``psi(s) = s u(s)`` must be non-decreasing on a log grid over
    ``[1e-6, 1e12]``; ``u`` must be non-increasing there when
    ``nonincreasing`` is claimed. ``kappa`` defaults to ``psi(1e12)`` and,
    if given, must agree with it to 1e-6.
    """
    vals = np.asarray(u(_GRID), dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise ValueError("u must be finite and positive on (0, inf)")
    psi = _GRID * vals
    slack = 1e-12 * np.maximum(np.abs(psi[:-1]), 1.0)
    if np.any(np.diff(psi) < -slack):
        raise ValueError("psi(s) = s u(s) is not non-decreasing")
    if nonincreasing and np.any(np.diff(vals) > 1e-12 * np.maximum(vals[:-1], 1.0)):
        raise ValueError("u is not non-increasing")
    tail = float(psi[-1])
    if kappa is None:
        kappa = tail
    elif abs(kappa - tail) > 1e-6:
        raise ValueError(f"kappa={kappa} disagrees with psi(1e12)={tail}")
    return WeightFunction(kind="custom", kappa=float(kappa), func=u, nonincreasing=nonincreasing)


# ---------------------------------------------------------------------------
# general position
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneralPositionResult:
    holds: bool
    probabilistic: bool
    subsets_checked: int

    def __bool__(self) -> bool:
        return self.holds


def _full_rank(batch: np.ndarray, tol: float) -> np.ndarray:
    """Rank test for a stack of (r, q) row sets with unit-norm rows."""
    sv = np.linalg.svd(batch, compute_uv=False)
    return sv[:, -1] > tol


def check_general_position(
    X,
    max_subsets: int = 10**6,
    n_random: int = 10**4,
    tol: float = 1e-9,
    seed: int = 0,
) -> GeneralPositionResult:
    """Test whether every subset of ``r <= q`` rows spans an ``r``-dim subspace.

    It suffices to test subsets of size ``min(n, q)``: subsets of
    independent vectors are independent. Exhaustive when there are at most
    ``max_subsets`` such subsets, otherwise ``n_random`` random subsets are
    tested and the result is flagged probabilistic.
    """
    X = as_data(X)
    n, q = X.shape
    norms = row_norms(X)
    if np.any(norms == 0):
        return GeneralPositionResult(False, False, 0)
    U = X / norms[:, None]
    r = min(n, q)
    total = math.comb(n, r)
    if total <= max_subsets:
        combos = itertools.combinations(range(n), r)
        probabilistic = False
    else:
        rng = np.random.default_rng(seed)
        combos = (tuple(rng.choice(n, r, replace=False)) for _ in range(n_random))
        total = n_random
        probabilistic = True
    checked = 0
    while True:
        chunk = list(itertools.islice(combos, 20000))
        if not chunk:
            break
        idx = np.asarray(chunk)
        checked += len(idx)
        if not np.all(_full_rank(U[idx], tol)):
            return GeneralPositionResult(False, probabilistic, checked)
    return GeneralPositionResult(True, probabilistic, checked)


# ---------------------------------------------------------------------------
# parallelism
# ---------------------------------------------------------------------------


def workers() -> int:
    """Parallelism degree from ``ROBSCATTER_WORKERS``; 0 or unset means serial."""
    try:
        return max(0, int(os.environ.get(WORKERS_ENV, "0")))
    except ValueError:
        return 0


def parallel_map(func, items) -> list:
    """``[func(x) for x in items]``, in a process pool when workers are configured.

    Results come back in input order either way, so output does not depend
    on scheduling.
    """
    items = list(items)
    nw = workers()
    if nw > 0 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            return list(ex.map(func, items))
    return [func(x) for x in items]
