"""Robust centering: spatial median, marginal medians and a median-based scale."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConvergenceWarning,
    DegenerateScaleError,
    as_data,
    lower_median,
    row_norms,
)

PAIRWISE_BUDGET = 10**6


@dataclass(frozen=True)
class CenterSpec:
    """How to center a sample before scatter estimation.

    ``mode`` is one of ``"known"``, ``"spatial"``, ``"marginal"`` or
    ``"pairwise"``; ``value`` holds the center for ``"known"``.
    """

    mode: str = "spatial"
    value: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in ("known", "spatial", "marginal", "pairwise"):
            raise ValueError(f"unknown centering mode {self.mode!r}")
        if self.mode == "known" and self.value is None:
            raise ValueError("known centering needs a center vector")

    @classmethod
    def known(cls, value) -> "CenterSpec":
        return cls("known", np.asarray(value, dtype=float).ravel())

    def describe(self) -> str:
        if self.mode == "known":
            return "known=" + ",".join(repr(float(v)) for v in self.value)
        return self.mode


@dataclass
class SpatialMedianInfo:
    iterations: int
    converged: bool
    objective: list[float]


def _objective(X, mu):
    return float(np.sum(row_norms(X - mu)))


def marginal_median(X) -> np.ndarray:
    """Coordinate-wise lower median."""
    X = as_data(X)
    k = (X.shape[0] - 1) // 2
    return np.partition(X, k, axis=0)[k].copy()


def spatial_median(
    X,
    tol: float = 1e-10,
    max_iter: int = 10**4,
    collision_tol: float = 1e-12,
    return_info: bool = False,
):
    """Minimizer of the sum of Euclidean distances to the rows of ``X``.

    Weiszfeld iteration started at the coordinate-wise median. When an
    iterate coincides with data points, the Vardi-Zhang step is used: the
    iterate is optimal if the resultant of the remaining unit vectors is
    no longer than the coincidence count, otherwise the step is damped so
    that it moves off the data point along the descent direction.

    Parameters
    ----------
    X : array-like, shape (n, q)
    tol : float
        Stop when the step is below ``tol`` relative to ``max(1, |mu|)``.
    max_iter : int
        Iteration cap; reaching it emits a :class:`ConvergenceWarning`.
    return_info : bool
        Also return a :class:`SpatialMedianInfo` with the objective path.
    """
    X = as_data(X)
    mu = marginal_median(X)
    history = [_objective(X, mu)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        diff = X - mu
        dist = row_norms(diff)
        close = dist < collision_tol
        far = ~close
        eta = int(np.count_nonzero(close))
        if not np.any(far):
            converged = True
            break
        w = 1.0 / dist[far]
        T = (w @ X[far]) / w.sum()
        if eta == 0:
            new = T
        else:
            R = (diff[far] * w[:, None]).sum(axis=0)
            r = float(np.linalg.norm(R))
            if r <= eta:
                converged = True
                break
            frac = eta / r
            new = (1.0 - frac) * T + frac * mu
        step = float(np.linalg.norm(new - mu))
        mu = new
        history.append(_objective(X, mu))
        if step <= tol * max(1.0, float(np.linalg.norm(mu))):
            converged = True
            break
    if not converged:
        warnings.warn(
            f"spatial median did not converge in {max_iter} iterations",
            ConvergenceWarning,
            stacklevel=2,
        )
    if return_info:
        return mu, SpatialMedianInfo(iterations=it, converged=converged, objective=history)
    return mu


def robust_sigma2(X, center=None) -> float:
    """``lower_median{(x_i - c)'(x_i - c)} / q``.

    Raises :class:`DegenerateScaleError` if the median squared distance is
    zero, e.g. when most points sit on the center.
    """
    X = as_data(X)
    q = X.shape[1]
    c = np.zeros(q) if center is None else np.asarray(center, dtype=float)
    d2 = np.einsum("ij,ij->i", X - c, X - c)
    s2 = lower_median(d2) / q
    if s2 <= 0:
        raise DegenerateScaleError("median squared distance to the center is zero")
    return s2


def pairwise_differences(X) -> np.ndarray:
    X = as_data(X)
    n = X.shape[0]
    if math.comb(n, 2) > PAIRWISE_BUDGET:
        raise ValueError(f"{math.comb(n, 2)} pairwise differences exceed the budget")
    i, j = np.triu_indices(n, k=1)
    return X[i] - X[j]


def compute_center(X, spec: CenterSpec) -> np.ndarray | None:
    """The center implied by ``spec`` (``None`` for pairwise differences)."""
    X = as_data(X)
    if spec.mode == "known":
        if spec.value.shape != (X.shape[1],):
            raise ValueError("known center has the wrong dimension")
        return spec.value
    if spec.mode == "spatial":
        return spatial_median(X)
    if spec.mode == "marginal":
        return marginal_median(X)
    return None


def center_data(X, spec: CenterSpec) -> np.ndarray:
    """Subtract the center given by ``spec``, or form pairwise differences."""
    X = as_data(X)
    if spec.mode == "pairwise":
        return pairwise_differences(X)
    return X - compute_center(X, spec)
