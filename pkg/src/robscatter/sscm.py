"""Spatial signs and (generalized) spatial sign covariance matrices."""

from __future__ import annotations

import numpy as np

from .core import RankDeficientError, WeightFunction, as_data, row_norms
from .location import CenterSpec, center_data


def spatial_sign(x) -> np.ndarray:
    """``x / |x|``, with the zero vector mapped to itself."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    return x / r if r > 0 else np.zeros_like(x)


def spatial_signs(X) -> np.ndarray:
    X = as_data(X)
    r = row_norms(X)
    out = np.zeros_like(X)
    nz = r > 0
    out[nz] = X[nz] / r[nz, None]
    return out


def sscm(X, center: CenterSpec | None = None) -> np.ndarray:
    """Spatial sign covariance matrix ``(1/n) sum S(x_i - mu) S(x_i - mu)'``.

    Zero centered rows contribute nothing but still count in ``n``, so the
    trace equals the fraction of nonzero centered rows. The default center
    is the spatial median.
    """
    Xc = center_data(X, center or CenterSpec("spatial"))
    S = spatial_signs(Xc)
    M = S.T @ S / Xc.shape[0]
    return (M + M.T) / 2


def generalized_sscm(X, weight: WeightFunction, center: CenterSpec | None = None) -> np.ndarray:
    """Weighted covariance ``(1/n) sum u(|x_i - mu|^2) (x_i - mu)(x_i - mu)'``.

    Zero centered rows contribute the zero matrix (even when ``u(0)`` is
    infinite) and count in ``n``. Raises :class:`RankDeficientError` when
    the result is singular.
    """
    Xc = center_data(X, center or CenterSpec("spatial"))
    n = Xc.shape[0]
    s = np.einsum("ij,ij->i", Xc, Xc)
    nz = s > 0
    w = np.zeros(n)
    w[nz] = weight.u(s[nz])
    M = (Xc.T * w) @ Xc / n
    M = (M + M.T) / 2
    lam = np.linalg.eigvalsh(M)
    if lam[0] <= 1e-14 * max(lam[-1], np.finfo(float).tiny):
        raise RankDeficientError("generalized SSCM is singular; centered data do not span R^q")
    return M
