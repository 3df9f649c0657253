"""Orthogonally equivariant location: spatial median and k-step LTS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import column_median, lts_steps, weiszfeld

__all__ = ["LocationEstimate", "spatial_median", "kstep_lts", "DEFAULT_LTS_STEPS"]

DEFAULT_LTS_STEPS = 2


@dataclass(frozen=True)
class LocationEstimate:
    center: np.ndarray
    iterations_used: int
    converged: bool


def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("expected a non-empty n x p matrix")
    return X


def spatial_median(X, tol: float = 1e-10, max_iter: int = 1000) -> LocationEstimate:
    """Minimize sum_i ||x_i - m|| by the modified Weiszfeld iteration.

    The Vardi-Zhang modification handles iterates that coincide with data
    points: if the pull of the remaining points does not exceed the number of
    coincident points the iterate is optimal, otherwise it is moved off the
    data point. Iteration stops once the step is below ``tol`` times the
    harmonic mean distance to the data, which keeps the criterion invariant
    under rotations, translations and rescaling.

    If ``max_iter`` is exhausted the last iterate is returned with
    ``converged=False``.
    """
    X = _as_matrix(X)
    m, it, ok = weiszfeld(X, column_median(X), float(tol), int(max_iter))
    return LocationEstimate(m, int(it), bool(ok))


def kstep_lts(
    X, k: int = DEFAULT_LTS_STEPS, tol: float = 1e-10, max_iter: int = 1000
) -> LocationEstimate:
    """k-step least trimmed squares location.

    Starts from the spatial median and then, ``k`` times, replaces the
    center by the mean of the ``h = (n + 1) // 2`` observations closest to
    it. Ties in distance are broken by row index.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    X = _as_matrix(X)
    start = spatial_median(X, tol=tol, max_iter=max_iter)
    m = start.center
    if k:
        m = lts_steps(X, m, int(k))
    return LocationEstimate(m, start.iterations_used + k, start.converged)
