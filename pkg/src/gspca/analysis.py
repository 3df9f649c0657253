"""Influence functions, gross-error sensitivities and efficiencies at N(0, diag(1, gamma)).

All quantities are evaluated at the population level: cutoffs are the
population quartiles of ||X||, the GSSCM eigenvalues are computed by the
breakpoint-aware polar quadrature of :mod:`gspca.quadrature`, and the
location functional is held at the true center 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import optimize, stats

from .dataio import format_float
from .gsscm import EllipticalSpec, polar_gg
from .quadrature import PolarRule, population_cutoffs
from .radial import Cutoffs, RadialKind, weight

__all__ = [
    "AnalysisModel",
    "build_model",
    "g_population",
    "if_loading",
    "sup_influence",
    "ges",
    "asv_offdiag",
    "efficiency",
    "mad_influence",
    "if_corrected_eigenvalue",
    "if_combined_covariance",
    "contaminated_scatter",
    "contaminated_loadings",
    "symmetry_integral_check",
    "curve",
    "write_curve_csv",
]

_Q75 = stats.norm.ppf(0.75)
# 1 / (4 q phi(q)) with q the upper quartile of the standard normal
_MAD_IF_SCALE = 1.0 / (4.0 * _Q75 * stats.norm.pdf(_Q75))


@dataclass(frozen=True)
class AnalysisModel:
    """Population GSSCM at N(0, diag(1, gamma)) for one radial function."""

    gamma: float
    kind: RadialKind
    cutoffs: Optional[Cutoffs]
    lambda_g: tuple
    rule: PolarRule = field(repr=False, compare=False)

    @property
    def spec(self) -> EllipticalSpec:
        return EllipticalSpec.bivariate(self.gamma)

    @property
    def eigenvalues(self) -> tuple:
        """Eigenvalues (1, gamma) of the model covariance."""
        return (1.0, self.gamma)

    @property
    def gap(self) -> float:
        return self.lambda_g[0] - self.lambda_g[1]


def build_model(gamma: float, kind, n_theta: int = 512, n_gl: int = 40) -> AnalysisModel:
    """Population cutoffs and GSSCM eigenvalues at N(0, diag(1, gamma)).

    Parameters
    ----------
    gamma : float
        Second variance, in (0, 1) so that the eigenvalues are distinct.
    kind : RadialKind or str
    n_theta, n_gl : int
        Angular and per-piece radial resolution of the polar quadrature.
    """
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly between 0 and 1")
    kind = RadialKind.parse(kind)
    spec = EllipticalSpec.bivariate(gamma)
    rule = PolarRule(spec.scatter_diag, n_theta=n_theta, n_gl=n_gl)
    cutoffs = population_cutoffs(rule=rule) if kind.needs_cutoffs else None
    S = polar_gg(rule, kind, cutoffs)
    lam = (float(S[0, 0]), float(S[1, 1]))
    if not lam[0] > lam[1]:
        raise ValueError("population GSSCM eigenvalues are not distinct")
    return AnalysisModel(gamma, kind, cutoffs, lam, rule)


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("points must have a trailing dimension of size 2")
    return x


def g_population(model: AnalysisModel, x) -> np.ndarray:
    """g(x) = x * xi(||x||) with the population cutoffs; vectorized over leading axes."""
    x = _points(x)
    r = np.hypot(x[..., 0], x[..., 1])
    return x * np.asarray(weight(model.kind, r, model.cutoffs))[..., None]


def _check_component(j):
    if j not in (1, 2):
        raise ValueError("component index j must be 1 or 2")


def if_loading(model: AnalysisModel, x, j: int = 1) -> np.ndarray:
    """Influence function of the j-th population loading at x.

    With distinct eigenvalues the influence of ``v_j`` points along the
    other axis: ``g_1 g_2 / (lambda_j - lambda_k) e_k``. Vectorized over
    leading axes of ``x``.
    """
    _check_component(j)
    g = g_population(model, x)
    prod = g[..., 0] * g[..., 1]
    out = np.zeros_like(g)
    if j == 1:
        out[..., 1] = prod / model.gap
    else:
        out[..., 0] = -prod / model.gap
    return out


def _influence_norm(model, j, r, theta):
    x = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
    return np.linalg.norm(if_loading(model, x, j), axis=-1)


def sup_influence(
    model: AnalysisModel,
    j: int = 1,
    radius: Optional[float] = None,
    n_radii: int = 2000,
    n_angles: int = 720,
    refine: bool = True,
) -> float:
    """Supremum of ||IF(x, v_j)|| over the disc of the given radius.

    A polar grid is searched first; the best grid point is then refined by
    alternating bounded one-dimensional searches in radius and angle over
    the neighbouring grid cells. The default radius is 20 times the square
    root of the largest model eigenvalue.
    """
    _check_component(j)
    if radius is None:
        radius = 20.0 * math.sqrt(max(model.eigenvalues))
    radii = np.linspace(0.0, radius, n_radii + 1)[1:]
    angles = np.arange(n_angles) * (2.0 * math.pi / n_angles)
    vals = _influence_norm(model, j, radii[:, None], angles[None, :])
    i, a = np.unravel_index(np.argmax(vals), vals.shape)
    best = float(vals[i, a])
    if not refine:
        return best
    r0, t0 = radii[i], angles[a]
    dr = radius / n_radii
    dt = 2.0 * math.pi / n_angles
    for _ in range(3):
        res = optimize.minimize_scalar(
            lambda r: -float(_influence_norm(model, j, r, t0)),
            bounds=(max(r0 - dr, 0.0), min(r0 + dr, radius)),
            method="bounded",
            options={"xatol": 1e-13},
        )
        if -res.fun > best:
            best, r0 = -res.fun, res.x
        res = optimize.minimize_scalar(
            lambda t: -float(_influence_norm(model, j, r0, t)),
            bounds=(t0 - dt, t0 + dt),
            method="bounded",
            options={"xatol": 1e-13},
        )
        if -res.fun > best:
            best, t0 = -res.fun, res.x
    return best


def ges(model: AnalysisModel, j: int = 1, n_radii: int = 2000, n_angles: int = 720) -> float:
    """Gross-error sensitivity of the j-th loading; ``inf`` for the identity radial function."""
    if model.kind is RadialKind.IDENTITY:
        return math.inf
    return sup_influence(model, j, n_radii=n_radii, n_angles=n_angles)


def _breaks(model):
    return model.cutoffs.as_tuple() if model.cutoffs is not None else ()


def asv_offdiag(model: AnalysisModel) -> float:
    """Asymptotic variance of the off-diagonal loading entry, E[(g_1 g_2)^2] / gap^2."""
    x1, x2, r, w = model.rule.nodes(_breaks(model))
    xi = weight(model.kind, r, model.cutoffs)
    prod = x1 * x2 * xi * xi
    return float(np.sum(w * prod * prod)) / model.gap**2


def efficiency(model: AnalysisModel) -> float:
    """Asymptotic relative efficiency against classical PCA at the same gamma.

    The classical variance is integrated with the same quadrature rule, so
    the identity radial function gives exactly 1.
    """
    if model.kind is RadialKind.IDENTITY:
        classical = model
    else:
        classical = AnalysisModel(
            model.gamma, RadialKind.IDENTITY, None, _identity_lambda(model.rule), model.rule
        )
    return asv_offdiag(classical) / asv_offdiag(model)


def _identity_lambda(rule):
    S = polar_gg(rule, RadialKind.IDENTITY, None)
    return (float(S[0, 0]), float(S[1, 1]))


def mad_influence(u):
    """Influence function of the MAD at the standard normal, with sign(0) = 0."""
    u = np.asarray(u, dtype=float)
    out = np.sign(np.abs(u) - _Q75) * _MAD_IF_SCALE
    return float(out) if out.ndim == 0 else out


def if_corrected_eigenvalue(model: AnalysisModel, x, j: int = 1):
    """Influence of the MAD-corrected j-th eigenvalue: 2 lambda_j IF(x_j / sqrt(lambda_j), MAD)."""
    _check_component(j)
    x = _points(x)
    lam = model.eigenvalues[j - 1]
    return 2.0 * lam * mad_influence(x[..., j - 1] / math.sqrt(lam))


def if_combined_covariance(model: AnalysisModel, x) -> np.ndarray:
    """Influence function at x of the covariance rebuilt from loadings and MAD eigenvalues.

    Returns a 2 x 2 matrix (or an array of them for stacked points). The
    off-diagonal entry reduces to ``(1 - gamma) g_1 g_2 / gap``.
    """
    x = _points(x)
    lam = model.eigenvalues
    g = g_population(model, x)
    prod = g[..., 0] * g[..., 1]
    out = np.zeros(x.shape[:-1] + (2, 2))
    out[..., 0, 0] = if_corrected_eigenvalue(model, x, 1)
    out[..., 1, 1] = if_corrected_eigenvalue(model, x, 2)
    # lambda_1 / (lg1 - lg2) + lambda_2 / (lg2 - lg1)
    off = (lam[0] - lam[1]) / model.gap * prod
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    return out


def contaminated_scatter(model: AnalysisModel, point, eps: float) -> np.ndarray:
    """GSSCM of (1 - eps) F + eps * delta_point with cutoffs recomputed under contamination.

    The center is held at 0.
    """
    point = np.asarray(point, dtype=float)
    kind = model.kind
    if kind.needs_cutoffs:
        c = population_cutoffs(rule=model.rule, point=point, eps=eps)
        breaks = c.as_tuple() + _breaks(model)
    else:
        c, breaks = None, ()
    S = (1.0 - eps) * polar_gg(model.rule, kind, c, breaks)
    r = float(np.hypot(*point))
    gx = point * weight(kind, r, c)
    return S + eps * np.outer(gx, gx)


def contaminated_loadings(model: AnalysisModel, point, eps: float) -> np.ndarray:
    """Eigenvectors (columns, descending) of the contaminated GSSCM, signed to the axes."""
    _, V = np.linalg.eigh(contaminated_scatter(model, point, eps))
    V = V[:, ::-1]
    return V * np.sign(np.diag(V))


def symmetry_integral_check(model: AnalysisModel, point=(1.0, 1.0), eps: float = 1e-5) -> float:
    """Off-diagonal of E[dge(X) g(X)' + g(X) dge(X)'] under F.

    ``dge`` is the derivative of ``x * xi(||x||)`` with respect to the
    contamination mass at ``point``, obtained by finite-differencing the
    population cutoffs. The integral vanishes by symmetry, so the returned
    magnitude measures the numerical error. Radial functions without
    cutoffs return exactly 0.
    """
    if not model.kind.needs_cutoffs:
        return 0.0
    c_eps = population_cutoffs(rule=model.rule, point=np.asarray(point, dtype=float), eps=eps)
    x1, x2, r, w = model.rule.nodes(_breaks(model) + c_eps.as_tuple())
    xi = weight(model.kind, r, model.cutoffs)
    dxi = (weight(model.kind, r, c_eps) - xi) / eps
    # dge_1 g_2 + g_1 dge_2 = 2 x1 x2 xi dxi
    return abs(float(np.sum(w * 2.0 * x1 * x2 * xi * dxi)))


_QUANTITIES = {
    "efficiency": efficiency,
    "asv": asv_offdiag,
    "ges": ges,
}


def curve(quantity: str, gammas: Sequence[float], kinds: Sequence) -> dict:
    """Evaluate ``efficiency``, ``asv`` or ``ges`` over a gamma grid for each kind.

    Returns a mapping from kind name to an array aligned with ``gammas``.
    """
    try:
        fn = _QUANTITIES[quantity]
    except KeyError:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {', '.join(_QUANTITIES)}") from None
    out = {}
    for kind in kinds:
        kind = RadialKind.parse(kind)
        out[kind.value] = np.array([fn(build_model(g, kind)) for g in gammas])
    return out


def write_curve_csv(path, x_name: str, x: Sequence[float], series: Mapping[str, Sequence[float]]):
    """Write long-format ``series,<x_name>,y`` rows, one per method and grid value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", x_name, "y"])
        for name, ys in series.items():
            for xv, yv in zip(x, ys):
                writer.writerow([name, format_float(xv), format_float(yv)])
