"""Generalized spatial sign covariance matrix: sample and population versions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .location import DEFAULT_LTS_STEPS, kstep_lts
from .quadrature import PolarRule, hermite_rule, population_cutoffs
from .radial import Cutoffs, RadialKind, estimate_cutoffs, weight

__all__ = [
    "ScatterMatrix",
    "EllipticalSpec",
    "g_transform",
    "sample_gsscm",
    "population_gsscm",
    "polar_gg",
]


@dataclass(frozen=True)
class ScatterMatrix:
    values: np.ndarray
    kind: RadialKind
    cutoffs: Optional[Cutoffs] = None
    center: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EllipticalSpec:
    """Centered elliptical model with diagonal scatter.

    ``family`` is ``"gaussian"`` or ``"student_t"`` (then ``df`` is required).
    """

    scatter_diag: tuple
    family: str = "gaussian"
    df: Optional[float] = None
    center: Optional[tuple] = None

    def __post_init__(self):
        s = tuple(float(v) for v in self.scatter_diag)
        if not s or any(v <= 0 for v in s):
            raise ValueError("scatter_diag entries must be strictly positive")
        object.__setattr__(self, "scatter_diag", s)
        if self.family not in ("gaussian", "student_t"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "student_t" and not (self.df and self.df > 0):
            raise ValueError("student_t family needs positive df")
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * len(s))

    @property
    def p(self) -> int:
        return len(self.scatter_diag)

    @classmethod
    def bivariate(cls, gamma: float) -> "EllipticalSpec":
        """N(0, diag(1, gamma))."""
        return cls((1.0, float(gamma)))


def _centered_distances(X, center):
    diff = np.asarray(X, dtype=float) - np.asarray(center, dtype=float)
    return diff, np.sqrt(np.einsum("ij,ij->i", diff, diff))


def g_transform(X, center, kind, c: Optional[Cutoffs] = None) -> np.ndarray:
    """Rows ``(x_i - center) * xi(||x_i - center||)``."""
    kind = RadialKind.parse(kind)
    diff, d = _centered_distances(X, center)
    if kind is RadialKind.IDENTITY:
        return diff
    return diff * weight(kind, d, c)[:, None]


def sample_gsscm(X, kind, location_k: int = DEFAULT_LTS_STEPS) -> ScatterMatrix:
    """(1/n) g(X)' g(X) about the k-step LTS center, cutoffs from the same data."""
    kind = RadialKind.parse(kind)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an n x p matrix with n >= 2")
    center = kstep_lts(X, location_k).center
    G, c = _weighted(X, center, kind)
    S = G.T @ G / X.shape[0]
    return ScatterMatrix(S, kind, c, center)


def _weighted(X, center, kind):
    diff, d = _centered_distances(X, center)
    c = estimate_cutoffs(d) if kind.needs_cutoffs else None
    if kind is RadialKind.IDENTITY:
        return diff, c
    return diff * weight(kind, d, c)[:, None], c


def polar_gg(rule: PolarRule, kind, cutoffs: Optional[Cutoffs], breakpoints=None) -> np.ndarray:
    """E[g(X) g(X)'] by the polar rule, split at the cutoffs or the given radii."""
    kind = RadialKind.parse(kind)
    if breakpoints is None:
        breakpoints = cutoffs.as_tuple() if cutoffs is not None else ()
    x1, x2, r, w = rule.nodes(breakpoints)
    xi = weight(kind, r, cutoffs)
    g1, g2 = x1 * xi, x2 * xi
    s12 = np.sum(w * g1 * g2)
    return np.array([[np.sum(w * g1 * g1), s12], [s12, np.sum(w * g2 * g2)]])


def population_gsscm(
    spec: EllipticalSpec,
    kind,
    method: str = "polar",
    nodes: int = 200,
    cutoffs: Optional[Cutoffs] = None,
) -> ScatterMatrix:
    """E[g(X) g(X)'] under a centered bivariate normal.

    Cutoffs default to the population cutoffs of ||X||. ``method="polar"``
    uses the breakpoint-aware polar rule; ``method="hermite"`` uses a
    tensorized Gauss-Hermite grid with ``nodes`` points per axis, which is
    exact for polynomial moments but loses accuracy for the discontinuous
    radial functions (Ball, Shell).
    """
    kind = RadialKind.parse(kind)
    if spec.family != "gaussian" or spec.p != 2:
        raise NotImplementedError("population GSSCM is available for bivariate Gaussian models only")
    rule = PolarRule(spec.scatter_diag)
    if kind.needs_cutoffs and cutoffs is None:
        cutoffs = population_cutoffs(rule=rule)
    if method == "polar":
        S = polar_gg(rule, kind, cutoffs)
    elif method == "hermite":
        pts, w = hermite_rule(spec.scatter_diag, nodes)
        G = g_transform(pts, np.zeros(2), kind, cutoffs)
        S = (G * w[:, None]).T @ G
    else:
        raise ValueError(f"unknown quadrature method {method!r}")
    return ScatterMatrix(S, kind, cutoffs, np.zeros(2))
