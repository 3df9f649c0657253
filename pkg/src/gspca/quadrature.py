"""Deterministic integration against a centered bivariate normal N(0, diag(s1, s2)).

Expectations of radial-weighted integrands are computed in polar form.
Along each ray the radius is rescaled so the Gaussian factor becomes
exp(-rho^2 / 2); the radial integral is split at the cutoff radii (where
the radial functions are discontinuous or kinked) and each piece uses
Gauss-Legendre nodes. The angular integral is a periodic trapezoid rule,
which converges geometrically for these smooth periodic integrands.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy import optimize

from .radial import Cutoffs, cutoffs_from_location_scale

__all__ = [
    "PolarRule",
    "hermite_rule",
    "distance_cdf",
    "distance_quantile",
    "population_cutoffs",
]

_XTOL = 1e-15


class PolarRule:
    """Polar quadrature for N(0, diag(s1, s2))."""

    def __init__(self, scatter_diag, n_theta: int = 512, n_gl: int = 40, rho_max: float = 12.0):
        s = np.asarray(scatter_diag, dtype=float)
        if s.shape != (2,) or not (s > 0).all():
            raise ValueError("polar quadrature needs two positive variances")
        self.scatter_diag = s
        self.n_theta = n_theta
        self.n_gl = n_gl
        self.rho_max = rho_max
        self.theta = (np.arange(n_theta) + 0.5) * (2.0 * math.pi / n_theta)
        self.cos = np.cos(self.theta)
        self.sin = np.sin(self.theta)
        # quadratic form x' Sigma^{-1} x along the unit ray at angle theta
        self.a = self.cos**2 / s[0] + self.sin**2 / s[1]
        self._norm = 1.0 / (2.0 * math.pi * math.sqrt(s[0] * s[1]))
        self._dtheta = 2.0 * math.pi / n_theta
        self._gl = leggauss(n_gl)

    def cdf(self, r):
        """P(||X|| <= r), vectorized over r."""
        r = np.asarray(r, dtype=float)
        rr = r[..., None] ** 2
        vals = -np.expm1(-0.5 * rr * self.a) / self.a
        return vals.sum(axis=-1) * (self._dtheta * self._norm)

    def nodes(self, breakpoints=()):
        """Nodes and weights, split at the given radii.

        Returns ``(x1, x2, r, w)``, each of shape (n_theta, n_nodes), with
        ``sum(w * h(x1, x2))`` approximating E[h(X)].
        """
        sqa = np.sqrt(self.a)[:, None]
        knots = [0.0]
        for b in sorted(float(b) for b in breakpoints):
            if b > 0.0 and math.isfinite(b):
                knots.append(b)
        inner = np.asarray(knots)[None, :] * sqa
        # tail piece out to rho_max, where the Gaussian factor is negligible
        rho_knots = np.concatenate([inner, np.maximum(self.rho_max, inner[:, -1:])], axis=1)
        t, wt = self._gl
        lo = rho_knots[:, :-1, None]
        hi = rho_knots[:, 1:, None]
        half = 0.5 * (hi - lo)
        rho = (half * t + (hi + lo) * 0.5).reshape(self.n_theta, -1)
        wrho = (half * wt).reshape(self.n_theta, -1)
        ainv = 1.0 / self.a[:, None]
        r = rho * np.sqrt(ainv)
        w = wrho * np.exp(-0.5 * rho**2) * rho * ainv * (self._dtheta * self._norm)
        x1 = r * self.cos[:, None]
        x2 = r * self.sin[:, None]
        return x1, x2, r, w

    @cached_property
    def plain_nodes(self):
        return self.nodes(())


def hermite_rule(scatter_diag, n: int = 200):
    """Tensorized Gauss-Hermite nodes for N(0, diag(s)); returns (points, weights)."""
    s = np.asarray(scatter_diag, dtype=float)
    t, w = hermgauss(n)
    axes = [t * math.sqrt(2.0 * si) for si in s]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = w / math.sqrt(math.pi)
    W = wts
    for _ in range(len(s) - 1):
        W = np.multiply.outer(W, wts)
    return pts, W.ravel()


def distance_cdf(r, scatter_diag, n_theta: int = 512):
    return PolarRule(scatter_diag, n_theta=n_theta).cdf(r)


def _bracket(f, target, start):
    hi = start
    while f(hi) < target:
        hi *= 2.0
    return hi


def distance_quantile(prob: float, scatter_diag=None, rule: PolarRule | None = None) -> float:
    """Quantile of ||X|| by root finding on the quadrature CDF."""
    if rule is None:
        rule = PolarRule(scatter_diag)
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie in (0, 1)")
    hi = _bracket(rule.cdf, prob, math.sqrt(rule.scatter_diag.sum()))
    return optimize.brentq(lambda r: rule.cdf(r) - prob, 0.0, hi, xtol=_XTOL, rtol=1e-15)


def population_cutoffs(
    scatter_diag=None, rule: PolarRule | None = None, point=None, eps: float = 0.0
) -> Cutoffs:
    """Cutoffs of the distance distribution of (1 - eps) N(0, diag(s)) + eps * delta_point.

    Population analogue of ``estimate_cutoffs``: q2 is the median of ||X||;
    the median and raw MAD of ||X||^(2/3) give q1, q3 and q3star.
    """
    if rule is None:
        rule = PolarRule(scatter_diag)
    if point is None or eps == 0.0:
        rx = None
        eps = 0.0
    else:
        rx = float(np.linalg.norm(point))

    def cdf(r):
        val = (1.0 - eps) * rule.cdf(r)
        if rx is not None and rx <= r:
            val += eps
        return float(val)

    hi = _bracket(cdf, 0.5, math.sqrt(rule.scatter_diag.sum()))
    q2 = optimize.brentq(lambda r: cdf(r) - 0.5, 0.0, hi, xtol=_XTOL, rtol=1e-15)
    mu = q2 ** (2.0 / 3.0)
    ux = rx ** (2.0 / 3.0) if rx is not None else None

    def inner_mass(s):
        lo = max(0.0, mu - s) ** 1.5
        up = (mu + s) ** 1.5
        val = (1.0 - eps) * (rule.cdf(up) - rule.cdf(lo))
        if ux is not None and abs(ux - mu) <= s:
            val += eps
        return float(val) - 0.5

    s_hi = mu
    while inner_mass(s_hi) < 0:
        s_hi *= 2.0
    mad_u = optimize.brentq(inner_mass, 0.0, s_hi, xtol=_XTOL, rtol=1e-15)
    return cutoffs_from_location_scale(q2, mu, mad_u)
