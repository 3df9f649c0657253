"""Radial weight functions and the median/MAD based distance cutoffs."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._kernels import distance_summary, radial_weights

__all__ = [
    "MAD_FACTOR",
    "RadialKind",
    "Cutoffs",
    "estimate_cutoffs",
    "weight",
    "BOUNDED_KINDS",
]

# consistency factor of the MAD at the normal, 1 / Phi^{-1}(3/4) rounded
MAD_FACTOR = 1.4826


class RadialKind(str, enum.Enum):
    IDENTITY = "identity"
    SSCM = "sscm"
    WINSOR = "winsor"
    QUAD = "quad"
    BALL = "ball"
    SHELL = "shell"
    LR = "lr"

    @classmethod
    def parse(cls, value) -> "RadialKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"spatialsign": "sscm", "spatial_sign": "sscm", "classical": "identity"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown radial function {value!r}; choose from {choices}") from None

    @property
    def needs_cutoffs(self) -> bool:
        return self not in (RadialKind.IDENTITY, RadialKind.SSCM)

    def __str__(self) -> str:
        return self.value


# radial functions with values in [0, 1] and cutoff-bounded ||g||
BOUNDED_KINDS = (
    RadialKind.WINSOR,
    RadialKind.QUAD,
    RadialKind.BALL,
    RadialKind.SHELL,
    RadialKind.LR,
)


_CODES = {kind: code for code, kind in enumerate(RadialKind)}


@dataclass(frozen=True)
class Cutoffs:
    q1: float
    q2: float
    q3: float
    q3star: float

    def as_tuple(self):
        return (self.q1, self.q2, self.q3, self.q3star)


def cutoffs_from_location_scale(med_d: float, med_u: float, mad_u: float) -> Cutoffs:
    """Assemble cutoffs from med(d), med(d^(2/3)) and the raw MAD of d^(2/3)."""
    return Cutoffs(
        q1=max(0.0, med_u - mad_u) ** 1.5,
        q2=float(med_d),
        q3=(med_u + mad_u) ** 1.5,
        q3star=(med_u + MAD_FACTOR * mad_u) ** 1.5,
    )


def estimate_cutoffs(distances) -> Cutoffs:
    """Robust quartile estimates of a sample of distances.

    With ``u = d**(2/3)``, ``med`` the median and ``mad`` the raw median
    absolute deviation (no consistency factor)::

        q1     = max(0, med(u) - mad(u)) ** 1.5
        q2     = med(d)
        q3     = (med(u) + mad(u)) ** 1.5
        q3star = (med(u) + 1.4826 * mad(u)) ** 1.5
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise ValueError("need at least two distances")
    if not np.isfinite(d).all() or (d < 0).any():
        raise ValueError("distances must be finite and nonnegative")
    med_d, med_u, mad_u = distance_summary(np.ascontiguousarray(d))
    return cutoffs_from_location_scale(float(med_d), float(med_u), float(mad_u))


def weight(kind, r, c: Cutoffs | None = None):
    """Evaluate the radial function xi(r).

    ``r`` may be a scalar or an array. For the spatial sign the weight at
    ``r == 0`` is returned as 0 so that ``g(0) = 0``.
    """
    kind = RadialKind.parse(kind)
    r_arr = np.asarray(r, dtype=float)
    scalar = r_arr.ndim == 0
    if kind.needs_cutoffs:
        if c is None:
            raise ValueError(f"radial function {kind} requires cutoffs")
        q = c.as_tuple()
    else:
        q = (0.0, 0.0, 0.0, 0.0)
    out = radial_weights(_CODES[kind], np.ascontiguousarray(r_arr.ravel()), *q)
    return float(out[0]) if scalar else out.reshape(r_arr.shape)
