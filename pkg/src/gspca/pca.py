"""Generalized spherical PCA models and their diagnostics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats
from scipy.sparse.linalg import svds

from ._kernels import column_mad, row_norms
from .location import DEFAULT_LTS_STEPS, kstep_lts
from .radial import MAD_FACTOR, Cutoffs, RadialKind, estimate_cutoffs, weight

__all__ = [
    "DegenerateDataError",
    "PcaModel",
    "DiagnosticReport",
    "ResidualReport",
    "fit",
    "fit_classical",
    "mad",
    "correct_eigenvalues",
    "combined_covariance",
    "scores",
    "diagnose",
    "reconstruct",
    "residuals",
    "CLASS_LABELS",
]

PATHS = ("spectral", "svd", "truncated_svd")
CLASS_LABELS = ("regular", "good_leverage", "orthogonal_outlier", "bad_leverage")


class DegenerateDataError(ValueError):
    """The data carry no spread after centering (e.g. all rows equal)."""


@dataclass(frozen=True)
class PcaModel:
    """A fitted principal component model.

    ``loadings`` is p x k with orthonormal columns; each column is signed so
    that its entry of largest magnitude is positive. ``eigenvalues_raw`` are
    the scatter eigenvalues (descending) and ``eigenvalues_corrected`` the
    squared robust scales of the projected data.
    """

    center: np.ndarray
    loadings: np.ndarray
    eigenvalues_raw: np.ndarray
    eigenvalues_corrected: np.ndarray
    kind: RadialKind
    k: int
    cutoffs: Optional[Cutoffs] = None
    classical: bool = False

    @property
    def p(self) -> int:
        return self.loadings.shape[0]

    def to_dict(self) -> dict:
        out = {
            "format": "gspca-model/1",
            "kind": self.kind.value,
            "classical": self.classical,
            "p": self.p,
            "k": self.k,
            "center": self.center.tolist(),
            # column-major: one list of p entries per component
            "loadings": self.loadings.T.tolist(),
            "eigenvalues_raw": self.eigenvalues_raw.tolist(),
            "eigenvalues_corrected": self.eigenvalues_corrected.tolist(),
            "cutoffs": None if self.cutoffs is None else list(self.cutoffs.as_tuple()),
        }
        return out

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        loadings = np.asarray(d["loadings"], dtype=float).T.reshape(d["p"], d["k"])
        cut = d.get("cutoffs")
        return cls(
            center=np.asarray(d["center"], dtype=float),
            loadings=loadings,
            eigenvalues_raw=np.asarray(d["eigenvalues_raw"], dtype=float),
            eigenvalues_corrected=np.asarray(d["eigenvalues_corrected"], dtype=float),
            kind=RadialKind.parse(d["kind"]),
            k=int(d["k"]),
            cutoffs=None if cut is None else Cutoffs(*cut),
            classical=bool(d.get("classical", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> "PcaModel":
        return cls.from_dict(json.loads(text))


def mad(sample, axis=None):
    """Median absolute deviation scaled by 1.4826 for consistency at the normal."""
    x = np.asarray(sample, dtype=float)
    med = np.median(x, axis=axis, keepdims=True)
    out = MAD_FACTOR * np.median(np.abs(x - med), axis=axis)
    return float(out) if np.ndim(out) == 0 else out


def _orient(V):
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _choose_rank(k, evals, total, min_np):
    if k is None:
        return min_np
    if isinstance(k, (bool, np.bool_)):
        raise TypeError("k must be an int rank or a float variance fraction")
    if isinstance(k, (int, np.integer)):
        if not 1 <= k <= min_np:
            raise ValueError(f"rank k={k} must lie in [1, min(n, p)] = [1, {min_np}]")
        return int(k)
    target = float(k)
    if not 0.0 < target <= 1.0:
        raise ValueError("variance fraction must lie in (0, 1]")
    frac = np.cumsum(evals) / total
    hit = np.flatnonzero(frac >= target * (1.0 - 1e-12))
    return int(min(hit[0] + 1 if hit.size else min_np, min_np))


def _spectrum(G, n, k, path):
    """Descending eigenvalues of G'G/n and their eigenvectors (columns)."""
    min_np = min(G.shape)
    if path == "spectral":
        evals, evecs = np.linalg.eigh(G.T @ G / n)
        evals, evecs = evals[::-1], evecs[:, ::-1]
        return np.clip(evals[:min_np], 0.0, None), evecs[:, :min_np]
    if path not in ("svd", "truncated_svd"):
        raise ValueError(f"unknown path {path!r}; choose from {', '.join(PATHS)}")
    partial = isinstance(k, (int, np.integer)) and not isinstance(k, bool) and k < min_np
    if path == "truncated_svd" and partial:
        v0 = np.ones(min_np) / np.sqrt(min_np)
        _, d, vt = svds(G, k=int(k), tol=0, v0=v0, solver="arpack")
        order = np.argsort(d)[::-1]
        return d[order] ** 2 / n, vt[order].T
    _, d, vt = np.linalg.svd(G, full_matrices=False)
    return d**2 / n, vt.T


def _finish(X, center, G, n, k, path, kind, cutoffs, classical):
    total = np.einsum("ij,ij->", G, G) / n
    if not total > 0:
        raise DegenerateDataError("all observations coincide with the center; nothing to decompose")
    evals, evecs = _spectrum(G, n, k, path)
    rank = _choose_rank(k, evals, total, min(X.shape))
    V = _orient(evecs[:, :rank])
    lam = evals[:rank]
    proj = (X - center) @ V
    if classical:
        corrected = proj.var(axis=0, ddof=1)
    else:
        corrected = (MAD_FACTOR * column_mad(np.ascontiguousarray(proj))) ** 2
    return PcaModel(center, V, lam, np.atleast_1d(corrected), kind, rank, cutoffs, classical)


def fit(
    X,
    kind="lr",
    k=None,
    path: str = "spectral",
    location_k: int = DEFAULT_LTS_STEPS,
) -> PcaModel:
    """Fit a generalized spherical PCA model.

    Parameters
    ----------
    X : (n, p) array_like
    kind : RadialKind or str
        Radial function; ``identity`` gives PCA of the covariance about the
        robust center, ``sscm`` spherical PCA.
    k : int, float or None
        An int is a rank in [1, min(n, p)]; a float in (0, 1] selects the
        smallest rank whose raw eigenvalues explain that fraction of the
        trace; None keeps min(n, p) components.
    path : {"spectral", "svd", "truncated_svd"}
        Eigendecomposition of the scatter matrix, SVD of g(X), or a partial
        SVD of g(X) computing only the leading k singular triplets. The
        truncated path needs an integer k and falls back to a full SVD
        otherwise.
    location_k : int
        Number of LTS refinement steps after the spatial median.
    """
    kind = RadialKind.parse(kind)
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an n x p matrix with n >= 2")
    n = X.shape[0]
    center = kstep_lts(X, location_k).center
    diff = X - center
    cutoffs = None
    if kind is RadialKind.IDENTITY:
        G = diff
    else:
        d = row_norms(X, center)
        if kind.needs_cutoffs:
            cutoffs = estimate_cutoffs(d)
        G = diff * weight(kind, d, cutoffs)[:, None]
    return _finish(X, center, G, n, k, path, kind, cutoffs, classical=False)


def fit_classical(X, k=None, path: str = "spectral") -> PcaModel:
    """Classical PCA: mean center, sample covariance (denominator n - 1)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an n x p matrix with n >= 2")
    center = X.mean(axis=0)
    G = X - center
    return _finish(X, center, G, X.shape[0] - 1, k, path, RadialKind.IDENTITY, None, classical=True)


def _matrix(X, model):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.p:
        raise ValueError(f"data have {X.shape[1]} columns, model expects {model.p}")
    return X


def correct_eigenvalues(model: PcaModel, X) -> np.ndarray:
    """Squared MAD of the data projected on each retained loading."""
    X = _matrix(X, model)
    return mad((X - model.center) @ model.loadings, axis=0) ** 2


def combined_covariance(model: PcaModel, X=None) -> np.ndarray:
    """sum_j lambda_S,j v_j v_j' from a full-rank model.

    When ``X`` is given the corrected eigenvalues are recomputed from it.
    """
    if model.k != model.p:
        raise ValueError(f"combined covariance needs a full-rank model (k={model.k}, p={model.p})")
    lam = model.eigenvalues_corrected if X is None else correct_eigenvalues(model, X)
    V = model.loadings
    S = (V * lam) @ V.T
    return 0.5 * (S + S.T)


def scores(model: PcaModel, X) -> np.ndarray:
    X = _matrix(X, model)
    return (X - model.center) @ model.loadings


@dataclass(frozen=True)
class DiagnosticReport:
    score_distance: np.ndarray
    orthogonal_distance: np.ndarray
    sd_cutoff: float
    od_cutoff: float
    labels: tuple

    def counts(self) -> dict:
        return {c: self.labels.count(c) for c in CLASS_LABELS}


def _classify(sd_out, od_out):
    names = np.array(CLASS_LABELS, dtype=object)
    return tuple(names[sd_out.astype(int) + 2 * od_out.astype(int)])


def diagnose(model: PcaModel, X, quantile: float = 0.975) -> DiagnosticReport:
    """Score and orthogonal distances with outlier classes.

    The score-distance cutoff is sqrt of the chi-square(k) quantile. The
    orthogonal-distance cutoff is ``(m + s * z) ** 1.5`` where ``m`` and
    ``s`` are the median and 1.4826 * raw MAD of OD ** (2/3) and ``z`` the
    standard normal quantile.
    """
    X = _matrix(X, model)
    lam = model.eigenvalues_corrected
    if np.any(lam <= 0):
        raise ValueError("a retained component has zero corrected eigenvalue")
    diff = X - model.center
    t = diff @ model.loadings
    sd = np.sqrt(np.sum(t * t / lam, axis=1))
    sd_cut = float(np.sqrt(stats.chi2.ppf(quantile, model.k)))
    if model.k == model.p:
        od = np.zeros(X.shape[0])
        od_cut = 0.0
    else:
        resid = diff - t @ model.loadings.T
        od = np.sqrt(np.einsum("ij,ij->i", resid, resid))
        u = od ** (2.0 / 3.0)
        med = np.median(u)
        s = MAD_FACTOR * np.median(np.abs(u - med))
        od_cut = float((med + s * stats.norm.ppf(quantile)) ** 1.5)
    labels = _classify(sd > sd_cut, od > od_cut)
    return DiagnosticReport(sd, od, sd_cut, od_cut, labels)


def reconstruct(model: PcaModel, X) -> np.ndarray:
    """(X - 1 T') V V' + 1 T'."""
    X = _matrix(X, model)
    V = model.loadings
    return (X - model.center) @ V @ V.T + model.center


class ResidualReport(NamedTuple):
    raw: np.ndarray
    standardized: np.ndarray
    zero_scale: np.ndarray


def residuals(model: PcaModel, X, scaling: str = "robust") -> ResidualReport:
    """Residuals X - X_hat, standardized within each row.

    ``classical`` uses row mean and standard deviation, ``robust`` row
    median and MAD. Rows with zero scale come back as zeros and are flagged
    in ``zero_scale``.
    """
    X = _matrix(X, model)
    r = X - reconstruct(model, X)
    if scaling == "classical":
        loc = r.mean(axis=1, keepdims=True)
        scale = r.std(axis=1, ddof=1, keepdims=True) if r.shape[1] > 1 else np.zeros((r.shape[0], 1))
    elif scaling == "robust":
        loc = np.median(r, axis=1, keepdims=True)
        scale = MAD_FACTOR * np.median(np.abs(r - loc), axis=1, keepdims=True)
    else:
        raise ValueError(f"unknown scaling {scaling!r}")
    # treat scales at rounding level as zero
    tiny = 1e-12 * max(1.0, float(np.max(np.abs(X))))
    zero = scale[:, 0] <= tiny
    z = np.zeros_like(r)
    ok = ~zero
    z[ok] = (r[ok] - loc[ok]) / scale[ok]
    return ResidualReport(r, z, zero)
