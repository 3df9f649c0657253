"""Generalized spherical principal component analysis."""

from .dataio import DataError, DataMatrix, load_csv, save_csv, standardize
from .gsscm import EllipticalSpec, ScatterMatrix, g_transform, population_gsscm, sample_gsscm
from .location import LocationEstimate, kstep_lts, spatial_median
from .pca import (
    DegenerateDataError,
    DiagnosticReport,
    PcaModel,
    combined_covariance,
    correct_eigenvalues,
    diagnose,
    fit,
    fit_classical,
    mad,
    reconstruct,
    residuals,
    scores,
)
from .radial import Cutoffs, RadialKind, estimate_cutoffs, weight

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DataMatrix",
    "load_csv",
    "save_csv",
    "standardize",
    "EllipticalSpec",
    "ScatterMatrix",
    "g_transform",
    "population_gsscm",
    "sample_gsscm",
    "LocationEstimate",
    "kstep_lts",
    "spatial_median",
    "DegenerateDataError",
    "DiagnosticReport",
    "PcaModel",
    "combined_covariance",
    "correct_eigenvalues",
    "diagnose",
    "fit",
    "fit_classical",
    "mad",
    "reconstruct",
    "residuals",
    "scores",
    "Cutoffs",
    "RadialKind",
    "estimate_cutoffs",
    "weight",
]
