"""Monte Carlo harness: contaminated scenarios, the maxsub measure, timing and breakdown."""

from __future__ import annotations

import csv
import itertools
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataio import DataMatrix, format_float
from .gsscm import sample_gsscm
from .location import DEFAULT_LTS_STEPS, kstep_lts
from .pca import fit, fit_classical
from .radial import MAD_FACTOR, RadialKind

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ScenarioSpec",
    "MaxsubResult",
    "TimingTable",
    "BreakdownCurve",
    "DEFAULT_METHODS",
    "highdim_sigma",
    "generate",
    "maxsub",
    "run_experiment",
    "benchmark_timing",
    "loglog_slope",
    "empirical_breakdown",
    "resolve_workers",
    "load_config",
    "write_results_csv",
    "results_summary",
]

DEFAULT_METHODS = ("cpca", "sscm", "winsor", "quad", "ball", "shell", "lr")
_GRID_KEYS = ("family", "df", "n", "epsilon", "f1", "f2", "seed")


def highdim_sigma(p: int = 100) -> tuple:
    """Diagonal scatter of the high-dimensional scenario.

    Starts with (17, 13.5, 8, 3, 1); entries 6 to p - 1 decrease
    geometrically from 0.095 to 0.002 and the last entry is 0.001.
    """
    head = [17.0, 13.5, 8.0, 3.0, 1.0]
    if p < 7:
        raise ValueError("the high-dimensional scatter needs p >= 7")
    middle = np.geomspace(0.095, 0.002, p - 6)
    return tuple(head + [float(v) for v in middle] + [0.001])


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the simulation grid.

    Clean rows follow N_p(0, diag(sigma_diag)) (or the multivariate t with
    ``df`` degrees of freedom and that scatter); a fraction ``epsilon`` of
    the rows comes from the same family centered at ``f1 * e_shift_axis``
    with scatter ``diag(sigma_diag) / f2``. ``shift_axis`` is 1-based.
    """

    family: str = "gaussian"
    df: Optional[float] = None
    n: int = 100
    p: int = 4
    sigma_diag: tuple = (8.0, 4.0, 2.0, 1.0)
    epsilon: float = 0.0
    f1: float = 0.0
    f2: float = 1.0
    shift_axis: Optional[int] = None
    k: int = 3
    reps: int = 500
    seed: int = 0
    location_k: int = DEFAULT_LTS_STEPS

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigma_diag)
        object.__setattr__(self, "sigma_diag", sig)
        if self.family not in ("gaussian", "student_t"):
            raise ValueError(f"unknown family {self.family!r}; use 'gaussian' or 'student_t'")
        if self.family == "student_t":
            if self.df is None or not self.df > 0:
                raise ValueError("student_t scenarios need a positive df")
            object.__setattr__(self, "df", float(self.df))
        else:
            object.__setattr__(self, "df", None)
        if len(sig) != self.p or any(s <= 0 for s in sig):
            raise ValueError(f"sigma_diag must hold p={self.p} positive values")
        if self.n < 2 or not 1 <= self.k <= min(self.n, self.p):
            raise ValueError("need n >= 2 and 1 <= k <= min(n, p)")
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 0.5)")
        if not self.f2 > 0:
            raise ValueError("f2 must be positive")
        axis = self.k + 1 if self.shift_axis is None else int(self.shift_axis)
        if not 1 <= axis <= self.p:
            raise ValueError(f"shift_axis must lie in [1, p={self.p}]")
        object.__setattr__(self, "shift_axis", axis)
        if self.reps < 1:
            raise ValueError("reps must be positive")

    @classmethod
    def lowdim(cls, **overrides) -> "ScenarioSpec":
        """n=100, p=4, diag(8, 4, 2, 1), k=3, shift along e_4."""
        base = dict(n=100, p=4, sigma_diag=(8.0, 4.0, 2.0, 1.0), k=3)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def highdim(cls, **overrides) -> "ScenarioSpec":
        """n=50, p=100, k=5, shift along e_6."""
        p = overrides.pop("p", 100)
        base = dict(n=50, p=p, sigma_diag=highdim_sigma(p), k=5)
        base.update(overrides)
        return cls(**base)

    @property
    def n_contaminated(self) -> int:
        # round half up
        return int(math.floor(self.epsilon * self.n + 0.5))

    def label(self) -> str:
        fam = "normal" if self.family == "gaussian" else f"t{self.df:g}"
        return f"{fam}_n{self.n}_p{self.p}_eps{self.epsilon:g}_f1{self.f1:g}_f2{self.f2:g}"


def _rng(seed: int, rep_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(rep_index)])


def _draw(rng, spec, size, mean, scale_sd):
    z = rng.standard_normal((size, spec.p)) * scale_sd
    if spec.family == "student_t":
        w = rng.chisquare(spec.df, size) / spec.df
        z = z / np.sqrt(w)[:, None]
    return z + mean


def generate(spec: ScenarioSpec, rep_index: int) -> DataMatrix:
    """Draw the data of one replication; deterministic in (spec.seed, rep_index)."""
    rng = _rng(spec.seed, rep_index)
    m = spec.n_contaminated
    sd = np.sqrt(np.asarray(spec.sigma_diag))
    clean = _draw(rng, spec, spec.n - m, 0.0, sd)
    shift = np.zeros(spec.p)
    shift[spec.shift_axis - 1] = spec.f1
    outl = _draw(rng, spec, m, shift, sd / math.sqrt(spec.f2))
    X = np.vstack([clean, outl])[rng.permutation(spec.n)]
    return DataMatrix(X)


def maxsub(V, k: Optional[int] = None) -> float:
    """Largest principal angle between span(V[:, :k]) and span(e_1..e_k), scaled to [0, 1]."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise ValueError("V must be a p x k matrix")
    k = V.shape[1] if k is None else int(k)
    if not 1 <= k <= min(V.shape):
        raise ValueError("k must lie in [1, number of columns]")
    top = V[:k, :k]
    lam = float(np.linalg.eigvalsh(top @ top.T)[0])
    lam = min(max(lam, 0.0), 1.0)
    return math.acos(math.sqrt(lam)) / (math.pi / 2.0)


def _method_fit(method: str, X, k, location_k):
    if method == "cpca":
        return fit_classical(X, k=k)
    return fit(X, RadialKind.parse(method), k=k, location_k=location_k)


def _check_methods(methods):
    out = []
    for m in methods:
        m = str(m).strip().lower()
        if m != "cpca":
            m = RadialKind.parse(m).value
        out.append(m)
    return tuple(out)


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count: the argument, else GSPCA_THREADS, else 1; capped by GSPCA_THREADS."""
    env = os.environ.get("GSPCA_THREADS")
    cap = None
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ValueError(f"GSPCA_THREADS must be a positive integer, got {env!r}") from None
    n = workers if workers is not None else (cap or 1)
    n = max(1, int(n))
    return min(n, cap) if cap else n


def _replicate(args):
    spec, methods, reps = args
    vals = np.empty((len(reps), len(methods)))
    times = np.empty_like(vals)
    for a, rep in enumerate(reps):
        X = generate(spec, rep).values
        for b, method in enumerate(methods):
            t0 = time.perf_counter()
            model = _method_fit(method, X, spec.k, spec.location_k)
            times[a, b] = time.perf_counter() - t0
            vals[a, b] = maxsub(model.loadings, spec.k)
    return vals, times


@dataclass(frozen=True)
class MaxsubResult:
    """Per-replication maxsub values and fit times (reps x methods)."""

    spec: ScenarioSpec
    methods: tuple
    values: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)

    @property
    def mean(self) -> dict:
        return {m: float(v) for m, v in zip(self.methods, self.values.mean(axis=0))}

    @property
    def se(self) -> dict:
        reps = self.values.shape[0]
        if reps < 2:
            return {m: float("nan") for m in self.methods}
        sd = self.values.std(axis=0, ddof=1)
        return {m: float(v) for m, v in zip(self.methods, sd / math.sqrt(reps))}

    @property
    def total_time(self) -> dict:
        return {m: float(v) for m, v in zip(self.methods, self.times.sum(axis=0))}

    def rows(self) -> list:
        """One dict per method; wall-times are left out so reruns match byte for byte."""
        mean, se = self.mean, self.se
        base = {
            "scenario": self.spec.label(),
            "family": self.spec.family,
            "df": "" if self.spec.df is None else self.spec.df,
            "n": self.spec.n,
            "p": self.spec.p,
            "k": self.spec.k,
            "epsilon": self.spec.epsilon,
            "f1": self.spec.f1,
            "f2": self.spec.f2,
            "reps": self.spec.reps,
            "seed": self.spec.seed,
        }
        return [
            dict(base, method=m, mean_maxsub=mean[m], se=se[m])
            for m in self.methods
        ]


def run_experiment(
    spec: ScenarioSpec, methods: Sequence[str] = DEFAULT_METHODS, workers: Optional[int] = None
) -> MaxsubResult:
    """Mean maxsub over ``spec.reps`` replications for each method.

    Each replication draws from its own generator seeded by
    ``(spec.seed, rep_index)`` and results are stored by replication
    index, so the means do not depend on the number of workers.
    """
    methods = _check_methods(methods)
    workers = resolve_workers(workers)
    reps = list(range(spec.reps))
    if workers == 1:
        vals, times = _replicate((spec, methods, reps))
    else:
        chunks = [reps[i::workers] for i in range(workers)]
        vals = np.empty((spec.reps, len(methods)))
        times = np.empty_like(vals)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for idx, (v, t) in zip(chunks, pool.map(_replicate, [(spec, methods, c) for c in chunks])):
                vals[idx] = v
                times[idx] = t
    return MaxsubResult(spec, methods, vals, times)


@dataclass(frozen=True)
class TimingTable:
    """Total fit seconds over ``runs`` data sets, per method (rows follow ``n_grid``)."""

    n_grid: tuple
    methods: tuple
    seconds: np.ndarray
    runs: int

    def ratio(self, method: str, baseline: str = "cpca") -> np.ndarray:
        return self.seconds[:, self.methods.index(method)] / self.seconds[:, self.methods.index(baseline)]

    def rows(self) -> list:
        return [
            dict(n=n, method=m, total_seconds=float(self.seconds[i, j]), runs=self.runs)
            for i, n in enumerate(self.n_grid)
            for j, m in enumerate(self.methods)
        ]


def benchmark_timing(
    family: str = "lowdim",
    n_grid: Sequence[int] = tuple(range(50, 501, 50)),
    methods: Sequence[str] = ("cpca", "ball", "lr"),
    runs: int = 100,
    seed: int = 0,
    repeats: int = 3,
) -> TimingTable:
    """Wall-clock totals of ``runs`` fits per method and sample size.

    ``family`` is ``"lowdim"`` or ``"highdim"`` (uncontaminated normal
    data). Methods are timed interleaved on the same data sets, and the
    smallest total over ``repeats`` passes is kept to damp scheduler noise.
    """
    methods = _check_methods(methods)
    factory = {"lowdim": ScenarioSpec.lowdim, "highdim": ScenarioSpec.highdim}.get(family)
    if factory is None:
        raise ValueError("family must be 'lowdim' or 'highdim'")
    seconds = np.empty((len(n_grid), len(methods)))
    for i, n in enumerate(n_grid):
        spec = factory(n=int(n), reps=runs, seed=seed)
        data = [generate(spec, r).values for r in range(runs)]
        for X in data[:2]:
            for method in methods:
                _method_fit(method, X, spec.k, spec.location_k)  # warm caches
        best = np.full(len(methods), np.inf)
        for _ in range(repeats):
            total = np.zeros(len(methods))
            for X in data:
                for j, method in enumerate(methods):
                    t0 = time.perf_counter()
                    _method_fit(method, X, spec.k, spec.location_k)
                    total[j] += time.perf_counter() - t0
            best = np.minimum(best, total)
        seconds[i] = best
    return TimingTable(tuple(int(n) for n in n_grid), methods, seconds, runs)


def loglog_slope(n_grid, seconds) -> float:
    """Least-squares slope of log(seconds) on log(n)."""
    return float(np.polyfit(np.log(np.asarray(n_grid, float)), np.log(np.asarray(seconds, float)), 1)[0])


@dataclass(frozen=True)
class BreakdownCurve:
    """Largest GSSCM eigenvalue as the replaced rows move outward."""

    kind: RadialKind
    m: int
    n: int
    magnitudes: np.ndarray
    lambda_max: np.ndarray
    trace: np.ndarray
    location_shift: np.ndarray
    c1: float

    @property
    def bounded_limit(self) -> np.ndarray:
        """(2.4826 (c1 + c2))^2 with c2 the measured location shift."""
        return ((1.0 + MAD_FACTOR) * (self.c1 + self.location_shift)) ** 2

    @property
    def explosion_floor(self) -> np.ndarray:
        """lambda^2 / (2 n)."""
        return self.magnitudes**2 / (2.0 * self.n)

    def rows(self) -> list:
        return [
            dict(magnitude=float(a), lambda_max=float(b), trace=float(c), location_shift=float(d))
            for a, b, c, d in zip(self.magnitudes, self.lambda_max, self.trace, self.location_shift)
        ]


def _outlier_directions(rng, m, p, radius):
    # random unit directions, scaled so that all pairs are >= 1 apart and
    # every point lies more than radius + 1 from the clean mean
    u = rng.standard_normal((m, p))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    scale = 1.0 + radius
    if m > 1:
        d = np.linalg.norm(u[:, None, :] - u[None, :, :], axis=-1)
        closest = d[np.triu_indices(m, 1)].min()
        if closest <= 0:
            raise ValueError("degenerate outlier directions")
        scale = max(scale, 1.0 / closest)
    return u * scale


def empirical_breakdown(
    X,
    kind,
    m: int,
    magnitudes: Sequence[float] = tuple(10.0 ** np.arange(2, 9)),
    seed: int = 0,
    location_k: int = DEFAULT_LTS_STEPS,
) -> BreakdownCurve:
    """Replace the last ``m`` rows by far, well separated points and track lambda_max.

    At magnitude ``lam`` the replaced rows are ``xbar + lam * a_j`` with
    ``xbar`` the mean of the kept rows and ``a_j`` random directions scaled
    so that ``||a_i - a_j|| >= 1`` and ``||a_j|| >= 1 + max_i ||x_i - xbar||``.
    """
    kind = RadialKind.parse(kind)
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if not 0 <= m <= n:
        raise ValueError("m must lie in [0, n]")
    center0 = kstep_lts(X, location_k).center
    c1 = float(np.max(np.linalg.norm(X - center0, axis=1)))
    keep = X[: n - m]
    xbar = keep.mean(axis=0) if n - m else np.zeros(p)
    radius = float(np.max(np.linalg.norm(keep - xbar, axis=1))) if n - m else 0.0
    a = _outlier_directions(np.random.default_rng(seed), m, p, radius) if m else np.zeros((0, p))
    mags = np.asarray(magnitudes, dtype=float)
    lam_max = np.empty(mags.size)
    trace = np.empty(mags.size)
    shift = np.empty(mags.size)
    for i, lam in enumerate(mags):
        Xs = np.vstack([keep, xbar + lam * a])
        S = sample_gsscm(Xs, kind, location_k)
        ev = np.linalg.eigvalsh(S.values)
        lam_max[i] = ev[-1]
        trace[i] = np.trace(S.values)
        shift[i] = np.linalg.norm(S.center - center0)
    return BreakdownCurve(kind, m, n, mags, lam_max, trace, shift, c1)


def load_config(path) -> tuple:
    """Read a TOML scenario grid; returns (list of ScenarioSpec, methods, workers).

    See the README for the schema. Keys in ``_GRID_KEYS`` may be lists and
    expand to the Cartesian product of their values.
    """
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    scen = dict(cfg.get("scenario", {}))
    run = dict(cfg.get("run", {}))
    preset = scen.pop("preset", "lowdim")
    factory = {"lowdim": ScenarioSpec.lowdim, "highdim": ScenarioSpec.highdim, "custom": ScenarioSpec}.get(preset)
    if factory is None:
        raise ValueError(f"unknown preset {preset!r}; use lowdim, highdim or custom")
    unknown = set(scen) - {f for f in ScenarioSpec.__dataclass_fields__}
    if unknown:
        raise ValueError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    if "sigma_diag" in scen:
        scen["sigma_diag"] = tuple(scen["sigma_diag"])
    grid = {k: scen.pop(k) for k in _GRID_KEYS if isinstance(scen.get(k), list)}
    specs = []
    for combo in itertools.product(*grid.values()):
        specs.append(factory(**dict(scen, **dict(zip(grid.keys(), combo)))))
    methods = _check_methods(run.get("methods", DEFAULT_METHODS))
    return specs, methods, run.get("workers")


_CSV_FIELDS = (
    "scenario", "family", "df", "n", "p", "k", "epsilon", "f1", "f2",
    "reps", "seed", "method", "mean_maxsub", "se",
)


def write_results_csv(path, results: Sequence[MaxsubResult]):
    """One row per method and scenario cell."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
        writer.writeheader()
        for res in results:
            for row in res.rows():
                writer.writerow({k: (format_float(v) if isinstance(v, float) else v) for k, v in row.items()})


def results_summary(results: Sequence[MaxsubResult]) -> dict:
    """JSON-serializable summary (wall-times excluded so reruns compare equal)."""
    cells = []
    for res in results:
        spec = asdict(res.spec)
        spec["sigma_diag"] = list(res.spec.sigma_diag)
        cells.append({"scenario": res.spec.label(), "spec": spec, "mean": res.mean, "se": res.se})
    return {"format": "gspca-maxsub/1", "cells": cells}

