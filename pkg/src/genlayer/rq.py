"""Rate-quality estimation with per-prompt-size prediction intervals.

Each grid prompt size is modelled as an independent Gaussian quality: the
estimate keeps a sample mean and an unbiased residual variance per grid point
(``k = 1`` unknown parameter per point). A saturating curve
``Q = a (1 - exp(-b L)) + c`` is fitted to the grid means and used only to
interpolate or extrapolate between grid points, never for the bands.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import (
    BelowGrid,
    EmptyInput,
    GridMismatch,
    InsufficientSamples,
    NonFiniteQuality,
)

SCHEMA = "genlayer.rq-estimate/1"
SITES = ("source", "node", "destination")
GRID_TOL = 1e-9


@dataclass(frozen=True)
class QualitySample:
    data_point_id: int
    L_p: float
    quality: float
    site: str = "source"


@dataclass(frozen=True)
class PredictionBand:
    L_p: float
    mean: float
    lower: float
    upper: float
    alpha: float
    dof: float
    quantile: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class RQEstimate:
    grid: tuple
    counts: tuple
    means: tuple
    variances: tuple
    weight_sq: tuple
    k: int = 1
    curve: tuple = (0.0, 1.0, 0.0)
    sse: float = 0.0

    def __post_init__(self):
        g = self.grid
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ValueError("grid must be strictly increasing")
        n = len(g)
        if not (len(self.counts) == len(self.means) == len(self.variances) == len(self.weight_sq) == n):
            raise ValueError("per-grid-point arrays must match the grid length")
        if any(c <= 0 for c in self.counts) or any(v < 0 for v in self.variances):
            raise ValueError("counts must be positive and variances non-negative")

    @property
    def N_p(self) -> int:
        return len(self.grid)

    @property
    def L_avg(self) -> float:
        return float(np.mean(self.grid))

    def index(self, L_p: float) -> int:
        for i, g in enumerate(self.grid):
            if abs(g - L_p) <= GRID_TOL * max(1.0, abs(g)):
                return i
        raise GridMismatch(f"{L_p} is not a grid prompt size {self.grid}")

    def curve_value(self, L_p):
        a, b, c = self.curve
        return a * (1.0 - np.exp(-b * np.asarray(L_p, dtype=float))) + c

    # -- serialization
    def to_dict(self) -> dict:
        a, b, c = self.curve
        return {
            "schema": SCHEMA,
            "grid": list(self.grid),
            "counts": list(self.counts),
            "weight_sq": list(self.weight_sq),
            "means": list(self.means),
            "variances": list(self.variances),
            "k": self.k,
            "curve": {"family": "a*(1-exp(-b*L))+c", "a": a, "b": b, "c": c, "sse": self.sse},
            "conventions": {
                "band": "mean +- t_{1-alpha/2}(N_L-k) * sqrt(var) [* sqrt(1+1/N_L) when inflated]",
                "lower_bound": "mean - t_{alpha_star}(N_L-k) * sqrt(var) [* sqrt(1+1/N_L)]",
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RQEstimate":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unexpected schema {d.get('schema')!r}")
        cv = d["curve"]
        return cls(
            grid=tuple(float(x) for x in d["grid"]),
            counts=tuple(float(x) for x in d["counts"]),
            means=tuple(float(x) for x in d["means"]),
            variances=tuple(float(x) for x in d["variances"]),
            weight_sq=tuple(float(x) for x in d.get("weight_sq", d["counts"])),
            k=int(d.get("k", 1)),
            curve=(float(cv["a"]), float(cv["b"]), float(cv["c"])),
            sse=float(cv.get("sse", 0.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RQEstimate":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------- curve fit

def _lsq_ac(grid, means, b):
    basis = 1.0 - np.exp(-b * grid)
    X = np.column_stack([basis, np.ones_like(grid)])
    coef, *_ = np.linalg.lstsq(X, means, rcond=None)
    resid = means - X @ coef
    return float(coef[0]), float(coef[1]), float(resid @ resid)


def _golden(f, lo, hi, iters=60):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv * (hi - lo)
    x2 = lo + inv * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def fit_curve(grid: Sequence[float], means: Sequence[float]):
    """Least-squares ``(a, b, c, sse)`` for ``a (1 - exp(-b L)) + c``.

    Coarse log-spaced search over ``b`` with a closed-form solve for
    ``(a, c)``, then one golden-section pass around the best coarse point.
    """
    grid = np.asarray(grid, dtype=float)
    means = np.asarray(means, dtype=float)
    if grid.size == 1:
        return 0.0, 1.0, float(means[0]), 0.0
    if np.all(means == means[0]):
        return 0.0, 1.0, float(means[0]), 0.0
    scale = float(grid.max())
    log_bs = np.linspace(-3.0, 3.0, 241) - math.log10(scale)
    sses = [_lsq_ac(grid, means, 10.0 ** lb)[2] for lb in log_bs]
    i = int(np.argmin(sses))
    best_lb, best = log_bs[i], sses[i]
    lo, hi = log_bs[max(i - 1, 0)], log_bs[min(i + 1, len(log_bs) - 1)]
    lb, val = _golden(lambda t: _lsq_ac(grid, means, 10.0 ** t)[2], lo, hi)
    if val < best:
        best_lb = lb
    b = 10.0 ** best_lb
    a, c, sse = _lsq_ac(grid, means, b)
    return a, b, c, sse


# ---------------------------------------------------------------- fitting

def _point_stats(values):
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1) if n > 1 else 0.0
    return mean, var


def fit_rq(samples: Iterable[QualitySample], k: int = 1, grid=None) -> RQEstimate:
    by_L: dict = {}
    for s in samples:
        q = float(s.quality)
        if not math.isfinite(q) or not math.isfinite(s.L_p):
            raise NonFiniteQuality(f"non-finite sample at L_p={s.L_p}: {q}")
        by_L.setdefault(float(s.L_p), []).append(q)
    if not by_L:
        raise EmptyInput("no quality samples")
    if grid is None:
        grid = tuple(sorted(by_L))
    else:
        grid = tuple(float(g) for g in grid)
        extra = set(by_L) - set(grid)
        if extra:
            raise GridMismatch(f"samples off the grid: {sorted(extra)}")
        missing = [g for g in grid if g not in by_L]
        if missing:
            raise EmptyInput(f"no samples at grid points {missing}")
    means, variances, counts = [], [], []
    for g in grid:
        m, v = _point_stats(sorted(by_L[g]))
        means.append(m)
        variances.append(v)
        counts.append(float(len(by_L[g])))
    a, b, c, sse = fit_curve(grid, means)
    return RQEstimate(grid, tuple(counts), tuple(means), tuple(variances), tuple(counts),
                      k, (a, b, c), sse)


def fit_from_matrix(grid: Sequence[float], Q: np.ndarray, k: int = 1) -> RQEstimate:
    """Estimate from an ``(N_L, N_p)`` matrix, one row per data point."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] == 0:
        raise EmptyInput("need at least one row of samples")
    if not np.all(np.isfinite(Q)):
        raise NonFiniteQuality("non-finite quality in sample matrix")
    samples = [QualitySample(r, g, Q[r, j]) for r in range(Q.shape[0]) for j, g in enumerate(grid)]
    return fit_rq(samples, k=k, grid=grid)


# ---------------------------------------------------------------- bands

@lru_cache(maxsize=4096)
def t_quantile(p: float, dof: float) -> float:
    return float(stats.t.ppf(p, dof))


def _spread(est: RQEstimate, i: int, inflate: bool):
    n = est.counts[i]
    dof = n - est.k
    if dof <= 0:
        raise InsufficientSamples(f"N_L={n} <= k={est.k} at L_p={est.grid[i]}")
    s = math.sqrt(est.variances[i])
    if inflate:
        s *= math.sqrt(1.0 + 1.0 / n)
    return s, dof


def prediction_interval(est: RQEstimate, L_p: float, alpha: float, inflate: bool = True) -> PredictionBand:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    i = est.index(L_p)
    s, dof = _spread(est, i, inflate)
    t = t_quantile(1.0 - alpha / 2.0, dof)
    mu = est.means[i]
    half = t * s
    return PredictionBand(est.grid[i], mu, mu - half, mu + half, alpha, dof, t)


def lower_quality_bound(est: RQEstimate, L_p: float, alpha_star: float, inflate: bool = True) -> float:
    """Quality exceeded by a fresh draw with estimated probability ``alpha_star``."""
    if not 0.0 < alpha_star < 1.0:
        raise ValueError("alpha_star must be in (0, 1)")
    i = est.index(L_p)
    s, dof = _spread(est, i, inflate)
    if s == 0.0:
        return est.means[i]
    return est.means[i] - t_quantile(alpha_star, dof) * s


def lower_bounds(est: RQEstimate, alpha_star: float, inflate: bool = True) -> np.ndarray:
    return np.array([lower_quality_bound(est, g, alpha_star, inflate) for g in est.grid])


def interpolate(est: RQEstimate, L_p: float, which="mean", extrapolate: bool = False,
                inflate: bool = True) -> float:
    """Statistic at an arbitrary prompt size.

    ``which`` is ``"mean"`` or ``("lower", alpha_star)``. Piecewise-linear
    inside the grid; above it, the fitted curve when ``extrapolate`` is set
    (the lower bound keeps the last grid point's margin), else the last grid
    value.
    """
    grid = np.asarray(est.grid)
    if L_p < grid[0] - GRID_TOL * max(1.0, abs(grid[0])):
        raise BelowGrid(f"{L_p} is below the smallest grid prompt size {grid[0]}")
    if which == "mean":
        values = np.asarray(est.means)
    elif isinstance(which, tuple) and which[0] == "lower":
        values = lower_bounds(est, which[1], inflate)
    else:
        raise ValueError(f"unknown statistic {which!r}")
    for i, g in enumerate(grid):
        if abs(g - L_p) <= GRID_TOL * max(1.0, abs(g)):
            return float(values[i])
    if L_p <= grid[-1]:
        return float(np.interp(L_p, grid, values))
    if not extrapolate:
        return float(values[-1])
    margin = est.means[-1] - values[-1]
    return float(est.curve_value(L_p) - margin)


# ---------------------------------------------------------------- pilots

def update_with_pilot(est: RQEstimate, new: Iterable[QualitySample], forgetting: float = 1.0) -> RQEstimate:
    """Exponentially weighted update of the per-grid-point statistics.

    Every new sample at a grid point first scales that point's existing weight
    by ``forgetting`` and then enters with weight 1. ``forgetting = 1`` gives
    the exact pooled mean and unbiased variance. Variances use reliability
    weights: ``S / (W - W2 / W)``.
    """
    if not 0.0 < forgetting <= 1.0:
        raise ValueError("forgetting must be in (0, 1]")
    W = list(est.counts)
    W2 = list(est.weight_sq)
    mean = list(est.means)
    S = []
    for i in range(est.N_p):
        denom = W[i] - W2[i] / W[i]
        S.append(est.variances[i] * denom if denom > 0 else 0.0)
    for s in new:
        i = est.index(s.L_p)
        q = float(s.quality)
        if not math.isfinite(q):
            raise NonFiniteQuality(f"non-finite pilot quality at L_p={s.L_p}")
        W[i] *= forgetting
        W2[i] *= forgetting * forgetting
        S[i] *= forgetting
        W[i] += 1.0
        W2[i] += 1.0
        delta = q - mean[i]
        mean[i] += delta / W[i]
        S[i] += delta * (q - mean[i])
    variances = []
    for i in range(est.N_p):
        denom = W[i] - W2[i] / W[i]
        variances.append(max(S[i] / denom, 0.0) if denom > 1e-12 else 0.0)
    a, b, c, sse = fit_curve(est.grid, mean)
    return RQEstimate(est.grid, tuple(W), tuple(mean), tuple(variances), tuple(W2),
                      est.k, (a, b, c), sse)
