"""Monte Carlo harness: interval widths, quality adherence, budgets, viability.

Every realization draws from its own stream seeded by ``(seed, purpose,
realization[, budget])``, so results do not depend on the worker count or
on evaluation order. Training draws for one realization are shared across
budgets (budget ``N`` uses the first ``N`` rows), which gives common random
numbers along the budget axis; each (realization, budget) estimate gets its
own fresh test set.

A "quality source" is anything with ``sample(grid, n, rng) -> (n, len(grid))``
array: ``SyntheticRQLaw`` or ``CodecSampler``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .budget import exact, exact_ceil_div
from .codec import EPS_FLOOR, make_image_corpus
from .errors import MalformedRow
from .netsim import COST_VARIANTS, DEST_DEVIATION, DEST_GOAL, NODE_AUGMENTED, NODE_STANDARD, SOURCE
from .protocol import per_point_cost
from .rq import t_quantile

# VGA case-study sizes in Mbit: original image, smallest and average prompt
CASE_X_MBIT = 1.482
CASE_LMIN_MBIT = 0.092
CASE_LAVG_MBIT = 0.787


# ---------------------------------------------------------------- sources

class CodecSampler:
    """Quality source backed by a pixel codec and a fresh synthetic image per row."""

    def __init__(self, codec, variant, width=16, height=16, metric="mse"):
        self.codec = codec
        self.variant = variant
        self.width = width
        self.height = height
        self.metric = metric

    def sample(self, grid, n, rng):
        out = np.empty((n, len(grid)))
        for i in range(n):
            seed = int(rng.integers(2 ** 63))
            x = make_image_corpus(1, self.width, self.height, seed)[0]
            for j, L in enumerate(grid):
                p = self.codec.encode(x, L, self.variant, seed + j)
                out[i, j] = self.codec.measure(x, self.codec.generate(p), self.metric).value
        return out


def _stream(seed, *parts):
    return np.random.default_rng([int(seed), *[int(p) for p in parts]])


def _chunks(n, workers):
    workers = max(1, min(int(workers), n)) if n else 1
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]


def _parallel(fn, n, workers):
    parts = _chunks(n, workers)
    if len(parts) == 1:
        return [fn(*parts[0])]
    with ThreadPoolExecutor(max_workers=len(parts)) as ex:
        return list(ex.map(lambda ab: fn(*ab), parts))


def _prefix_stats(Q: np.ndarray, N: int):
    """Per-realization mean and unbiased variance over the first ``N`` rows.

    Deviations are taken from the first row so a constant column yields an
    exact zero variance.
    """
    X = Q[:, :N, :]
    d = X - X[:, :1, :]
    md = d.mean(axis=1)
    var = ((d - md[:, None, :]) ** 2).sum(axis=1) / (N - 1) if N > 1 else np.zeros_like(md)
    return X[:, 0, :] + md, var


def _scale(var, N, inflate):
    s = np.sqrt(var)
    return s * math.sqrt(1.0 + 1.0 / N) if inflate else s


# ---------------------------------------------------------------- widths

@dataclass(frozen=True)
class WidthEntry:
    N_L: int
    mean: float
    p10: float
    p90: float
    realizations: int


@dataclass(frozen=True)
class WidthDistribution:
    L_p: float
    entries: tuple

    def by_budget(self) -> dict:
        return {e.N_L: e for e in self.entries}


def width_samples(source, grid, N_L, R, alpha=0.10, seed=0, k=1, inflate=True, workers=1):
    """``(R, len(grid))`` prediction-band widths at one budget."""
    if R < 2 or N_L < 2:
        raise ValueError("need R >= 2 and N_L >= 2")
    t = t_quantile(1.0 - alpha / 2.0, N_L - k)

    def work(a, b):
        Q = np.stack([source.sample(grid, N_L, _stream(seed, 0, N_L, r)) for r in range(a, b)])
        _, var = _prefix_stats(Q, N_L)
        return 2.0 * t * _scale(var, N_L, inflate)

    return np.concatenate(_parallel(work, R, workers))


def width_distribution(source, grid, budgets, R=1000, alpha=0.10, seed=0, k=1, inflate=True,
                       workers=1) -> list:
    grid = [float(g) for g in grid]
    per_grid = [[] for _ in grid]
    for N in budgets:
        W = width_samples(source, grid, N, R, alpha, seed, k, inflate, workers)
        for j in range(len(grid)):
            col = W[:, j]
            per_grid[j].append(WidthEntry(int(N), float(col.mean()), float(np.percentile(col, 10)),
                                          float(np.percentile(col, 90)), R))
    return [WidthDistribution(L, tuple(e)) for L, e in zip(grid, per_grid)]


def widths_rows(dists: Sequence[WidthDistribution]) -> list:
    return [{"L_p": d.L_p, "N_L": e.N_L, "mean": e.mean, "p10": e.p10, "p90": e.p90}
            for d in dists for e in d.entries]


# ---------------------------------------------------------------- adherence

@dataclass(frozen=True)
class AdherenceEntry:
    N_L: int
    adherence: float
    trials: int
    test_size: int
    full_data_rate: float


@dataclass(frozen=True)
class AdherenceCurve:
    Q_min: float
    alpha_star: float
    entries: tuple

    def by_budget(self) -> dict:
        return {e.N_L: e.adherence for e in self.entries}


def _adherence_block(source, grid, budgets, Q_min, alpha_star, M, seed, k, inflate,
                     allow_full_data, a, b):
    grid_arr = np.asarray(grid, dtype=float)
    n_max = max(budgets)
    Q = np.stack([source.sample(grid_arr, n_max, _stream(seed, 0, r)) for r in range(a, b)])
    out = np.empty((b - a, len(budgets)))
    full = np.zeros((b - a, len(budgets)), dtype=bool)
    for bi, N in enumerate(budgets):
        mean, var = _prefix_stats(Q, N)
        bound = mean - t_quantile(alpha_star, N - k) * _scale(var, N, inflate)
        bound = np.where(var == 0, mean, bound)
        ok = bound >= Q_min
        has = ok.any(axis=1)
        first = ok.argmax(axis=1)
        for i, r in enumerate(range(a, b)):
            if not has[i]:
                full[i, bi] = True
                out[i, bi] = 1.0 if allow_full_data else 0.0
                continue
            L = grid_arr[first[i]: first[i] + 1]
            test = source.sample(L, M, _stream(seed, 1, r, N))[:, 0]
            out[i, bi] = np.count_nonzero(test >= Q_min) / M
    return out, full


def adherence_matrix(source, grid, budgets, Q_min, alpha_star, R=1000, M=50, seed=0, k=1,
                     inflate=True, allow_full_data=True, workers=1):
    """Per-realization adherence fractions, shape ``(R, len(budgets))``, plus FULL_DATA flags."""
    budgets = [int(n) for n in budgets]
    if min(budgets) <= k or R < 1 or M < 1:
        raise ValueError("need budgets > k, R >= 1 and M >= 1")
    parts = _parallel(lambda a, b: _adherence_block(source, grid, budgets, Q_min, alpha_star, M, seed,
                                                    k, inflate, allow_full_data, a, b), R, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def adherence_curve(source, grid, budgets, Q_min, alpha_star, R=1000, M=50, seed=0, k=1,
                    inflate=True, allow_full_data=True, workers=1) -> AdherenceCurve:
    budgets = [int(n) for n in budgets]
    frac, full = adherence_matrix(source, grid, budgets, Q_min, alpha_star, R, M, seed, k,
                                  inflate, allow_full_data, workers)
    entries = tuple(
        AdherenceEntry(N, float(frac[:, i].mean()), R, M, float(full[:, i].mean()))
        for i, N in enumerate(budgets)
    )
    return AdherenceCurve(Q_min, alpha_star, entries)


def quality_adherence(source, grid, N_L, Q_min, alpha_star, R=1000, M=50, seed=0, k=1,
                      inflate=True, allow_full_data=True, workers=1) -> float:
    curve = adherence_curve(source, grid, [N_L], Q_min, alpha_star, R, M, seed, k, inflate,
                            allow_full_data, workers)
    return curve.entries[0].adherence


def optimal_budget(source, grid, Q_min, alpha_star, budgets, R=1000, M=50, seed=0, k=1,
                   inflate=True, allow_full_data=True, workers=1, curve_out: Optional[list] = None):
    """Smallest budget whose adherence reaches ``alpha_star``; None when none does.

    Every budget is evaluated (no early exit) under common random numbers.
    """
    budgets = sorted(int(n) for n in budgets)
    if not budgets:
        raise ValueError("budget range must be nonempty")
    curve = adherence_curve(source, grid, budgets, Q_min, alpha_star, R, M, seed, k, inflate,
                            allow_full_data, workers)
    if curve_out is not None:
        curve_out.append(curve)
    for e in curve.entries:
        if e.adherence >= alpha_star:
            return e.N_L
    return None


def adherence_rows(curves: Sequence[AdherenceCurve]) -> list:
    return [{"Q_min": c.Q_min, "alpha_star": c.alpha_star, "N_L": e.N_L, "adherence": e.adherence,
             "R": e.trials, "M": e.test_size} for c in curves for e in c.entries]


# ---------------------------------------------------------------- viability

@dataclass(frozen=True)
class ViabilityRecord:
    method: str
    Q_min: float
    N_L_opt: Optional[int]
    K_L: float
    w: float
    N_V: Optional[int]

    def to_row(self) -> dict:
        return {"method": self.method, "Q_min": self.Q_min,
                "N_L_opt": "NOT_FOUND" if self.N_L_opt is None else self.N_L_opt,
                "K_L_bits": self.K_L, "w_bits": self.w,
                "N_V": "NOT_VIABLE" if self.N_V is None else self.N_V}


def viability(K_L, w) -> Optional[int]:
    """Minimum post-learning transmissions recovering ``K_L``; None when ``w <= 0``."""
    if exact(K_L) < 0:
        raise ValueError("learning cost must be non-negative")
    if exact(w) <= 0:
        return None
    return exact_ceil_div(K_L, w)


def viability_record(method, Q_min, N_L_opt, K_L, w) -> ViabilityRecord:
    return ViabilityRecord(method, Q_min, N_L_opt, K_L, w, viability(K_L, w))


# ---------------------------------------------------------------- tables

TABLE3_FORMULAS = {
    SOURCE: "N_p*(L_avg+|xhat|)",
    NODE_AUGMENTED: "|x|+L_min",
    NODE_STANDARD: "|x|+N_p*L_avg",
    DEST_GOAL: "N_p*(L_avg+|xhat|)",
    DEST_DEVIATION: "|x|+N_p*(L_avg+|xhat|)",
}


def table3_costs(N_p_values=range(1, 6), x=CASE_X_MBIT, L_min=CASE_LMIN_MBIT,
                 L_avg=CASE_LAVG_MBIT, xhat=CASE_X_MBIT) -> list:
    """Per-point learning cost (Mbit) of every variant, with all prompts at ``L_avg``."""
    rows = []
    for variant in COST_VARIANTS:
        for N_p in N_p_values:
            if N_p < 1:
                raise ValueError("N_p must be at least 1")
            cost = per_point_cost(variant, [L_avg] * N_p, x, xhat, L_min)
            rows.append({"variant": variant, "N_p": N_p, "formula": TABLE3_FORMULAS[variant],
                         "cost_Mbit": round(cost, 3)})
    return rows


@dataclass(frozen=True)
class Table4Row:
    method: str
    Q_min: float
    N_L_opt: int
    K_L: str
    w_png: str
    vp_png: Optional[int]
    w_jpeg: str
    vp_jpeg: Optional[int]


def _vp(text):
    text = text.strip()
    return None if text.upper() in ("N/A", "NA", "") else int(text)


def parse_table4(text: str) -> list:
    rows = []
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    need = ["method", "Q_min", "N_L_opt", "K_L", "w_png", "vp_png", "w_jpeg", "vp_jpeg"]
    if reader.fieldnames is None or any(f not in reader.fieldnames for f in need):
        raise MalformedRow(f"table header must contain {need}")
    for n, r in enumerate(reader, start=1):
        try:
            for key in ("K_L", "w_png", "w_jpeg"):
                float(r[key])
            rows.append(Table4Row(r["method"].strip(), float(r["Q_min"]), int(r["N_L_opt"]),
                                  r["K_L"].strip(), r["w_png"].strip(), _vp(r["vp_png"]),
                                  r["w_jpeg"].strip(), _vp(r["vp_jpeg"])))
        except (TypeError, ValueError, AttributeError) as err:
            raise MalformedRow(f"row {n}: {err}") from None
    return rows


def load_table4() -> list:
    text = resources.files("genlayer").joinpath("data/table4.csv").read_text()
    return parse_table4(text)


def _decimals(text: str) -> int:
    return len(text.split(".")[1]) if "." in text else 0


def check_viability(K_L: str, w: str, published: Optional[int]) -> dict:
    """Compare a published viability point with the one recomputed from ``K_L`` and ``w``.

    ``rounding`` means a perturbation of ``w`` by half a unit in its last
    printed decimal moves the ceiling onto the published value.
    """
    recomputed = viability(K_L, w)
    half = exact(5) / exact(10 ** (_decimals(w) + 1))
    if recomputed is None:
        status = "not-viable" if published is None else "mismatch"
        lo = hi = None
    else:
        wf = exact(w)
        lo = math.ceil(exact(K_L) / (wf + half))
        hi = math.ceil(exact(K_L) / (wf - half)) if wf > half else None
        if published == recomputed:
            status = "match"
        elif published is not None and lo <= published and (hi is None or published <= hi):
            status = "rounding"
        else:
            status = "mismatch"
    return {"recomputed": recomputed, "range_lo": lo, "range_hi": hi, "status": status}


def table4_crosscheck(rows: Sequence[Table4Row]) -> list:
    report = []
    for r in rows:
        for baseline, w, vp in (("PNG", r.w_png, r.vp_png), ("JPEG", r.w_jpeg, r.vp_jpeg)):
            res = check_viability(r.K_L, w, vp)
            report.append({
                "method": r.method, "Q_min": r.Q_min, "baseline": baseline,
                "K_L_Mbit": r.K_L, "w_Mbit": w,
                "published": "N/A" if vp is None else vp,
                "recomputed": "NOT_VIABLE" if res["recomputed"] is None else res["recomputed"],
                "status": res["status"],
            })
    return report


# ---------------------------------------------------------------- output

def fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def rows_to_csv(rows: Sequence[dict], fieldnames: Sequence[str] = None) -> str:
    rows = list(rows)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fieldnames)
    for r in rows:
        w.writerow([fmt(r.get(f)) for f in fieldnames])
    return buf.getvalue()


WIDTH_FIELDS = ["L_p", "N_L", "mean", "p10", "p90"]
ADHERENCE_FIELDS = ["Q_min", "alpha_star", "N_L", "adherence", "R", "M"]
VIABILITY_FIELDS = ["method", "Q_min", "N_L_opt", "K_L_bits", "w_bits", "N_V"]
TABLE3_FIELDS = ["variant", "N_p", "formula", "cost_Mbit"]
TABLE4_FIELDS = ["method", "Q_min", "baseline", "K_L_Mbit", "w_Mbit", "published", "recomputed", "status"]

__all__ = [
    "CodecSampler", "WidthDistribution", "width_distribution", "width_samples",
    "AdherenceCurve", "adherence_curve", "quality_adherence", "optimal_budget",
    "ViabilityRecord", "viability", "table3_costs", "table4_crosscheck", "load_table4",
    "EPS_FLOOR",
]
