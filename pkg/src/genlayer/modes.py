"""Prompt-size selection for the three communication modes.

All selectors scan a finite candidate grid in increasing prompt size and
break ties toward the smaller (cheaper) prompt. Prompt sizes are in bpp;
``pixel_count`` converts them to bits so the flow terms share units with the
original size ``L`` (bits).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import GridNotCovered, Infeasible
from .netsim import Topology, min_cut
from .rq import GRID_TOL, RQEstimate, interpolate, lower_quality_bound

QUALITY = "quality-constrained"
RATE = "rate-constrained"
UNCONSTRAINED = "unconstrained"
MODES = (QUALITY, RATE, UNCONSTRAINED)


@dataclass(frozen=True)
class ModeConfig:
    mode: str
    grid: tuple
    Q_min: Optional[float] = None
    alpha_star: Optional[float] = None
    w_weight: float = 0.0
    lam: Optional[float] = None
    L: Optional[float] = None
    L_min: Optional[float] = None
    pixel_count: float = 1.0
    interpolate: bool = False
    inflate: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        g = tuple(float(x) for x in self.grid)
        object.__setattr__(self, "grid", g)
        if not g or any(b <= a for a, b in zip(g, g[1:])):
            raise ValueError("candidate grid must be nonempty and strictly increasing")
        if self.w_weight < 0:
            raise ValueError("w_weight must be non-negative")
        if self.mode == QUALITY:
            if self.Q_min is None or self.alpha_star is None:
                raise ValueError("quality-constrained mode needs Q_min and alpha_star")
            if not 0 < self.alpha_star < 1:
                raise ValueError("alpha_star must be in (0, 1)")
        if self.mode == RATE and (self.lam is None or self.L is None):
            raise ValueError("rate-constrained mode needs lam and L")
        if self.mode == UNCONSTRAINED and self.L is None:
            raise ValueError("unconstrained mode needs L")

    @property
    def min_prompt(self) -> float:
        return self.grid[0] if self.L_min is None else self.L_min


@dataclass(frozen=True)
class Selection:
    """``chosen_L_p`` is None when no candidate qualifies (transmit the original)."""

    chosen_L_p: Optional[float]
    objective_value: float
    feasible: bool
    diagnostics: tuple = field(default_factory=tuple)

    @property
    def full_data(self) -> bool:
        return self.chosen_L_p is None

    def to_dict(self) -> dict:
        return {
            "chosen_L_p": "FULL_DATA" if self.full_data else self.chosen_L_p,
            "objective_value": self.objective_value,
            "feasible": self.feasible,
            "diagnostics": [dict(r) for r in self.diagnostics],
        }


def _on_grid(est: RQEstimate, L_p: float) -> bool:
    return any(abs(g - L_p) <= GRID_TOL * max(1.0, abs(g)) for g in est.grid)


def _check_covered(est: RQEstimate, cfg: ModeConfig):
    for L in cfg.grid:
        if cfg.interpolate:
            if L < est.grid[0] - GRID_TOL or L > est.grid[-1] + GRID_TOL:
                raise GridNotCovered(f"candidate {L} lies outside the estimate grid")
        elif not _on_grid(est, L):
            raise GridNotCovered(f"candidate {L} is not an estimate grid point")


def select_quality_constrained(est: RQEstimate, cfg: ModeConfig) -> Selection:
    """Smallest candidate whose ``alpha_star`` lower bound clears ``Q_min``."""
    _check_covered(est, cfg)
    rows = []
    chosen = None
    bound_at_choice = -math.inf
    for L in cfg.grid:
        if cfg.interpolate and not _on_grid(est, L):
            bound = interpolate(est, L, ("lower", cfg.alpha_star), inflate=cfg.inflate)
        else:
            bound = lower_quality_bound(est, L, cfg.alpha_star, cfg.inflate)
        ok = bound >= cfg.Q_min
        rows.append({"L_p": L, "bound": bound, "feasible": ok})
        if ok and chosen is None:
            chosen, bound_at_choice = L, bound
    if chosen is None:
        return Selection(None, math.nan, False, tuple(rows))
    return Selection(chosen, bound_at_choice, True, tuple(rows))


def _weighted_objective(y_g: float, w: float, q_hat: float) -> float:
    return y_g * (1.0 - w / q_hat)


def _scan(est: RQEstimate, cfg: ModeConfig, lam: float, cap_sg: float = math.inf):
    rows = []
    best, best_val = None, -math.inf
    for L in cfg.grid:
        bits = L * cfg.pixel_count
        y_g = lam * (cfg.L - bits)
        q_hat = interpolate(est, L, "mean")
        reason = None
        if L < cfg.min_prompt - GRID_TOL:
            reason = "below L_min"
        elif lam * bits > cap_sg:
            reason = "exceeds s-g capacity"
        elif y_g < 0:
            reason = "negative divergence"
        elif q_hat <= 0:
            reason = "non-positive quality"
        val = _weighted_objective(y_g, cfg.w_weight, q_hat) if reason is None else math.nan
        rows.append({"L_p": L, "q_hat": q_hat, "y_g": y_g, "objective": val,
                     "feasible": reason is None, "reason": reason or ""})
        if reason is None and (best is None or val > best_val):
            best, best_val = L, val
    return best, best_val, tuple(rows)


def select_rate_constrained(est: RQEstimate, cfg: ModeConfig, topo: Topology,
                            s: str, g: str, d: str) -> Selection:
    """Maximize ``y_g (1 - w / Q(L_p))`` with ``y_g = lam (L - L_p)`` under the flow limits."""
    _check_covered(est, cfg)
    c_sg = min_cut(topo, s, g)
    c_gd = min_cut(topo, g, d)
    lam = cfg.lam
    if lam * cfg.min_prompt * cfg.pixel_count > c_sg:
        raise Infeasible(f"lam * L_min = {lam * cfg.min_prompt * cfg.pixel_count} exceeds c_sg = {c_sg}")
    if lam * cfg.L > c_gd:
        raise Infeasible(f"lam * L = {lam * cfg.L} exceeds c_gd = {c_gd}")
    best, val, rows = _scan(est, cfg, lam, c_sg)
    if best is None:
        raise Infeasible("no candidate prompt size satisfies the flow constraints")
    return Selection(best, val, True, rows)


def select_unconstrained(est: RQEstimate, cfg: ModeConfig) -> Selection:
    _check_covered(est, cfg)
    lam = 1.0 if cfg.lam is None else cfg.lam
    best, val, rows = _scan(est, cfg, lam)
    if best is None:
        return Selection(None, math.nan, False, rows)
    return Selection(best, val, True, rows)


def select(est: RQEstimate, cfg: ModeConfig, topo: Topology = None, s="s", g="g", d="d") -> Selection:
    if cfg.mode == QUALITY:
        return select_quality_constrained(est, cfg)
    if cfg.mode == RATE:
        if topo is None:
            raise Infeasible("rate-constrained selection needs a topology")
        return select_rate_constrained(est, cfg, topo, s, g, d)
    return select_unconstrained(est, cfg)
