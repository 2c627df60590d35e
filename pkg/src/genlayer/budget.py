"""Budget-to-count conversion, hybrid budget checks and pilot scheduling.

Counts are computed in exact rational arithmetic. Floats are read through
their shortest decimal representation, so ``1.574`` means exactly 1574/1000
and ``floor(10 / 1.574)`` cannot misround.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ZeroCost, ZeroLatency

BUDGET_KINDS = ("communication", "time", "hybrid", "fixed-count")
PILOT_POLICIES = ("periodic", "exponential", "none")


def exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Decimal)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("budget quantities must be finite")
        return Fraction(repr(x))
    return Fraction(str(x))


def exact_floor_div(a, b) -> int:
    return math.floor(exact(a) / exact(b))


def exact_ceil_div(a, b) -> int:
    return math.ceil(exact(a) / exact(b))


@dataclass(frozen=True)
class BudgetPlan:
    kind: str
    bits: Optional[float] = None
    seconds: Optional[float] = None
    n_points: Optional[int] = None

    def __post_init__(self):
        if self.kind not in BUDGET_KINDS:
            raise ValueError(f"unknown budget kind {self.kind!r}")
        need = {
            "communication": {"bits"},
            "time": {"seconds"},
            "hybrid": {"bits"},
            "fixed-count": {"n_points"},
        }[self.kind]
        present = {k for k in ("bits", "seconds", "n_points") if getattr(self, k) is not None}
        if present != need:
            raise ValueError(f"{self.kind} budget needs exactly {sorted(need)}, got {sorted(present)}")
        for k in present:
            if getattr(self, k) < 0:
                raise ValueError(f"budget {k} must be non-negative")


@dataclass(frozen=True)
class PilotSchedule:
    policy: str = "none"
    period: int = 0
    base: float = 2.0
    forgetting: float = 1.0

    def __post_init__(self):
        if self.policy not in PILOT_POLICIES:
            raise ValueError(f"unknown pilot policy {self.policy!r}")
        if self.policy == "periodic" and self.period < 1:
            raise ValueError("periodic pilots need period >= 1")
        if self.policy == "exponential" and self.base <= 1:
            raise ValueError("exponential pilots need base > 1")
        if not 0 < self.forgetting <= 1:
            raise ValueError("forgetting must be in (0, 1]")


def points_from_comm_budget(B_c, kappa) -> int:
    if exact(kappa) <= 0:
        raise ZeroCost("per-point communication cost must be positive")
    return max(exact_floor_div(B_c, kappa), 0)


def points_from_time_budget(B_T, T_L) -> int:
    if exact(T_L) <= 0:
        raise ZeroLatency("per-point latency must be positive")
    return max(exact_floor_div(B_T, T_L), 0)


def projected_cost(observed: Sequence[float], prior: float) -> float:
    """Running mean of observed per-point costs, or the a-priori estimate."""
    if not observed:
        return prior
    return float(sum(exact(c) for c in observed) / len(observed))


def hybrid_should_continue(spent, budget, projected) -> bool:
    if isinstance(budget, BudgetPlan):
        budget = budget.bits
    return exact(spent) + exact(projected) <= exact(budget)


def pilot_slots(schedule: PilotSchedule, N_C: int) -> list:
    """Sorted 1-based indices of the post-learning points used as pilots."""
    if N_C < 0:
        raise ValueError("stream length must be non-negative")
    if schedule.policy == "none" or N_C == 0:
        return []
    if schedule.policy == "periodic":
        return list(range(schedule.period, N_C + 1, schedule.period))
    base = exact(schedule.base)
    slots = []
    power = base
    while True:
        idx = math.ceil(power)
        if idx > N_C:
            break
        if not slots or idx != slots[-1]:
            slots.append(idx)
        power *= base
    return slots
