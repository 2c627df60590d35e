"""Quality adherence against the learning budget and the optimal budget per quality threshold.

    python3 scripts/adherence.py --q-min 6 8 --realizations 1000 --workers 4
"""
import argparse
from pathlib import Path

import numpy as np

from genlayer.codec import SyntheticRQLaw
from genlayer.experiments import ADHERENCE_FIELDS, adherence_rows, optimal_budget, rows_to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q-min", type=float, nargs="+", default=[8.0])
    ap.add_argument("--alpha-star", type=float, default=0.9)
    ap.add_argument("--grid-step", type=float, default=0.1)
    ap.add_argument("--grid-max", type=float, default=6.0)
    ap.add_argument("--budget-min", type=int, default=2)
    ap.add_argument("--budget-max", type=int, default=40)
    ap.add_argument("--realizations", type=int, default=1000)
    ap.add_argument("--test-size", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("out/adherence.csv"))
    a = ap.parse_args()
    law = SyntheticRQLaw(q_max=10, beta=1, sigma0=1, gamma=0.3)
    grid = list(np.round(np.arange(a.grid_step, a.grid_max + 1e-4, a.grid_step), 4))
    budgets = range(a.budget_min, a.budget_max + 1)
    curves = []
    for q in a.q_min:
        n_opt = optimal_budget(law, grid, q, a.alpha_star, budgets, a.realizations, a.test_size, a.seed,
                               workers=a.workers, curve_out=curves)
        adh = curves[-1].by_budget()
        shown = "NOT_FOUND" if n_opt is None else f"{n_opt} (adherence {adh[n_opt]:.3f})"
        print(f"Q_min={q:g}: optimal budget {shown}; adherence at N={a.budget_min}: {adh[a.budget_min]:.3f}")
    a.out.parent.mkdir(parents=True, exist_ok=True)
    a.out.write_text(rows_to_csv(adherence_rows(curves), ADHERENCE_FIELDS))
    print(f"wrote {a.out}")


if __name__ == "__main__":
    main()
