"""Prediction-band width against the learning budget on the synthetic law.

    python3 scripts/widths.py --realizations 1000 --out out/widths.csv
"""
import argparse
from pathlib import Path

from genlayer.codec import SyntheticRQLaw
from genlayer.experiments import WIDTH_FIELDS, rows_to_csv, width_distribution, widths_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0, 6.0])
    ap.add_argument("--budgets", type=int, nargs="+", default=[2, 3, 4, 8, 16, 32, 64])
    ap.add_argument("--realizations", type=int, default=1000)
    ap.add_argument("--alpha", type=float, default=0.10)
    ap.add_argument("--gamma", type=float, default=0.3)
    ap.add_argument("--no-inflate", action="store_true", help="drop the sqrt(1 + 1/N) factor")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("out/widths.csv"))
    a = ap.parse_args()
    law = SyntheticRQLaw(q_max=10, beta=1, sigma0=1, gamma=a.gamma)
    dists = width_distribution(law, a.grid, a.budgets, a.realizations, a.alpha, a.seed,
                               inflate=not a.no_inflate, workers=a.workers)
    a.out.parent.mkdir(parents=True, exist_ok=True)
    a.out.write_text(rows_to_csv(widths_rows(dists), WIDTH_FIELDS))
    for d in dists:
        print(f"L_p={d.L_p:g}: " + "  ".join(f"N={e.N_L}:{e.mean:.3f}" for e in d.entries))
    print(f"wrote {a.out}")


if __name__ == "__main__":
    main()
