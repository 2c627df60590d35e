"""Per-point learning costs of every protocol variant and the viability cross-check.

    python3 scripts/tables.py --out out/tables
"""
import argparse
from pathlib import Path

from genlayer.experiments import (TABLE3_FIELDS, TABLE4_FIELDS, load_table4, rows_to_csv, table3_costs,
                                  table4_crosscheck)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out/tables"))
    a = ap.parse_args()
    a.out.mkdir(parents=True, exist_ok=True)
    costs = table3_costs()
    (a.out / "table3.csv").write_text(rows_to_csv(costs, TABLE3_FIELDS))
    check = table4_crosscheck(load_table4())
    (a.out / "table4_check.csv").write_text(rows_to_csv(check, TABLE4_FIELDS))
    for r in costs:
        print(f"{r['variant']:<22} N_p={r['N_p']}  {r['cost_Mbit']:.3f} Mbit")
    for r in check:
        if r["status"] != "match":
            print(f"{r['method']} Q_min={r['Q_min']:g} {r['baseline']}: published {r['published']}, "
                  f"recomputed {r['recomputed']} ({r['status']})")
    print(f"wrote {a.out}")


if __name__ == "__main__":
    main()
