"""Print per-arm mean costs and runtime tables from CSVs written by the run scripts.

    python scripts/summarize_results.py results/scenario1/exp2 results/scenario2
"""
import argparse
import csv
from collections import defaultdict
from pathlib import Path

import numpy as np


def summarize(d: Path):
    with open(d / "report.csv") as fh:
        rows = list(csv.DictReader(fh))
    groups = defaultdict(list)
    for r in rows:
        if r["completed"] == "1":
            groups[(r["experiment"], r["arm"], r["system_time_weight"], r["lori_travelers"])].append(
                float(r["system_cost"]))
    print(f"== {d}")
    print("experiment  arm   weight  x  runs  mean_system_cost")
    for (exp, arm, w, x), v in sorted(groups.items()):
        print(f"{exp:<11} {arm:<5} {w:<7} {x:<2} {len(v):<5} {np.mean(v):.6f}")
    rt = d / "runtime.csv"
    if rt.exists():
        with open(rt) as fh:
            secs = defaultdict(list)
            for r in csv.DictReader(fh):
                secs[(r["lori_travelers"], r["policy"])].append(float(r["seconds"]))
        if secs:
            print("x  policy  decisions  mean_seconds")
            for (x, pol), v in sorted(secs.items()):
                print(f"{x:<2} {pol:<7} {len(v):<10} {np.mean(v):.6f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dirs", nargs="+", type=Path)
    for d in ap.parse_args().dirs:
        summarize(d)


if __name__ == "__main__":
    main()
