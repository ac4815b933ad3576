"""Run the three Scenario 1 experiments and write one CSV directory per experiment.

    python scripts/run_scenario1.py --out results/scenario1 [--seeds 0 1 2] [--workers 4]
"""
import argparse
import time
from pathlib import Path

from lori import experiments as X
from lori.config import load_config, with_seeds


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config")
    ap.add_argument("--out", default="results/scenario1")
    ap.add_argument("--seeds", type=int, nargs="*")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--experiments", type=int, nargs="*", default=[1, 2, 3])
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.seeds:
        cfg = with_seeds(cfg, args.seeds)
    builders = {1: X.experiment1_specs, 2: X.experiment2_specs, 3: X.experiment3_specs}
    for n in args.experiments:
        t0 = time.perf_counter()
        reports = X.run_all(cfg, builders[n](cfg), workers=args.workers)
        X.write_outputs(Path(args.out) / f"exp{n}", reports)
        print(f"experiment {n}: {len(reports)} runs in {time.perf_counter() - t0:.1f} s")
        if n == 1:
            for arm, v in X.experiment1_summary(reports).items():
                print(f"  {arm}: system cost {v['system_cost']:.6f}, traveler cost {v['traveler_cost']:.6f}")
        elif n == 2:
            curves = X.experiment2_curves(reports)
            print("  weight   lori       sssp")
            for a in sorted(curves["lori"]):
                print(f"  {a:<6g} {curves['lori'][a]:10.6f} {curves['sssp'][a]:10.6f}")
        else:
            print(f"  persuasion rate {X.persuasion_rate(reports):.4f}")


if __name__ == "__main__":
    main()
