"""Scenario 2: cost versus number of LoRI travelers, then per-decision runtime.

    python scripts/run_scenario2.py --out results/scenario2 [--seeds 0 1] [--budget 900]
"""
import argparse
import time
from pathlib import Path

from lori import experiments as X
from lori.config import load_config, with_seeds


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config")
    ap.add_argument("--out", default="results/scenario2")
    ap.add_argument("--seeds", type=int, nargs="*")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--budget", type=float, help="wall-clock cap per LoRI run at the runtime-only points")
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.seeds:
        cfg = with_seeds(cfg, args.seeds)
    s2 = cfg.scenario2
    budget = s2.runtime_budget_s if args.budget is None else args.budget

    reports = []
    for x in sorted(set(s2.lori_counts) | set(s2.runtime_counts)):
        t0 = time.perf_counter()
        if x in s2.lori_counts:
            specs = X.scenario2_specs(cfg, x)
        else:
            specs = X.scenario2_specs(cfg, x, budget_s=budget, include_sssp=False)
        batch = X.run_all(cfg, specs, workers=args.workers)
        reports += batch
        costs = X.mean_by([r for r in batch if r.completed], lambda r: r.spec.arm)
        done = sum(r.completed for r in batch)
        print(f"x={x}: {done}/{len(batch)} runs completed in {time.perf_counter() - t0:.1f} s, "
              + ", ".join(f"{arm} cost {v:.6f}" for arm, v in sorted(costs.items())))
    X.write_outputs(Path(args.out), reports)

    rt = X.runtime_summary(reports)
    print("x   lori_s/decision  sssp_s/decision  ratio")
    for x, (lo, ss) in sorted(rt.items()):
        print(f"{x:<3} {lo:15.6f} {ss:16.6f} {lo / ss:8.1f}")


if __name__ == "__main__":
    main()
