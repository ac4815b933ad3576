"""Command line entry point: ``lori <command>`` or ``python -m lori <command>``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as X
from .config import load_config, with_seeds
from .graph import dump_edge_list
from .optimizer import optimize_signal
from .qre import NormalFormGame, QreParams, solve_qre
from .simulation import Simulation


def _cfg(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = with_seeds(cfg, [args.seed])
    return cfg


def cmd_graph_dump(args) -> int:
    text = dump_edge_list(_cfg(args).graph())
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    cfg = _cfg(args)
    w = cfg.system_time_weight if args.system_weight is None else args.system_weight
    specs = []
    for seed in cfg.seeds:
        demand = tuple(replace(d, policy=args.policy) for d in cfg.demand)
        n = len(demand) if args.policy == "lori" else 0
        specs.append(X.RunSpec("simulate", f"simulate-seed{seed}-{args.policy}", seed, args.policy, w, demand, n))
    reports = X.run_all(cfg, specs)
    X.write_outputs(args.out, reports)
    for r in reports:
        res = r.result
        print(f"seed={r.spec.seed} policy={args.policy} system_cost={res.system_cost:.6f} ticks={res.ticks}")
        for d in res.decisions:
            print(f"  t={d.tick} traveler={d.traveler} path={cfg.graph().describe(d.path)} "
                  f"objective={d.objective_start:.6g}->{d.objective_end:.6g} seconds={d.seconds:.4f}")
    return 0


def cmd_qre(args) -> int:
    """Trace the logit QRE of a game given as JSON: {"costs": [tensor per player]}."""
    data = json.loads(Path(args.game).read_text())
    game = NormalFormGame([np.asarray(c, dtype=float) for c in data["costs"]])
    params = QreParams(target_alpha=args.alpha if args.alpha is not None else float(data.get("alpha", 1.0)))
    res = solve_qre(game, params)
    names = [f"p{i}_{j}" for i, n in enumerate(game.shape) for j in range(n)]
    print(",".join(["alpha"] + names))
    for alpha, x in res.trace:
        print(",".join([repr(float(alpha))] + [repr(float(v)) for v in x]))
    return 0


def cmd_optimize_signal(args) -> int:
    cfg = _cfg(args)
    graph = cfg.graph()
    w = cfg.system_time_weight if args.system_weight is None else args.system_weight
    sim = Simulation(graph, cfg.cost_model(graph), cfg.demand, cfg.sim_params(w, cfg.seeds[0]))
    for d in cfg.demand:
        if d.start == 0:
            sim.state.add_traveler(d.id, d.origin, d.dest)
    if args.traveler not in sim.state.travelers:
        print(f"traveler {args.traveler} is not on the network at tick 0", file=sys.stderr)
        return 2
    for tid in sim.state.active_ids():
        if tid == args.traveler:
            break
        sim.decide_lori(tid) if sim.demand[tid].policy == "lori" else sim.decide_sssp(tid)
    ctx = sim.decision_context(args.traveler)
    res = optimize_signal(ctx, cfg.optimizer)
    out = {"traveler": args.traveler,
           "objective_start": res.start_objectives,
           "objective_end": res.objective,
           "signal": {str(e): res.signal[e].tolist() for e in res.signal.edges},
           "paths": [graph.describe(p) for p in ctx.path_sets[ctx.k]],
           "choice_probabilities": res.profile[ctx.k].tolist()}
    print(json.dumps(out, indent=2))
    return 0


def cmd_bench(args) -> int:
    cfg = _cfg(args)
    if args.scenario == "scenario1":
        specs = {1: X.experiment1_specs, 2: X.experiment2_specs, 3: X.experiment3_specs}[args.experiment](cfg)
        reports = X.run_all(cfg, specs)
        X.write_outputs(args.out, reports)
        if args.experiment == 1:
            for arm, v in X.experiment1_summary(reports).items():
                print(f"{arm}: mean system cost {v['system_cost']:.6f}, mean traveler cost {v['traveler_cost']:.6f}")
        elif args.experiment == 2:
            curves = X.experiment2_curves(reports)
            print("system_time_weight,lori,sssp")
            for a in sorted(curves["lori"]):
                print(f"{a:g},{curves['lori'][a]:.6f},{curves['sssp'][a]:.6f}")
        else:
            print(f"persuasion rate {X.persuasion_rate(reports):.4f}")
        return 0
    x = args.lori_travelers
    budget = args.budget if args.budget is not None else cfg.scenario2.runtime_budget_s
    reports = X.run_all(cfg, X.scenario2_specs(cfg, x, budget_s=budget))
    X.write_outputs(args.out, reports)
    costs = X.mean_by(reports, lambda r: r.spec.arm)
    lo, ss = X.runtime_summary(reports).get(x, (float("nan"), float("nan")))
    print(f"x={x} lori_cost={costs.get('lori', float('nan')):.6f} sssp_cost={costs.get('sssp', float('nan')):.6f} "
          f"lori_s_per_decision={lo:.6f} sssp_s_per_decision={ss:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lori", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--config", help="scenario YAML (default: packaged Scenario 1 setup)")
        sp.add_argument("--seed", type=int, help="run this single seed instead of the configured ones")
        sp.add_argument("--out", default=out_default, help="output directory or file")

    g = sub.add_parser("graph", help="inspect the expanded network")
    gs = g.add_subparsers(dest="graph_command", required=True)
    gd = gs.add_parser("dump", help="write the expanded graph as a tab-separated edge list")
    common(gd)
    gd.set_defaults(func=cmd_graph_dump)

    s = sub.add_parser("simulate", help="run the Scenario 1 demand under one policy")
    common(s, "out")
    s.add_argument("--policy", choices=("lori", "sssp"), default="lori")
    s.add_argument("--system-weight", type=float, help="system weight on travel time")
    s.set_defaults(func=cmd_simulate)

    q = sub.add_parser("qre", help="trace the logit QRE of a JSON cost tensor game")
    q.add_argument("game", help='JSON file {"costs": [...], "alpha": a}')
    q.add_argument("--alpha", type=float)
    q.set_defaults(func=cmd_qre)

    o = sub.add_parser("optimize-signal", help="optimize one traveler's signal at tick 0")
    common(o)
    o.add_argument("--traveler", type=int, default=0)
    o.add_argument("--system-weight", type=float)
    o.set_defaults(func=cmd_optimize_signal)

    b = sub.add_parser("bench", help="run the experiment scenarios")
    bs = b.add_subparsers(dest="scenario", required=True)
    b1 = bs.add_parser("scenario1")
    common(b1, "out")
    b1.add_argument("--experiment", type=int, choices=(1, 2, 3), required=True)
    b1.set_defaults(func=cmd_bench)
    b2 = bs.add_parser("scenario2")
    common(b2, "out")
    b2.add_argument("--lori-travelers", type=int, required=True)
    b2.add_argument("--budget", type=float, help="wall-clock cap in seconds per LoRI run")
    b2.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
