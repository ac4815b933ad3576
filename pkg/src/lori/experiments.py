"""Scenario 1 (three experiments) and Scenario 2 (mixed LoRI / SSSP population).

Every run is described by a `RunSpec`; runs are independent and can be
spread over worker processes (``LORI_WORKERS``). Report files contain no
wall-clock numbers, so identical configuration and seed give identical
bytes; timings go to ``runtime.csv``.
"""
from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import permutations
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ScenarioConfig
from .costs import WeightProfile
from .signaling import write_signals_csv
from .simulation import RunResult, Simulation, TravelerSpec

ARMS = ("lori", "sssp")
WORKERS_ENV = "LORI_WORKERS"

REPORT_COLUMNS = ("experiment", "run", "seed", "arm", "system_time_weight", "traveler_time_weights",
                  "lori_travelers", "system_cost", "mean_traveler_cost", "traveler_costs", "decisions",
                  "lori_decisions", "persuaded", "persuasion_rate", "ticks", "completed")
RUNTIME_COLUMNS = ("run", "arm", "lori_travelers", "tick", "traveler", "policy", "players", "paths", "seconds")


class ExperimentConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSpec:
    experiment: str
    run: str
    seed: int
    arm: str
    system_time_weight: float
    demand: tuple
    lori_travelers: int = 0
    budget_s: Optional[float] = None  # abort once a run exceeds this many seconds


@dataclass
class RunReport:
    spec: RunSpec
    result: Optional[RunResult]
    completed: bool = True
    partial_decisions: tuple = ()  # (tick, traveler, policy, players, paths, seconds) of an aborted run

    def row(self) -> dict:
        s, r = self.spec, self.result
        weights = ";".join(_fmt(d.weights.weights[0]) for d in s.demand)
        base = {"experiment": s.experiment, "run": s.run, "seed": s.seed, "arm": s.arm,
                "system_time_weight": _fmt(s.system_time_weight), "traveler_time_weights": weights,
                "lori_travelers": s.lori_travelers, "completed": int(self.completed)}
        if r is None:
            return {**base, **{k: "" for k in REPORT_COLUMNS if k not in base}}
        flags = [d.persuaded for d in r.lori_decisions()]
        return {**base,
                "system_cost": _fmt(r.system_cost),
                "mean_traveler_cost": _fmt(r.mean_traveler_cost()),
                "traveler_costs": ";".join(_fmt(r.traveler_costs[i]) for i in sorted(r.traveler_costs)),
                "decisions": len(r.decisions),
                "lori_decisions": len(flags),
                "persuaded": "".join("1" if f else "0" for f in flags),
                "persuasion_rate": _fmt(r.persuasion_rate()) if flags else "",
                "ticks": r.ticks}

    def runtime_rows(self) -> list:
        s = self.spec
        decs = self.partial_decisions if self.result is None else [
            (d.tick, d.traveler, d.policy, d.players, d.n_paths, d.seconds) for d in self.result.decisions]
        return [(s.run, s.arm, s.lori_travelers, *d[:5], f"{d[5]:.6f}") for d in decs]

    def lori_seconds(self) -> list:
        return [row[5] for row in self._decisions() if row[2] == "lori"]

    def sssp_seconds(self) -> list:
        return [row[5] for row in self._decisions() if row[2] == "sssp"]

    def _decisions(self):
        if self.result is None:
            return list(self.partial_decisions)
        return [(d.tick, d.traveler, d.policy, d.players, d.n_paths, d.seconds) for d in self.result.decisions]


def _fmt(x: float) -> str:
    return repr(float(x))


# ----- running -----------------------------------------------------------------------

def execute(cfg: ScenarioConfig, spec: RunSpec) -> RunReport:
    graph = cfg.graph()
    sim = Simulation(graph, cfg.cost_model(graph), spec.demand, cfg.sim_params(spec.system_time_weight, spec.seed))
    if spec.budget_s is None:
        return RunReport(spec, sim.run())
    start = time.perf_counter()
    while not sim.finished():
        sim.step()
        if time.perf_counter() - start > spec.budget_s:
            break
    if sim.finished():
        return RunReport(spec, sim.run())
    partial = tuple((d.tick, d.traveler, d.policy, d.players, d.n_paths, d.seconds) for d in sim.decisions)
    return RunReport(spec, None, completed=False, partial_decisions=partial)


def _execute_star(args):
    return execute(*args)


def worker_count(workers: Optional[int] = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def run_all(cfg: ScenarioConfig, specs: Sequence[RunSpec], workers: Optional[int] = None) -> list:
    """Execute runs, in parallel when more than one worker is requested; order follows `specs`."""
    n = worker_count(workers)
    if n == 1 or len(specs) <= 1:
        return [execute(cfg, s) for s in specs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_execute_star, [(cfg, s) for s in specs]))


# ----- Scenario 1 ------------------------------------------------------------------------

def _scenario1_demand(cfg: ScenarioConfig, time_weights: Sequence[float], arm: str) -> tuple:
    if len(cfg.demand) == 0:
        raise ExperimentConfigError("Scenario 1 needs a demand list")
    if len(time_weights) not in (1, len(cfg.demand)):
        raise ExperimentConfigError(f"{len(time_weights)} traveler weights for {len(cfg.demand)} travelers")
    ws = list(time_weights) * (len(cfg.demand) if len(time_weights) == 1 else 1)
    return tuple(replace(d, weights=WeightProfile.time_weight(w), policy=arm) for d, w in zip(cfg.demand, ws))


def experiment1_specs(cfg: ScenarioConfig) -> list:
    specs = []
    for seed in cfg.seeds:
        for w in cfg.traveler_time_weights:
            for arm in ARMS:
                specs.append(RunSpec("s1e1", f"s1e1-seed{seed}-b{w:g}-{arm}", seed, arm, cfg.system_time_weight,
                                     _scenario1_demand(cfg, [w], arm), len(cfg.demand) if arm == "lori" else 0))
    return specs


def experiment2_specs(cfg: ScenarioConfig) -> list:
    specs = []
    for seed in cfg.seeds:
        for a in cfg.system_time_weight_sweep:
            for arm in ARMS:
                specs.append(RunSpec("s1e2", f"s1e2-seed{seed}-a{a:g}-{arm}", seed, arm, a,
                                     _scenario1_demand(cfg, cfg.experiment2_time_weights, arm),
                                     len(cfg.demand) if arm == "lori" else 0))
    return specs


def od_pairs(cfg: ScenarioConfig) -> list:
    return list(permutations(cfg.graph().locations, 2))


def experiment3_specs(cfg: ScenarioConfig) -> list:
    specs = []
    w = WeightProfile.time_weight(cfg.experiment3_time_weight)
    for seed in cfg.seeds:
        for o, d in od_pairs(cfg):
            demand = (TravelerSpec(0, o, d, 0, w, "lori"),)
            specs.append(RunSpec("s1e3", f"s1e3-seed{seed}-{o}{d}", seed, "lori", cfg.system_time_weight, demand, 1))
    return specs


def mean_by(reports: Sequence[RunReport], key) -> dict:
    """Mean system cost per key(report), over completed runs."""
    groups: dict = {}
    for rep in reports:
        if rep.result is not None:
            groups.setdefault(key(rep), []).append(rep.result.system_cost)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def experiment1_summary(reports) -> dict:
    """Per arm: mean system cost and mean traveler cost over all weights and seeds."""
    out = {}
    for arm in ARMS:
        reps = [r for r in reports if r.spec.arm == arm and r.result is not None]
        out[arm] = {"system_cost": float(np.mean([r.result.system_cost for r in reps])),
                    "traveler_cost": float(np.mean([r.result.mean_traveler_cost() for r in reps]))}
    return out


def experiment2_curves(reports) -> dict:
    """arm -> {system time weight: mean system cost over seeds}."""
    return {arm: mean_by([r for r in reports if r.spec.arm == arm], lambda r: r.spec.system_time_weight)
            for arm in ARMS}


def persuasion_rate(reports) -> float:
    flags = [d.persuaded for r in reports if r.result is not None for d in r.result.lori_decisions()]
    return float(np.mean(flags)) if flags else float("nan")


# ----- Scenario 2 --------------------------------------------------------------------------

def scenario2_demand(cfg: ScenarioConfig, seed: int, lori_travelers: int) -> tuple:
    """Seeded 30-traveler demand; the first `lori_travelers` ids interact with LoRI.

    The draw does not depend on `lori_travelers`, so every x shares one
    demand stream. Travelers that can be LoRI travelers at any x start at
    `lori_start_tick` in every arm.
    """
    s2 = cfg.scenario2
    locs = cfg.graph().locations
    pairs = list(permutations(locs, 2))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2]))
    od = rng.integers(0, len(pairs), s2.travelers)
    starts = rng.integers(0, s2.start_window + 1, s2.travelers)
    n_special = max(max(s2.runtime_counts, default=0), max(s2.lori_counts, default=0), lori_travelers)
    if lori_travelers > s2.travelers:
        raise ExperimentConfigError("more LoRI travelers than travelers")
    w = WeightProfile.time_weight(s2.traveler_time_weight)
    out = []
    for i in range(s2.travelers):
        start = int(starts[i])
        if i < n_special and s2.lori_start_tick is not None:
            start = s2.lori_start_tick
        o, d = pairs[od[i]]
        out.append(TravelerSpec(i, o, d, start, w, "lori" if i < lori_travelers else "sssp"))
    return tuple(out)


def scenario2_specs(cfg: ScenarioConfig, lori_travelers: int, seeds=None, budget_s=None,
                    include_sssp: bool = True) -> list:
    specs = []
    for seed in (cfg.seeds if seeds is None else seeds):
        specs.append(RunSpec("s2", f"s2-seed{seed}-x{lori_travelers}-lori", seed, "lori", cfg.system_time_weight,
                             scenario2_demand(cfg, seed, lori_travelers), lori_travelers, budget_s))
        if include_sssp:
            specs.append(RunSpec("s2", f"s2-seed{seed}-x{lori_travelers}-sssp", seed, "sssp",
                                 cfg.system_time_weight, scenario2_demand(cfg, seed, 0), 0))
    return specs


def runtime_summary(reports) -> dict:
    """x -> (mean LoRI seconds per decision, mean SSSP seconds per decision) over LoRI-arm runs."""
    out = {}
    for x in sorted({r.spec.lori_travelers for r in reports if r.spec.arm == "lori"}):
        reps = [r for r in reports if r.spec.arm == "lori" and r.spec.lori_travelers == x]
        lo = [s for r in reps for s in r.lori_seconds()]
        ss = [s for r in reps for s in r.sssp_seconds()]
        out[x] = (float(np.mean(lo)) if lo else float("nan"), float(np.mean(ss)) if ss else float("nan"))
    return out


# ----- output -------------------------------------------------------------------------------

def write_outputs(out_dir, reports: Sequence[RunReport]) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {k: out / f"{k}.csv" for k in ("report", "timeline", "signals", "runtime")}
    with open(paths["report"], "w", newline="") as fh:
        w = csv.DictWriter(fh, REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow(r.row())
    with open(paths["timeline"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("run", "tick", "edge", "count"))
        for r in reports:
            if r.result is not None:
                w.writerows((r.spec.run, *row) for row in r.result.timeline)
    sig_rows = [(r.spec.run,) + tuple(row) for r in reports if r.result is not None for row in r.result.signals]
    write_signals_csv(paths["signals"], sig_rows, leading=("run",))
    with open(paths["runtime"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUNTIME_COLUMNS)
        for r in reports:
            w.writerows(r.runtime_rows())
    return paths
