"""Tick-based simulation of LoRI and SSSP travelers on one network."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .costs import CostModel, WeightProfile
from .graph import ExpandedGraph, enumerate_paths
from .optimizer import DecisionContext, OptimizerParams, SystemObjective, choose_path, optimize_signal
from .qre import QreParams
from .signaling import bayes_update, check_distribution
from .sssp import SsspPolicy, sssp_route
from .state import NetworkState, advance, commit_edge

POLICIES = ("lori", "sssp")


@dataclass(frozen=True)
class TravelerSpec:
    id: int
    origin: str
    dest: str
    start: int = 0
    weights: WeightProfile = WeightProfile((0.5, 0.5))
    policy: str = "lori"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.origin == self.dest:
            raise ValueError(f"traveler {self.id}: origin equals destination")
        if self.start < 0:
            raise ValueError("start tick must be >= 0")


@dataclass(frozen=True)
class SimulationParams:
    system_weights: WeightProfile = WeightProfile((0.7, 0.3))
    qre: QreParams = QreParams()
    optimizer: OptimizerParams = OptimizerParams()
    sssp: SsspPolicy = SsspPolicy()
    max_hops: int = 10
    no_double_switch: bool = True
    window: int = 10  # ticks around edge entry scanned for other travelers
    choice: str = "sample"  # sample | mode
    prior: str = "observed"  # observed | uniform
    horizon: Optional[int] = None
    max_ticks: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.choice not in ("sample", "mode"):
            raise ValueError("choice must be 'sample' or 'mode'")
        if self.prior not in ("observed", "uniform"):
            raise ValueError("prior must be 'observed' or 'uniform'")


@dataclass
class DecisionRecord:
    tick: int
    traveler: int
    policy: str
    path: tuple
    n_paths: int = 1
    players: int = 0
    persuaded: Optional[bool] = None
    objective_start: float = float("nan")  # identity signal
    objective_end: float = float("nan")
    seconds: float = 0.0


@dataclass
class RunResult:
    system_cost: float
    traveler_costs: dict
    decisions: list
    timeline: list  # (tick, edge, count) for nonzero counts
    signals: list  # (tick, traveler, edge, row, column, probability)
    ticks: int
    conservation_checks: int = 0

    def lori_decisions(self) -> list:
        return [d for d in self.decisions if d.policy == "lori"]

    def persuasion_rate(self) -> float:
        flags = [d.persuaded for d in self.lori_decisions() if d.persuaded is not None]
        return float(np.mean(flags)) if flags else float("nan")

    def mean_traveler_cost(self, ids: Optional[Sequence[int]] = None) -> float:
        ids = sorted(self.traveler_costs) if ids is None else ids
        return float(np.mean([self.traveler_costs[i] for i in ids]))


class Simulation:
    def __init__(self, graph: ExpandedGraph, cost_model: CostModel, demand: Sequence[TravelerSpec],
                 params: SimulationParams = SimulationParams()):
        ids = [d.id for d in demand]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate traveler ids")
        locs = set(graph.locations)
        for d in demand:
            if d.origin not in locs or d.dest not in locs:
                raise ValueError(f"traveler {d.id}: unknown location")
        self.graph = graph
        self.cost_model = cost_model
        self.demand = {d.id: d for d in demand}
        self.params = params
        self.state = NetworkState.empty(graph)
        self.rng = np.random.default_rng(params.seed)
        self.beliefs: dict = {d.id: {} for d in demand}
        self.realized = 0.0
        self.decisions: list = []
        self.timeline: list = []
        self.signals: list = []
        self.checks = 0
        self._paths: dict = {}
        self._g: dict = {}

    # ----- helpers -------------------------------------------------------------
    def _position(self, tid):
        rec = self.state.travelers[tid]
        origin = rec.node if rec.node is not None else rec.origin
        after = bool(rec.prefix) and self.graph.edges[rec.prefix[-1]].is_switch
        return origin, rec.dest, after

    def path_set(self, tid) -> tuple:
        key = self._position(tid)
        if key not in self._paths:
            origin, dest, after = key
            self._paths[key] = enumerate_paths(self.graph, origin, dest, self.params.max_hops,
                                               self.params.no_double_switch, after, tid).paths
        return self._paths[key]

    def prior(self, tid, paths) -> dict:
        edges = sorted({e for p in paths for e in p if self.graph.edges[e].attrs.congestible})
        out = {}
        for e in edges:
            c = self.graph.edges[e].attrs.capacity
            out[e] = self.beliefs[tid].get(e, np.full(c + 1, 1.0 / (c + 1)))
        return out

    def fixed_paths(self, players) -> dict:
        out = {}
        for tid, rec in self.state.travelers.items():
            if rec.done or tid in players:
                continue
            if rec.en_route:
                out[tid] = (rec.edge,) + tuple(rec.plan)
            elif rec.plan:
                out[tid] = tuple(rec.plan)
        return out

    def _flow(self, n_max):
        if n_max not in self._g:
            self._g[n_max] = self.cost_model.flow_table(self.params.system_weights, n_max)
        return self._g[n_max]

    def _commit(self, tid, path):
        rec = self.state.travelers[tid]
        edge = path[0]
        occ = int(self.state.counts[edge])
        commit_edge(self.state, tid, edge, self.cost_model, plan=path[1:], inplace=True)
        attrs = self.graph.edges[edge].attrs
        if attrs.congestible and self.params.prior == "observed":
            v = np.zeros(attrs.capacity + 1)
            v[min(occ, attrs.capacity)] = 1.0
            self.beliefs[tid][edge] = v
        return rec

    # ----- decisions -------------------------------------------------------------
    def decide_sssp(self, tid) -> DecisionRecord:
        t0 = time.perf_counter()
        rec = self.state.travelers[tid]
        if self.params.sssp.recompute or not rec.plan:
            path = sssp_route(self.state, tid, self.params.sssp, self.cost_model, self.params.no_double_switch)
        else:
            path = tuple(rec.plan)
        self._commit(tid, path)
        return DecisionRecord(self.state.time, tid, "sssp", tuple(path), seconds=time.perf_counter() - t0)

    def decision_context(self, tid) -> DecisionContext:
        t = self.state.time
        players = [j for j in self.state.active_ids() if j >= tid and self.demand[j].policy == "lori"]
        path_sets = [self.path_set(j) for j in players]
        beliefs = {j: self.prior(j, ps) for j, ps in zip(players, path_sets)}
        objective = SystemObjective(self.params.system_weights, self.params.horizon, self.realized)
        weights = {j: self.demand[j].weights for j in self.demand}
        qre = replace(self.params.qre, seed=_derive_seed(self.params.seed, t, tid, 1))
        return DecisionContext(self.state, tid, players, path_sets, self.fixed_paths(players), beliefs,
                               self.cost_model, weights, objective, qre, self.params.window)

    def decide_lori(self, tid) -> DecisionRecord:
        t0 = time.perf_counter()
        t = self.state.time
        ctx = self.decision_context(tid)
        opt = replace(self.params.optimizer, seed=_derive_seed(self.params.seed, t, tid, 0))
        res = optimize_signal(ctx, opt)
        pi = res.profile[ctx.k]
        check_distribution(pi, "path choice distribution")
        paths = ctx.path_sets[ctx.k]
        idx = choose_path(pi, self.params.choice, self.rng)
        persuaded = bool(idx == int(np.argmin(ctx.path_system_costs(res.profile))))
        post = bayes_update(ctx.prior, res.signal)
        self.beliefs[tid].update(post)
        for e in res.signal.edges:
            if e in {x for p in paths for x in p}:
                self.signals.extend((t, tid, e, r, c, float(v))
                                    for r, row in enumerate(res.signal[e]) for c, v in enumerate(row))
        self._commit(tid, paths[idx])
        return DecisionRecord(t, tid, "lori", tuple(paths[idx]), len(paths), len(ctx.players), persuaded,
                              res.start_objectives["identity"], res.objective, time.perf_counter() - t0)

    # ----- main loop -------------------------------------------------------------
    def step(self) -> dict:
        """One tick: admit new travelers, decide for each active traveler in id
        order, book the tick's system cost and process arrivals."""
        t = self.state.time
        for d in sorted(self.demand.values(), key=lambda d: d.id):
            if d.start == t:
                self.state.add_traveler(d.id, d.origin, d.dest)
        chosen = {}
        for tid in self.state.active_ids():
            rec = self.state.travelers[tid]
            if not rec.active:
                continue
            if self.demand[tid].policy == "sssp":
                dec = self.decide_sssp(tid)
            else:
                dec = self.decide_lori(tid)
            self.decisions.append(dec)
            chosen[tid] = dec.path[0]
        counts = self.state.counts
        self.realized += float(self._flow(int(counts.max()))[np.arange(len(counts)), counts].sum())
        self.timeline.extend((t, e, int(counts[e])) for e in np.flatnonzero(counts))
        self.state.check_conservation()
        en_route = len(self.state.en_route_ids())
        if int(counts.sum()) != en_route:
            raise AssertionError("edge counts disagree with en-route travelers")
        self.checks += 1
        advance(self.state, t + 1, inplace=True)
        return chosen

    def finished(self) -> bool:
        pending = any(d.start >= self.state.time for d in self.demand.values()
                      if d.id not in self.state.travelers)
        return not pending and all(r.done for r in self.state.travelers.values())

    def traveler_costs(self) -> dict:
        out = {}
        for tid, rec in self.state.travelers.items():
            z = self.cost_model.weighted_table(self.demand[tid].weights,
                                               max([o for _, _, o in rec.entries], default=0))
            out[tid] = float(sum(z[e, o] for e, _, o in rec.entries))
        return out

    def run(self) -> RunResult:
        while not self.finished():
            if self.state.time >= self.params.max_ticks:
                raise RuntimeError(f"simulation did not finish within {self.params.max_ticks} ticks")
            self.step()
        return RunResult(self.realized, self.traveler_costs(), self.decisions, self.timeline, self.signals,
                         self.state.time, self.checks)


def lori_step(sim: Simulation) -> dict:
    """Advance a simulation by one tick; returns each deciding traveler's chosen edge."""
    return sim.step()


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])
