"""System-side signal optimization for one deciding traveler.

A `DecisionContext` holds everything about a decision that does not depend on
the signal: the travelers' game skeleton, the other players' costs, each
player's presence schedule per path and the fixed travelers' forecast counts.
Evaluating a candidate signal then takes one Bayes update, one cost tensor
rebuild for the deciding traveler and one QRE solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .costs import CostModel, WeightProfile
from .game import build_skeleton, expected_edge_costs, player_costs
from .qre import MixedProfile, NormalFormGame, QreParams, solve_qre
from .signaling import ROW_TOL, Signal, bayes_update, check_distribution, poisson_binomial, presence_matrix
from .state import NetworkState, project_timeline


class InfeasibleSignalError(AssertionError):
    pass


@dataclass(frozen=True)
class SystemObjective:
    weights: WeightProfile
    horizon: Optional[int] = None  # future ticks; None picks twice the time to clear the network
    realized: float = 0.0  # system cost accumulated before the current tick


@dataclass(frozen=True)
class OptimizerParams:
    restarts: int = 3
    max_iter: int = 25
    step: float = 1.0
    fd_eps: float = 1e-4
    tol: float = 1e-6
    seed: int = 0
    max_backtracks: int = 20
    warm_start: bool = True

    def __post_init__(self):
        if self.restarts < 0 or self.max_iter < 0:
            raise ValueError("restarts and max_iter must be >= 0")
        if min(self.step, self.fd_eps, self.tol) <= 0:
            raise ValueError("step, fd_eps and tol must be positive")


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of `v` onto the probability simplex."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n = v.shape[1]
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    k = np.arange(1, n + 1)
    cond = u - css / k > 0
    r = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(len(v)), r] / (r + 1)
    return np.maximum(v - theta[:, None], 0.0)


class DecisionContext:
    """One traveler's signaling problem with every other traveler held fixed.

    `players` are the travelers whose choices are modeled as a game (the
    deciding traveler among them); `fixed_paths` holds everybody else.
    `beliefs` maps each player to its current belief per congestible edge.
    """

    def __init__(self, state: NetworkState, traveler: int, players: Sequence[int], path_sets: Sequence,
                 fixed_paths: Mapping[int, Sequence[int]], beliefs: Mapping[int, Mapping[int, np.ndarray]],
                 cost_model: CostModel, traveler_weights: Mapping[int, WeightProfile],
                 objective: SystemObjective, qre_params: QreParams = QreParams(), window: int = 10):
        self.state = state
        self.traveler = traveler
        self.players = tuple(players)
        self.k = self.players.index(traveler)
        self.path_sets = tuple(path_sets)
        self.cost_model = cost_model
        self.objective = objective
        self.qre_params = qre_params
        self.prior = {e: np.asarray(v, dtype=float) for e, v in beliefs.get(traveler, {}).items()}
        for e, v in self.prior.items():
            check_distribution(v, f"prior on edge {e}")

        self.skeleton = build_skeleton(state, self.players, self.path_sets, fixed_paths, cost_model,
                                       traveler_weights, window)
        sk = self.skeleton
        self.z = [cost_model.weighted_table(traveler_weights[t], sk.n_max) for t in self.players]
        self.base_costs = [player_costs(sk, i, expected_edge_costs(self.z[i], beliefs.get(t, {})))
                           for i, t in enumerate(self.players)]

        t0 = state.time
        base_tl = project_timeline(state, fixed_paths, cost_model)
        schedules = []
        end = t0
        for i, tid in enumerate(self.players):
            per_path = []
            for path in self.path_sets[i]:
                paths = dict(fixed_paths)
                paths[tid] = path
                tl = project_timeline(state, paths, cost_model)
                sched = [(tr.edge, tr.enter, tr.exit) for tr in tl.traversals.get(tid, ())]
                per_path.append(sched)
                if sched:
                    end = max(end, sched[-1][2])
            schedules.append(per_path)
        if base_tl.times:
            end = max(end, base_tl.times[-1])
        self.horizon = objective.horizon if objective.horizon is not None else max(1, 2 * (end - t0))
        n_edges = len(state.graph)
        H = self.horizon
        self.presence = [presence_matrix(s, n_edges, t0, H) for s in schedules]

        base = np.zeros((n_edges, H), dtype=int)
        for h in range(H):
            c = base_tl.count_at(t0 + h)
            base[:, h] = state.counts if c is None else c
        self.base_counts = base
        caps = np.asarray(state.graph.capacities())
        n_pl = len(self.players)
        g = cost_model.flow_table(objective.weights, int(caps.max()))
        idx = np.minimum(base[:, :, None] + np.arange(n_pl + 1)[None, None, :], caps[:, None, None])
        self.G = np.take_along_axis(g[:, None, :], idx, axis=2)  # (E, H, n_players + 1)
        self.capacities = {e: int(caps[e]) for e in self.prior}
        self.evaluations = 0
        self._last = None

    # ----- pieces of the objective -----------------------------------------
    def game(self, posterior: Mapping[int, np.ndarray]) -> NormalFormGame:
        costs = list(self.base_costs)
        costs[self.k] = player_costs(self.skeleton, self.k, expected_edge_costs(self.z[self.k], posterior))
        return NormalFormGame(costs, self.players, self.path_sets)

    def profile(self, signal: Signal, warm_start: Optional[MixedProfile] = None) -> MixedProfile:
        post = bayes_update(self.prior, signal)
        for e, v in post.items():
            check_distribution(v, f"posterior on edge {e}")
        return solve_qre(self.game(post), self.qre_params, warm_start).profile

    def rho(self, profile: MixedProfile) -> np.ndarray:
        """(n_players, E, H) presence probabilities."""
        return np.stack([np.tensordot(profile[i], self.presence[i], axes=(0, 0))
                         for i in range(len(self.players))])

    def psi(self, profile: MixedProfile) -> np.ndarray:
        """(E, H, n_players + 1) distribution of the players' count on each edge."""
        psi = poisson_binomial(self.rho(profile))
        check_distribution(psi, "occupancy forecast")
        return psi

    def future_cost(self, profile: MixedProfile) -> float:
        return float(np.sum(self.psi(profile) * self.G))

    def system_cost(self, signal: Signal, warm_start: Optional[MixedProfile] = None) -> float:
        prof = self.profile(signal, warm_start)
        self._last = prof
        self.evaluations += 1
        return self.objective.realized + self.future_cost(prof)

    def path_system_costs(self, profile: MixedProfile) -> np.ndarray:
        """System cost when the deciding traveler takes each path for sure, others as in `profile`."""
        out = []
        for p in range(len(self.path_sets[self.k])):
            vecs = [v.copy() for v in profile.vectors]
            vecs[self.k] = np.eye(len(vecs[self.k]))[p]
            out.append(self.objective.realized + self.future_cost(MixedProfile(vecs)))
        return np.array(out)

    # ----- signal parameterization -----------------------------------------
    def relevant_rows(self) -> list:
        """(edge, row) pairs the objective depends on: rows with prior mass on
        congestible edges along the deciding traveler's paths."""
        used = {e for path in self.path_sets[self.k] for e in path}
        rows = []
        for e in sorted(self.prior):
            if e not in used:
                continue
            for r in np.flatnonzero(self.prior[e] > 0):
                rows.append((e, int(r)))
        return rows


@dataclass
class OptimizeResult:
    signal: Signal
    objective: float
    profile: MixedProfile
    start_objectives: dict = field(default_factory=dict)
    history: list = field(default_factory=list)  # accepted objective values of the winning start
    evaluations: int = 0


class _Parameterization:
    def __init__(self, ctx: DecisionContext):
        self.ctx = ctx
        self.rows = ctx.relevant_rows()
        self.width = [ctx.capacities[e] + 1 for e, _ in self.rows]
        self.cuts = np.cumsum(self.width)[:-1]
        offsets = np.concatenate([[0], np.cumsum(self.width)]).astype(int)
        self.groups = {}  # row width -> flat indices, one row per line
        for i, w in enumerate(self.width):
            self.groups.setdefault(w, []).append(np.arange(offsets[i], offsets[i] + w))
        self.groups = {w: np.array(ix) for w, ix in self.groups.items()}

    def split(self, x):
        return np.split(x, self.cuts) if self.rows else []

    def project(self, x):
        out = np.empty_like(x)
        for ix in self.groups.values():
            out[ix] = project_simplex(x[ix])
        return out

    def signal(self, x) -> Signal:
        mats = {e: np.eye(c + 1) for e, c in self.ctx.capacities.items()}
        for (e, r), row in zip(self.rows, self.split(x)):
            mats[e] = mats[e].copy()
            mats[e][r] = row
        sig = Signal(mats, check=False)
        if sig.max_row_error() > ROW_TOL or any(np.any(m < 0) for m in sig.matrices.values()):
            raise InfeasibleSignalError(f"signal rows off the simplex by {sig.max_row_error():.3g}")
        return sig

    def start(self, kind: str, rng=None) -> np.ndarray:
        parts = []
        for (e, r), w in zip(self.rows, self.width):
            if kind == "identity":
                parts.append(np.eye(w)[r])
            elif kind == "uniform":
                parts.append(np.full(w, 1.0 / w))
            else:
                parts.append(rng.dirichlet(np.ones(w)))
        return np.concatenate(parts) if parts else np.zeros(0)


def optimize_signal(ctx: DecisionContext, params: OptimizerParams = OptimizerParams()) -> OptimizeResult:
    """Best local minimizer of the system cost over right-stochastic signals.

    Projected gradient descent with forward-difference gradients, run from
    the identity signal, the uniform signal and `params.restarts` random
    ones. Steps are accepted only when they lower the objective.
    """
    par = _Parameterization(ctx)
    rng = np.random.default_rng(params.seed)
    starts = [("identity", par.start("identity")), ("uniform", par.start("uniform"))]
    starts += [(f"random{i}", par.start("random", rng)) for i in range(params.restarts)]

    def evaluate(x, warm):
        val = ctx.system_cost(par.signal(x), warm if params.warm_start else None)
        return val, ctx._last

    best = None
    start_objectives = {}
    for name, x in starts:
        f, prof = evaluate(x, None)
        start_objectives[name] = f
        history = [f]
        if par.rows:
            x, f, prof = _descend(par, evaluate, x, f, prof, params, history)
        if best is None or f < best[1] - 1e-12:
            best = (x, f, prof, history)
    x, f, prof, history = best
    return OptimizeResult(par.signal(x), f, prof, start_objectives, history, ctx.evaluations)


def _descend(par, evaluate, x, f, prof, params, history):
    step = params.step
    for _ in range(params.max_iter):
        grad = np.zeros_like(x)
        for j in range(len(x)):
            xp = x.copy()
            xp[j] += params.fd_eps
            xp = par.project(xp)
            fj, _ = evaluate(xp, prof)
            grad[j] = (fj - f) / params.fd_eps
        if not np.all(np.isfinite(grad)) or np.max(np.abs(grad)) == 0.0:
            break
        s = step
        accepted = False
        for _ in range(params.max_backtracks):
            xn = par.project(x - s * grad)
            if np.max(np.abs(xn - x)) < 1e-12:
                break
            fn, pn = evaluate(xn, prof)
            if fn < f:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        gain = f - fn
        x, f, prof = xn, fn, pn
        history.append(f)
        step = min(4 * s, 1e6 * params.step)
        if gain < params.tol * (1.0 + abs(f)):
            break
    return x, f, prof


def choose_path(profile_vec: np.ndarray, mode: str, rng: np.random.Generator) -> int:
    vec = np.asarray(profile_vec, dtype=float)
    if mode == "mode":
        return int(np.argmax(vec))
    if mode == "sample":
        return int(rng.choice(len(vec), p=vec / vec.sum()))
    raise ValueError(f"unknown choice rule {mode!r}")

