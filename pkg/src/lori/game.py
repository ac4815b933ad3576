"""Travelers' normal-form routing game built from joint-profile replays.

Every joint choice of the active players' paths is replayed with all other
travelers held on their fixed paths. For each player the replay gives, per
remaining edge, how many other travelers are projected on that edge around
the entry tick. The cost of an edge is then the traveler's weighted cost
averaged over its belief about the edge count, taking the larger of the
believed and the projected count.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .costs import CostModel, WeightProfile
from .qre import NormalFormGame
from .state import NetworkState, project_timeline


@dataclass
class GameSkeleton:
    players: tuple
    path_sets: tuple
    shape: tuple
    realized: np.ndarray  # (n_players,) cost of already committed edges
    edge_idx: list  # per player (n_profiles, slots), padded with a dummy edge id
    occupancy: list  # per player (n_profiles, slots)
    n_max: int
    replays: int = 0

    @property
    def n_profiles(self) -> int:
        return int(np.prod(self.shape))


def build_skeleton(state: NetworkState, players: Sequence[int], path_sets: Sequence,
                   fixed_paths: Mapping[int, Sequence[int]], cost_model: CostModel,
                   traveler_weights: Mapping[int, WeightProfile], window: int = 10) -> GameSkeleton:
    shape = tuple(len(ps) for ps in path_sets)
    if any(n == 0 for n in shape):
        raise ValueError("every player needs a nonempty path set")
    n_edges = len(state.graph)
    per_player = [[] for _ in players]
    memo = {}
    n_max = 0
    for combo in itertools.product(*(range(n) for n in shape)):
        key = tuple(path_sets[i][c] for i, c in enumerate(combo))
        if key not in memo:
            paths = dict(fixed_paths)
            paths.update(zip(players, key))
            tl = project_timeline(state, paths, cost_model)
            memo[key] = [tl.others_at_entry(tid, window) for tid in players]
        for i, occ in enumerate(memo[key]):
            per_player[i].append(occ)
            if occ:
                n_max = max(n_max, max(o for _, o in occ))

    edge_idx, occupancy = [], []
    for rows in per_player:
        slots = max(len(r) for r in rows)
        ei = np.full((len(rows), slots), n_edges, dtype=int)
        oc = np.zeros((len(rows), slots), dtype=int)
        for k, r in enumerate(rows):
            for s, (e, o) in enumerate(r):
                ei[k, s] = e
                oc[k, s] = o
        edge_idx.append(ei)
        occupancy.append(oc)

    cap_max = max(e.attrs.capacity for e in state.graph.edges if e.attrs.congestible) \
        if any(e.attrs.congestible for e in state.graph.edges) else 0
    prior_occ = [o for tid in players for (_, _, o) in state.travelers[tid].entries]
    n_max = max(n_max, cap_max, *prior_occ, 0)
    realized = np.zeros(len(players))
    for i, tid in enumerate(players):
        entries = state.travelers[tid].entries
        if entries:
            z = cost_model.weighted_table(traveler_weights[tid], n_max)
            realized[i] = sum(z[e, o] for e, _, o in entries)
    return GameSkeleton(tuple(players), tuple(path_sets), shape, realized, edge_idx, occupancy,
                        n_max, replays=len(memo))


def expected_edge_costs(z: np.ndarray, belief: Mapping[int, np.ndarray]) -> np.ndarray:
    """(E + 1, n_max + 1) table of sum_lam phi(lam) z(e, max(lam, n)).

    Edges without a belief keep z(e, n). The extra last row is the zero-cost
    padding edge.
    """
    n_edges, width = z.shape
    out = np.zeros((n_edges + 1, width))
    out[:n_edges] = z
    n = np.arange(width)
    for e, phi in belief.items():
        phi = np.asarray(phi, dtype=float)
        m = len(phi)
        if m > width:
            raise ValueError(f"belief on edge {e} is wider than the cost table")
        zl = z[e, :m]
        below = np.cumsum(phi)[np.minimum(n, m - 1)]  # mass with lam <= n
        pz = np.cumsum(phi * zl)
        tail = pz[-1] - pz[np.minimum(n, m - 1)]  # sum over lam > n of phi z
        out[e] = below * z[e] + tail
    return out


def player_costs(skel: GameSkeleton, i: int, table: np.ndarray) -> np.ndarray:
    vals = table[skel.edge_idx[i], skel.occupancy[i]].sum(axis=1)
    return (skel.realized[i] + vals).reshape(skel.shape)


def traveler_table(cost_model: CostModel, weights: WeightProfile, skel: GameSkeleton) -> np.ndarray:
    return cost_model.weighted_table(weights, skel.n_max)


def build_cost_matrix(state: NetworkState, beliefs: Mapping[int, Mapping[int, np.ndarray]],
                      active: Sequence[int], path_sets: Sequence, fixed_paths: Mapping[int, Sequence[int]],
                      cost_model: CostModel, traveler_weights: Mapping[int, WeightProfile],
                      window: int = 10) -> NormalFormGame:
    """Cost tensor of the active players; everyone else stays on `fixed_paths`."""
    skel = build_skeleton(state, active, path_sets, fixed_paths, cost_model, traveler_weights, window)
    costs = []
    for i, tid in enumerate(active):
        z = traveler_table(cost_model, traveler_weights[tid], skel)
        costs.append(player_costs(skel, i, expected_edge_costs(z, beliefs.get(tid, {}))))
    return NormalFormGame(costs, tuple(active), tuple(path_sets))
