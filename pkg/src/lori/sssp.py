"""Single-attribute shortest-path routing: the navigation baseline."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .costs import CostModel, WeightProfile
from .graph import NoPathError, enumerate_paths
from .state import NetworkState

WEIGHT_ATTRIBUTES = ("travel_time", "co_emissions", "weighted")


@dataclass(frozen=True)
class SsspPolicy:
    weight: str = "travel_time"
    weights: Optional[WeightProfile] = None  # used when weight == "weighted"
    static_weights: bool = False  # evaluate every edge empty instead of at current counts
    recompute: bool = True  # replan at every vertex; otherwise keep the first plan

    def __post_init__(self):
        if self.weight not in WEIGHT_ATTRIBUTES:
            raise ValueError(f"weight must be one of {WEIGHT_ATTRIBUTES}")
        if self.weight == "weighted" and self.weights is None:
            raise ValueError("weighted SSSP needs a WeightProfile")


def edge_weights(state: NetworkState, cost_model: CostModel, policy: SsspPolicy) -> np.ndarray:
    occ = np.zeros_like(state.counts) if policy.static_weights else state.counts
    n_max = int(occ.max()) if len(occ) else 0
    tab = cost_model.attribute_table(n_max)[np.arange(len(occ)), occ]  # (E, K)
    if policy.weight == "travel_time":
        return tab[:, 0].copy()
    if policy.weight == "co_emissions":
        return tab[:, 1].copy()
    return tab @ policy.weights.as_array()


def _dist_to(graph, targets, w, no_double_switch=True):
    """Reverse Dijkstra from every copy of the destination.

    States are (vertex, arrived by a switch); with `no_double_switch` a
    switch edge cannot leave a vertex entered by a switch.
    """
    rev: dict = {}
    for e in graph.edges:
        rev.setdefault(e.head, []).append(e.id)
    dist = {(n, f): np.inf for n in graph.nodes for f in (False, True)}
    heap = []
    for t in targets:
        for f in (False, True):
            dist[(t, f)] = 0.0
            heap.append((0.0, t, f))
    heapq.heapify(heap)
    while heap:
        d, v, g = heapq.heappop(heap)
        if d > dist[(v, g)]:
            continue
        for eid in rev.get(v, ()):
            e = graph.edges[eid]
            if e.is_switch != g:
                continue
            nd = d + w[eid]
            for f in (False, True):
                if no_double_switch and f and e.is_switch:
                    continue
                if nd < dist[(e.tail, f)]:
                    dist[(e.tail, f)] = nd
                    heapq.heappush(heap, (nd, e.tail, f))
    return dist


def shortest_path(graph, origin, dest: str, w: np.ndarray, no_double_switch: bool = True,
                  after_switch: bool = False, traveler=None) -> tuple:
    """Minimum-weight simple path; ties broken by the lexicographically smallest edge-id sequence.

    `origin` is a location (any modal copy may start, without a leading
    switch) or a (location, mode) vertex.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("negative edge weights")
    dist = _dist_to(graph, graph.copies(dest), w, no_double_switch)
    if isinstance(origin, str):
        sources, free_start = graph.copies(origin), True
    else:
        sources, free_start = (origin,), False
    flag0 = bool(after_switch) and not free_start
    best = min((dist.get((s, flag0), np.inf) for s in sources), default=np.inf)
    if not np.isfinite(best):
        raise NoPathError(traveler, origin, dest)

    def close(a, b):
        return abs(a - b) <= 1e-9 * max(1.0, abs(a))

    def dfs(node, flag, visited):
        if node[0] == dest:
            return []
        for eid in graph.out_edges(node):
            e = graph.edges[eid]
            if e.is_switch and ((len(visited) == 1 and free_start) or (no_double_switch and flag)):
                continue
            if e.head in visited or (e.head[0] == dest and e.is_switch):
                continue
            if not close(dist[(node, flag)], w[eid] + dist[(e.head, e.is_switch)]):
                continue
            rest = dfs(e.head, e.is_switch, visited + (e.head,))
            if rest is not None:
                return [eid] + rest
        return None

    cands = []
    for s in sources:
        if close(dist.get((s, flag0), np.inf), best):
            p = dfs(s, flag0, (s,))
            if p:
                cands.append(tuple(p))
    if cands:
        return min(cands)
    # the best walk revisits a vertex; fall back to the simple paths themselves
    paths = enumerate_paths(graph, origin, dest, len(graph), no_double_switch, after_switch, traveler).paths
    return min(paths, key=lambda p: (float(sum(w[e] for e in p)), p))


def sssp_route(state: NetworkState, traveler: int, policy: SsspPolicy, cost_model: CostModel,
               no_double_switch: bool = True) -> tuple:
    """Shortest path from the traveler's position with weights at current occupancies."""
    rec = state.travelers[traveler]
    if not rec.active or rec.done:
        raise ValueError(f"traveler {traveler} is not active")
    w = edge_weights(state, cost_model, policy)
    origin = rec.node if rec.node is not None else rec.origin
    after = bool(rec.prefix) and state.graph.edges[rec.prefix[-1]].is_switch
    return shortest_path(state.graph, origin, rec.dest, w, no_double_switch, after, traveler)
