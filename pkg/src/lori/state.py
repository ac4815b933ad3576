"""Network state, traveler activity and the event-driven state transition."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .costs import CostModel
from .graph import ExpandedGraph, Node


class IllegalMoveError(ValueError):
    pass


class IllegalPathError(ValueError):
    pass


@dataclass
class TravelerRecord:
    """One traveler's position and history.

    An active traveler sits at a vertex (`node`, or only `location` before the
    first move, when any modal copy of the origin may be used). An inactive
    traveler is on `edge` until tick `arrival`.
    """

    id: int
    origin: str
    dest: str
    node: Optional[Node] = None
    edge: Optional[int] = None
    arrival: Optional[int] = None
    active: bool = True
    done: bool = False
    prefix: list = field(default_factory=list)
    entries: list = field(default_factory=list)  # (edge, entry tick, others on edge at entry)
    plan: tuple = ()  # edges still to take after the current position

    @property
    def location(self) -> str:
        if self.node is not None:
            return self.node[0]
        return self.origin

    @property
    def en_route(self) -> bool:
        return not self.active and not self.done

    def copy(self) -> "TravelerRecord":
        return replace(self, prefix=list(self.prefix), entries=list(self.entries))


@dataclass
class NetworkState:
    graph: ExpandedGraph
    time: int
    counts: np.ndarray
    travelers: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, graph: ExpandedGraph, time: int = 0) -> "NetworkState":
        return cls(graph, time, np.zeros(len(graph), dtype=int), {})

    def copy(self) -> "NetworkState":
        return NetworkState(self.graph, self.time, self.counts.copy(),
                            {k: v.copy() for k, v in self.travelers.items()})

    def add_traveler(self, traveler_id: int, origin: str, dest: str) -> None:
        if traveler_id in self.travelers:
            raise ValueError(f"traveler {traveler_id} already present")
        self.travelers[traveler_id] = TravelerRecord(traveler_id, origin, dest)

    def active_ids(self) -> list:
        return sorted(i for i, r in self.travelers.items() if r.active and not r.done)

    def en_route_ids(self) -> list:
        return sorted(i for i, r in self.travelers.items() if r.en_route)

    def check_conservation(self) -> None:
        """Edge counts must equal the number of travelers on each edge."""
        expect = np.zeros_like(self.counts)
        for r in self.travelers.values():
            if r.done:
                continue
            if r.active == (r.edge is not None):
                raise AssertionError(f"traveler {r.id} activity flag disagrees with position")
            if r.en_route:
                expect[r.edge] += 1
        if np.any(self.counts < 0) or not np.array_equal(expect, self.counts):
            raise AssertionError(f"edge counts {self.counts.tolist()} != traveler positions {expect.tolist()}")


def _check_tail(graph: ExpandedGraph, rec: TravelerRecord, edge: int) -> None:
    e = graph.edges[edge]
    if rec.node is None:
        ok = e.tail[0] == rec.origin
    else:
        ok = e.tail == rec.node
    if not ok:
        raise IllegalMoveError(f"traveler {rec.id} at {rec.node or rec.origin} cannot take edge {edge} from {e.tail}")


def commit_edge(state: NetworkState, traveler: int, edge: int, cost_model: CostModel,
                plan: Sequence[int] = (), inplace: bool = False) -> NetworkState:
    """Put an active traveler on `edge`; its own time uses the count before it joins."""
    s = state if inplace else state.copy()
    rec = s.travelers[traveler]
    if not rec.active or rec.done:
        raise IllegalMoveError(f"traveler {traveler} is not active")
    _check_tail(s.graph, rec, edge)
    occ = int(s.counts[edge])
    rec.arrival = s.time + cost_model.ticks(edge, occ)
    s.counts[edge] += 1
    rec.active = False
    rec.edge = edge
    rec.node = None
    rec.prefix.append(edge)
    rec.entries.append((edge, s.time, occ))
    rec.plan = tuple(plan)
    return s


def advance(state: NetworkState, until: int, inplace: bool = False) -> NetworkState:
    """Process every arrival due by `until`, in (tick, traveler id) order."""
    if until < state.time:
        raise ValueError("cannot move time backwards")
    s = state if inplace else state.copy()
    due = sorted((r.arrival, r.id) for r in s.travelers.values() if r.en_route and r.arrival <= until)
    for _, tid in due:
        rec = s.travelers[tid]
        head = s.graph.edges[rec.edge].head
        s.counts[rec.edge] -= 1
        rec.edge = None
        rec.arrival = None
        rec.node = head
        rec.active = True
        if head[0] == rec.dest:
            rec.done = True
            rec.active = False
    s.time = until
    return s


@dataclass(frozen=True)
class Traversal:
    traveler: int
    edge: int
    enter: int
    exit: int
    occupancy: int  # others on the edge when entering


@dataclass
class TransitionTimeline:
    times: list
    counts: np.ndarray  # (n_snapshots, E)
    traversals: dict  # traveler -> list[Traversal]

    def __len__(self):
        return len(self.times)

    def count_at(self, t: int) -> np.ndarray:
        """Counts in effect at tick t (after all events at t)."""
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        if i < 0:
            return None
        return self.counts[i]

    def others_at_entry(self, traveler: int, window: int) -> list:
        """For each traversal of `traveler`: the largest number of other travelers
        on that edge over snapshots within `window` ticks of the entry tick
        (the snapshot in effect at entry is always included)."""
        times = np.asarray(self.times)
        out = []
        for tr in self.traversals.get(traveler, ()):
            lo = np.searchsorted(times, tr.enter - window, side="left")
            hi = np.searchsorted(times, tr.enter + window, side="right")
            at = np.searchsorted(times, tr.enter, side="right") - 1
            idx = np.arange(max(min(lo, at), 0), max(hi, at + 1))
            if idx.size == 0:
                out.append((tr.edge, tr.occupancy))
                continue
            col = self.counts[idx, tr.edge]
            t = times[idx]
            mine = (t >= tr.enter) & (t < tr.exit)
            out.append((tr.edge, int(np.max(col - mine))))
        return out


def project_timeline(state: NetworkState, committed_paths: Mapping[int, Sequence[int]],
                     cost_model: CostModel) -> TransitionTimeline:
    """Replay travelers forward along fixed paths.

    An active traveler's path starts at its vertex; an en-route traveler's
    path starts with the edge it is on. En-route travelers without a path
    leave the network when their edge ends. Snapshots are taken after all
    events of a tick, so event times are strictly increasing.
    """
    graph = state.graph
    counts = state.counts.copy()
    heap = []
    remaining: dict = {}
    current: dict = {}
    traversals: dict = {}
    for tid, path in committed_paths.items():
        rec = state.travelers[tid]
        path = tuple(path)
        if rec.done:
            if path:
                raise IllegalPathError(f"traveler {tid} already finished")
            continue
        if rec.active:
            if not path:
                continue
            _check_path_start(graph, rec, path)
            remaining[tid] = path
            current[tid] = None
            heapq.heappush(heap, (state.time, tid))
        else:
            if not path or path[0] != rec.edge:
                raise IllegalPathError(f"traveler {tid} path must start with its current edge {rec.edge}")
            remaining[tid] = path[1:]
            current[tid] = rec.edge
            edge, enter, occ = rec.entries[-1]
            traversals[tid] = [Traversal(tid, edge, enter, rec.arrival, occ)]
            heapq.heappush(heap, (rec.arrival, tid))
    for tid, rec in state.travelers.items():
        if rec.en_route and tid not in committed_paths:
            remaining[tid] = ()
            current[tid] = rec.edge
            heapq.heappush(heap, (rec.arrival, tid))

    times, snaps = [], []
    while heap:
        t = heap[0][0]
        batch = []
        while heap and heap[0][0] == t:
            batch.append(heapq.heappop(heap)[1])
        for tid in sorted(batch):
            e_prev = current[tid]
            if e_prev is not None:
                counts[e_prev] -= 1
            rest = remaining[tid]
            if not rest:
                current[tid] = None
                continue
            nxt = rest[0]
            if e_prev is not None and graph.edges[nxt].tail != graph.edges[e_prev].head:
                raise IllegalPathError(f"traveler {tid} path jumps from edge {e_prev} to {nxt}")
            occ = int(counts[nxt])
            exit_t = t + cost_model.ticks(nxt, occ)
            counts[nxt] += 1
            current[tid] = nxt
            remaining[tid] = rest[1:]
            traversals.setdefault(tid, []).append(Traversal(tid, nxt, t, exit_t, occ))
            heapq.heappush(heap, (exit_t, tid))
        times.append(t)
        snaps.append(counts.copy())
    arr = np.array(snaps, dtype=int) if snaps else np.zeros((0, len(graph)), dtype=int)
    return TransitionTimeline(times, arr, traversals)


def _check_path_start(graph: ExpandedGraph, rec: TravelerRecord, path: Sequence[int]) -> None:
    first = graph.edges[path[0]]
    start_ok = first.tail[0] == rec.origin if rec.node is None else first.tail == rec.node
    if not start_ok:
        raise IllegalPathError(f"traveler {rec.id} path does not start at its position")
    for a, b in zip(path, path[1:]):
        if graph.edges[b].tail != graph.edges[a].head:
            raise IllegalPathError(f"traveler {rec.id} path is discontinuous between edges {a} and {b}")
