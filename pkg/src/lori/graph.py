"""Multimodal network: physical description, layered expansion and path enumeration.

Locations are plain strings. The expanded graph has one vertex per
(location, mode) pair; travel edges stay inside a mode layer and switch
edges connect two modal copies of the same location.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path as FsPath
from typing import Iterable, Sequence, Union

import yaml

TRAVEL = "travel"
SWITCH = "switch"
MODELS = ("road", "transit", "walk")

Node = tuple[str, str]  # (location, mode)
Path = tuple[int, ...]


class ConfigurationError(ValueError):
    pass


class NoPathError(LookupError):
    def __init__(self, traveler, origin, dest):
        super().__init__(f"traveler {traveler}: no path from {origin!r} to {dest!r}")
        self.traveler = traveler


@dataclass(frozen=True)
class EdgeAttributes:
    """Static per-edge data.

    `model` selects the cost model: ``road`` edges use BPR time and the
    Wallace emission curve, ``transit`` and ``walk`` edges use `fixed_time`,
    ``switch`` edges are mode transfers.
    """

    mode: str
    model: str
    free_flow_time: float = 0.0
    capacity: int = 1
    length_km: float = 0.0
    fixed_time: float = 0.0
    kind: str = TRAVEL

    def __post_init__(self):
        if self.kind not in (TRAVEL, SWITCH):
            raise ConfigurationError(f"unknown edge kind {self.kind!r}")
        if self.kind == TRAVEL and self.model not in MODELS:
            raise ConfigurationError(f"unknown mode model {self.model!r}")
        if self.capacity < 1:
            raise ConfigurationError("capacity must be >= 1")
        if self.model == "road" and self.free_flow_time <= 0:
            raise ConfigurationError("road edges need free_flow_time > 0")
        if self.length_km < 0:
            raise ConfigurationError("negative edge length")

    @property
    def congestible(self) -> bool:
        return self.kind == TRAVEL and self.model == "road"


@dataclass(frozen=True)
class PhysicalNetwork:
    locations: tuple[str, ...]
    modes: dict  # mode name -> model
    edges: dict  # mode name -> tuple of (tail, head, EdgeAttributes)

    def __post_init__(self):
        if len(set(self.modes)) != len(self.modes):
            raise ConfigurationError("duplicate mode identifiers")
        known = set(self.locations)
        for mode, edges in self.edges.items():
            if mode not in self.modes:
                raise ConfigurationError(f"edges given for undeclared mode {mode!r}")
            for tail, head, _ in edges:
                if tail not in known or head not in known:
                    raise ConfigurationError(f"{mode} edge {tail}->{head} references an unknown location")
                if tail == head:
                    raise ConfigurationError(f"self loop {tail}->{head} in mode {mode}")


@dataclass(frozen=True)
class SwitchSpec:
    time: float = 1.0
    capacity: int = 64
    suppress: frozenset = frozenset()


@dataclass(frozen=True)
class Edge:
    id: int
    tail: Node
    head: Node
    attrs: EdgeAttributes

    @property
    def is_switch(self) -> bool:
        return self.attrs.kind == SWITCH


@dataclass(frozen=True)
class PathSet:
    traveler: object
    paths: tuple

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def __getitem__(self, i):
        return self.paths[i]


class ExpandedGraph:
    """Immutable multi-layered graph with dense edge ids."""

    def __init__(self, edges: Sequence[Edge]):
        edges = tuple(sorted(edges, key=lambda e: e.id))
        if [e.id for e in edges] != list(range(len(edges))):
            raise ConfigurationError("edge ids must be a bijection onto 0..n-1")
        for e in edges:
            if e.is_switch:
                if e.tail[0] != e.head[0] or e.tail[1] == e.head[1]:
                    raise ConfigurationError(f"switch edge {e.id} must join two modes of one location")
            elif e.tail[1] != e.head[1] or e.tail[1] != e.attrs.mode:
                raise ConfigurationError(f"travel edge {e.id} leaves its mode layer")
        self.edges = edges
        nodes = set()
        out: dict = {}
        for e in edges:
            nodes.update((e.tail, e.head))
            out.setdefault(e.tail, []).append(e.id)
        self.nodes = tuple(sorted(nodes))
        self._out = {n: tuple(sorted(ids)) for n, ids in out.items()}
        self.locations = tuple(sorted({n[0] for n in self.nodes}))
        self._copies = {loc: tuple(n for n in self.nodes if n[0] == loc) for loc in self.locations}

    def __len__(self):
        return len(self.edges)

    def __getitem__(self, i: int) -> Edge:
        return self.edges[i]

    def out_edges(self, node: Node) -> tuple:
        return self._out.get(node, ())

    def copies(self, location: str) -> tuple:
        return self._copies.get(location, ())

    @property
    def switch_edges(self) -> tuple:
        return tuple(e for e in self.edges if e.is_switch)

    def capacities(self):
        return [e.attrs.capacity for e in self.edges]

    def describe(self, path: Iterable[int]) -> str:
        parts = []
        for i in path:
            e = self.edges[i]
            if e.is_switch:
                parts.append(f"[{e.tail[0]}:{e.tail[1]}>{e.head[1]}]")
            else:
                parts.append(f"{e.tail[0]}-{e.attrs.mode}->{e.head[0]}")
        return " ".join(parts)

    def __eq__(self, other):
        return isinstance(other, ExpandedGraph) and self.edges == other.edges

    def __hash__(self):
        return hash(self.edges)


def _edge_sort_key(tail: Node, head: Node, attrs: EdgeAttributes):
    return (tail[1], tail[0], head[0], attrs.kind, head[1])


def expand(network: PhysicalNetwork, switch_spec: SwitchSpec = SwitchSpec()) -> ExpandedGraph:
    """Build the layered graph: one layer per mode plus switch edges at shared locations."""
    raw = []
    seen = set()
    served: dict = {}
    for mode in sorted(network.modes):
        for tail, head, attrs in network.edges.get(mode, ()):
            key = (mode, tail, head)
            if key in seen:
                raise ConfigurationError(f"duplicate {mode} edge {tail}->{head}")
            seen.add(key)
            raw.append(((tail, mode), (head, mode), attrs))
            served.setdefault(tail, set()).add(mode)
            served.setdefault(head, set()).add(mode)
    for loc in sorted(served):
        if loc in switch_spec.suppress:
            continue
        for m1, m2 in permutations(sorted(served[loc]), 2):
            attrs = EdgeAttributes(mode=m1, model="switch", capacity=switch_spec.capacity,
                                   fixed_time=switch_spec.time, kind=SWITCH)
            raw.append(((loc, m1), (loc, m2), attrs))
    raw.sort(key=lambda r: _edge_sort_key(*r))
    return ExpandedGraph([Edge(i, t, h, a) for i, (t, h, a) in enumerate(raw)])


def enumerate_paths(graph: ExpandedGraph, origin: Union[str, Node], dest: str,
                    max_hops: int = 10, no_double_switch: bool = True,
                    after_switch: bool = False, traveler=None) -> PathSet:
    """All simple paths from `origin` to any modal copy of `dest`, at most `max_hops` edges.

    A string origin means any modal copy of that location; a leading switch
    edge is then pointless and skipped. A path ends at the first copy of
    `dest` it reaches. Paths are returned in lexicographic edge-id order.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    if isinstance(origin, str):
        starts = graph.copies(origin)
        origin_loc = origin
        free_start = True
    else:
        starts = (origin,)
        origin_loc = origin[0]
        free_start = False
    if origin_loc == dest:
        raise ValueError("origin and destination coincide")

    found = []

    def dfs(node, path, visited, prev_switch):
        for eid in graph.out_edges(node):
            e = graph.edges[eid]
            if e.is_switch and ((not path and free_start) or (no_double_switch and prev_switch)):
                continue
            if e.head in visited:
                continue
            path.append(eid)
            if e.head[0] == dest:
                if not e.is_switch:
                    found.append(tuple(path))
            elif len(path) < max_hops:
                visited.add(e.head)
                dfs(e.head, path, visited, e.is_switch)
                visited.discard(e.head)
            path.pop()

    for s in starts:
        dfs(s, [], {s}, after_switch)
    if not found:
        raise NoPathError(traveler, origin, dest)
    return PathSet(traveler, tuple(sorted(set(found))))


def path_nodes(graph: ExpandedGraph, path: Sequence[int]) -> list:
    nodes = [graph.edges[path[0]].tail]
    for eid in path:
        e = graph.edges[eid]
        if e.tail != nodes[-1]:
            raise ValueError(f"path is discontinuous at edge {eid}")
        nodes.append(e.head)
    return nodes


# -- configuration files -------------------------------------------------------------------

_EDGE_FIELDS = ("free_flow_time", "capacity", "length_km", "fixed_time")
_DEFAULT_CAPACITY = {"road": 1, "transit": 64, "walk": 64}


def network_from_dict(data: dict) -> tuple[PhysicalNetwork, SwitchSpec]:
    locations = tuple(str(x) for x in data["locations"])
    modes = {str(k): str(v) for k, v in data["modes"].items()}
    edges = {}
    for mode, items in (data.get("edges") or {}).items():
        if mode not in modes:
            raise ConfigurationError(f"edges given for undeclared mode {mode!r}")
        model = modes[mode]
        rows = []
        for item in items:
            kwargs = {k: float(item[k]) for k in _EDGE_FIELDS if k in item}
            kwargs.setdefault("capacity", _DEFAULT_CAPACITY.get(model, 1))
            kwargs["capacity"] = int(kwargs["capacity"])
            rows.append((str(item["tail"]), str(item["head"]), EdgeAttributes(mode=mode, model=model, **kwargs)))
        edges[mode] = tuple(rows)
    sw = data.get("switch") or {}
    spec = SwitchSpec(time=float(sw.get("time", 1.0)), capacity=int(sw.get("capacity", 64)),
                      suppress=frozenset(str(s) for s in sw.get("suppress", ())))
    return PhysicalNetwork(locations, modes, edges), spec


def load_network(path) -> tuple[PhysicalNetwork, SwitchSpec]:
    with open(path) as fh:
        return network_from_dict(yaml.safe_load(fh))


_DUMP_COLUMNS = ("id", "tail", "tail_mode", "head", "head_mode", "kind", "mode", "model",
                 "free_flow_time", "capacity", "length_km", "fixed_time")


def dump_edge_list(graph: ExpandedGraph) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(_DUMP_COLUMNS)
    for e in graph.edges:
        a = e.attrs
        w.writerow((e.id, e.tail[0], e.tail[1], e.head[0], e.head[1], a.kind, a.mode, a.model,
                    repr(a.free_flow_time), a.capacity, repr(a.length_km), repr(a.fixed_time)))
    return buf.getvalue()


def load_edge_list(text: str) -> ExpandedGraph:
    rows = csv.DictReader(io.StringIO(text), delimiter="\t")
    edges = []
    for r in rows:
        attrs = EdgeAttributes(mode=r["mode"], model=r["model"], free_flow_time=float(r["free_flow_time"]),
                               capacity=int(r["capacity"]), length_km=float(r["length_km"]),
                               fixed_time=float(r["fixed_time"]), kind=r["kind"])
        edges.append(Edge(int(r["id"]), (r["tail"], r["tail_mode"]), (r["head"], r["head_mode"]), attrs))
    return ExpandedGraph(edges)


def write_edge_list(graph: ExpandedGraph, path) -> None:
    FsPath(path).write_text(dump_edge_list(graph))
