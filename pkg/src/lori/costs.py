"""Edge attribute models (travel time, CO emissions) and weighted edge costs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .graph import SWITCH, ConfigurationError, EdgeAttributes, ExpandedGraph

K = 2  # travel time, CO emissions


class ModelApplicabilityError(ValueError):
    pass


class EmissionDomainError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class AttributeVector(NamedTuple):
    travel_time: float
    co_emissions: float


@dataclass(frozen=True)
class BprParams:
    alpha: float = 0.15
    beta: float = 4.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 1:
            raise ValueError("BPR needs alpha >= 0 and beta >= 1")


@dataclass(frozen=True)
class ModeConstants:
    transit_co_per_minute: float = 0.5


@dataclass(frozen=True)
class WeightProfile:
    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if any(x < 0 or x > 1 for x in w):
            raise ValueError(f"weights must lie in [0, 1]: {w}")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1: {w}")

    @classmethod
    def time_weight(cls, w: float) -> "WeightProfile":
        return cls((w, 1.0 - w))

    def __len__(self):
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


def bpr_travel_time(edge: EdgeAttributes, occupancy: float, params: BprParams = BprParams()) -> float:
    """f_e * (1 + alpha * (occupancy / c_e) ** beta) for road travel edges."""
    if edge.kind == SWITCH or edge.model != "road":
        raise ModelApplicabilityError(f"BPR applies to road edges, not {edge.model}/{edge.kind}")
    if occupancy < 0:
        raise ValueError("negative occupancy")
    return edge.free_flow_time * (1.0 + params.alpha * (occupancy / edge.capacity) ** params.beta)


def co_emission_rate(edge: EdgeAttributes, travel_time: float) -> float:
    """Wallace static emission curve, grams per vehicle per hour."""
    if edge.kind == SWITCH or edge.model != "road":
        raise ModelApplicabilityError(f"emission curve applies to road edges, not {edge.model}/{edge.kind}")
    if travel_time <= 0:
        raise EmissionDomainError(f"travel time must be positive, got {travel_time}")
    return 0.2038 * travel_time * math.exp(0.7962 * edge.length_km / travel_time)


def edge_attributes(edge: EdgeAttributes, occupancy: float, params: BprParams = BprParams(),
                    constants: ModeConstants = ModeConstants()) -> AttributeVector:
    if occupancy < 0:
        raise ValueError("negative occupancy")
    if edge.kind == SWITCH:
        return AttributeVector(edge.fixed_time, 0.0)
    if edge.model == "road":
        tt = bpr_travel_time(edge, occupancy, params)
        return AttributeVector(tt, co_emission_rate(edge, tt))
    if edge.model == "transit":
        return AttributeVector(edge.fixed_time, constants.transit_co_per_minute * edge.fixed_time)
    if edge.model == "walk":
        return AttributeVector(edge.fixed_time, 0.0)
    raise ConfigurationError(f"unknown mode model {edge.model!r}")


def _weighted(attrs: Sequence[float], weights: WeightProfile) -> float:
    if len(attrs) != len(weights):
        raise DimensionError(f"{len(weights)} weights for {len(attrs)} attributes")
    return float(sum(a * x for a, x in zip(weights.weights, attrs)))


def system_edge_cost(attrs: Sequence[float], weights: WeightProfile) -> float:
    return _weighted(attrs, weights)


def traveler_edge_cost(attrs: Sequence[float], weights: WeightProfile) -> float:
    return _weighted(attrs, weights)


def ticks_for(travel_time: float) -> int:
    """Whole minutes spent on an edge; never less than one."""
    return max(1, math.ceil(travel_time - 1e-9))


class CostModel:
    """Occupancy-indexed attribute tables for every edge of a graph.

    Tables are computed lazily up to the largest occupancy requested so far.
    `normalization` divides each attribute before weighting.
    """

    def __init__(self, graph: ExpandedGraph, bpr: BprParams = BprParams(),
                 constants: ModeConstants = ModeConstants(), normalization=(1.0, 1.0)):
        self.graph = graph
        self.bpr = bpr
        self.constants = constants
        self.normalization = np.asarray(normalization, dtype=float)
        if self.normalization.shape != (K,) or np.any(self.normalization <= 0):
            raise ValueError("normalization needs one positive constant per attribute")
        self._raw = np.zeros((len(graph), 0, K))
        self._ticks = np.zeros((len(graph), 0), dtype=int)

    def _grow(self, n_max: int):
        have = self._raw.shape[1]
        if n_max < have:
            return
        n_new = max(n_max + 1, 2 * have, 8)
        raw = np.empty((len(self.graph), n_new, K))
        for e in self.graph.edges:
            for n in range(n_new):
                raw[e.id, n] = edge_attributes(e.attrs, n, self.bpr, self.constants)
        self._raw = raw
        self._ticks = np.vectorize(ticks_for, otypes=[int])(raw[:, :, 0])

    def travel_time(self, edge: int, occupancy: int) -> float:
        self._grow(occupancy)
        return float(self._raw[edge, occupancy, 0])

    def ticks(self, edge: int, occupancy: int) -> int:
        self._grow(occupancy)
        return int(self._ticks[edge, occupancy])

    def attributes(self, edge: int, occupancy: int) -> AttributeVector:
        self._grow(occupancy)
        return AttributeVector(*self._raw[edge, occupancy])

    def attribute_table(self, n_max: int) -> np.ndarray:
        """(E, n_max + 1, K) normalized attributes."""
        self._grow(n_max)
        return self._raw[:, : n_max + 1] / self.normalization

    def tick_table(self, n_max: int) -> np.ndarray:
        self._grow(n_max)
        return self._ticks[:, : n_max + 1]

    def weighted_table(self, weights: WeightProfile, n_max: int) -> np.ndarray:
        """(E, n_max + 1): weighted edge cost when `n` others occupy the edge."""
        tab = self.attribute_table(n_max)
        if tab.shape[-1] != len(weights):
            raise DimensionError(f"{len(weights)} weights for {tab.shape[-1]} attributes")
        return tab @ weights.as_array()

    def flow_table(self, weights: WeightProfile, n_max: int) -> np.ndarray:
        """(E, n_max + 1): per-minute system cost of an edge carrying `lam` travelers.

        Each traveler's traversal cost is spread evenly over the minutes it
        spends on the edge, so a lone traveler crossing an edge accrues
        exactly that edge's weighted cost. The count includes the traveler,
        its own time was set by the `lam - 1` others.
        """
        y = self.weighted_table(weights, n_max)
        ticks = self.tick_table(n_max)
        g = np.zeros_like(y)
        lam = np.arange(1, n_max + 1)
        g[:, 1:] = lam * y[:, :-1] / ticks[:, :-1]
        return g
