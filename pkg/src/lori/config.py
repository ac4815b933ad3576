"""Scenario configuration files (YAML) and their validation."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .costs import BprParams, CostModel, ModeConstants, WeightProfile
from .graph import ConfigurationError, ExpandedGraph, expand, network_from_dict
from .optimizer import OptimizerParams
from .qre import QreParams
from .simulation import SimulationParams, TravelerSpec
from .sssp import SsspPolicy


def _build(cls, data: Optional[dict]):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {sorted(extra)}")
    return cls(**data)


@dataclass(frozen=True)
class Scenario2Settings:
    travelers: int = 30
    start_window: int = 20  # start ticks uniform over 0..start_window
    lori_start_tick: Optional[int] = 0  # LoRI travelers all start here; None keeps their drawn ticks
    traveler_time_weight: float = 0.5
    lori_counts: tuple = (1, 2, 3)
    runtime_counts: tuple = (1, 2, 3, 4)
    runtime_budget_s: float = 900.0  # wall-clock cap for the largest runtime point


@dataclass(frozen=True)
class ScenarioConfig:
    network: dict
    bpr: BprParams = BprParams()
    constants: ModeConstants = ModeConstants()
    normalization: tuple = (1.0, 1.0)
    system_time_weight: float = 0.7
    qre: QreParams = QreParams()
    optimizer: OptimizerParams = OptimizerParams()
    sssp: SsspPolicy = SsspPolicy()
    simulation: dict = field(default_factory=dict)  # remaining SimulationParams fields
    seeds: tuple = (0,)
    demand: tuple = ()  # TravelerSpec templates for Scenario 1
    traveler_time_weights: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)  # experiment 1 grid
    experiment2_time_weights: tuple = (0.8, 0.6, 0.5)
    system_time_weight_sweep: tuple = tuple(round(0.1 * i, 1) for i in range(11))
    experiment3_time_weight: float = 0.5
    scenario2: Scenario2Settings = Scenario2Settings()

    def __post_init__(self):
        if not self.seeds:
            raise ConfigurationError("need at least one seed")
        graph = self.graph()
        locs = set(graph.locations)
        for d in self.demand:
            if d.origin not in locs or d.dest not in locs:
                raise ConfigurationError(f"traveler {d.id} references an unknown location")
        for w in (self.system_time_weight, *self.traveler_time_weights, *self.experiment2_time_weights,
                  *self.system_time_weight_sweep, self.experiment3_time_weight):
            WeightProfile.time_weight(w)
        _build(SimulationParams, self.simulation)

    def graph(self) -> ExpandedGraph:
        net, spec = network_from_dict(self.network)
        return expand(net, spec)

    def cost_model(self, graph: Optional[ExpandedGraph] = None) -> CostModel:
        return CostModel(graph or self.graph(), self.bpr, self.constants, self.normalization)

    def sim_params(self, system_time_weight: Optional[float] = None, seed: int = 0,
                   **overrides) -> SimulationParams:
        w = self.system_time_weight if system_time_weight is None else system_time_weight
        base = dict(self.simulation)
        base.update(overrides)
        return SimulationParams(system_weights=WeightProfile.time_weight(w), qre=self.qre,
                                optimizer=self.optimizer, sssp=self.sssp, seed=seed, **base)


def default_network() -> dict:
    text = resources.files("lori").joinpath("data/wheatstone.yaml").read_text()
    return yaml.safe_load(text)


def _demand(items) -> tuple:
    out = []
    for item in items or ():
        item = dict(item)
        w = item.pop("time_weight", 0.5)
        out.append(TravelerSpec(id=int(item.pop("id")), origin=str(item.pop("origin")), dest=str(item.pop("dest")),
                                start=int(item.pop("start", 0)), weights=WeightProfile.time_weight(w),
                                policy=str(item.pop("policy", "lori"))))
        if item:
            raise ConfigurationError(f"unknown demand keys: {sorted(item)}")
    return tuple(out)


def config_from_dict(data: dict, base_dir: Optional[Path] = None) -> ScenarioConfig:
    data = dict(data)
    net = data.pop("network", None)
    if net is None:
        network = default_network()
    elif isinstance(net, dict):
        network = net
    else:
        p = Path(net)
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        if not p.exists():
            packaged = resources.files("lori").joinpath("data", str(net))
            network = yaml.safe_load(packaged.read_text())
        else:
            network = yaml.safe_load(p.read_text())
    kw = {"network": network}
    if "bpr" in data:
        kw["bpr"] = _build(BprParams, data.pop("bpr"))
    if "constants" in data:
        kw["constants"] = _build(ModeConstants, data.pop("constants"))
    if "qre" in data:
        kw["qre"] = _build(QreParams, data.pop("qre"))
    if "optimizer" in data:
        kw["optimizer"] = _build(OptimizerParams, data.pop("optimizer"))
    if "sssp" in data:
        kw["sssp"] = _build(SsspPolicy, data.pop("sssp"))
    if "scenario2" in data:
        s2 = dict(data.pop("scenario2") or {})
        for k in ("lori_counts", "runtime_counts"):
            if k in s2:
                s2[k] = tuple(int(x) for x in s2[k])
        kw["scenario2"] = _build(Scenario2Settings, s2)
    if "demand" in data:
        kw["demand"] = _demand(data.pop("demand"))
    for k in ("normalization", "seeds", "traveler_time_weights", "experiment2_time_weights",
              "system_time_weight_sweep"):
        if k in data:
            kw[k] = tuple(data.pop(k))
    for k in ("system_time_weight", "experiment3_time_weight"):
        if k in data:
            kw[k] = float(data.pop(k))
    if "simulation" in data:
        kw["simulation"] = dict(data.pop("simulation") or {})
    if data:
        raise ConfigurationError(f"unknown configuration keys: {sorted(data)}")
    return ScenarioConfig(**kw)


def load_config(path=None) -> ScenarioConfig:
    """Load a scenario file; without a path, the packaged default scenario."""
    if path is None:
        text = resources.files("lori").joinpath("data/scenario.yaml").read_text()
        return config_from_dict(yaml.safe_load(text))
    p = Path(path)
    return config_from_dict(yaml.safe_load(p.read_text()) or {}, p.parent)


def with_seeds(cfg: ScenarioConfig, seeds) -> ScenarioConfig:
    return replace(cfg, seeds=tuple(int(s) for s in seeds))
