import numpy as np
import pytest

from lori.config import load_config
from lori.costs import CostModel, WeightProfile
from lori.graph import enumerate_paths, expand, network_from_dict
from lori.optimizer import DecisionContext, SystemObjective
from lori.qre import QreParams
from lori.state import NetworkState


def make_graph(data):
    net, spec = network_from_dict(data)
    return expand(net, spec)


def two_route_network(cap=2, f_short=2.0, f_long=3.0):
    """Origin o, destination d, a short road o->d and a longer road o->m->d."""
    return {
        "locations": ["o", "m", "d"],
        "modes": {"car": "road"},
        "edges": {"car": [
            {"tail": "o", "head": "d", "free_flow_time": f_short, "capacity": cap, "length_km": 4.0},
            {"tail": "o", "head": "m", "free_flow_time": f_long / 2, "capacity": cap, "length_km": 0.5},
            {"tail": "m", "head": "d", "free_flow_time": f_long / 2, "capacity": cap, "length_km": 0.5},
        ]},
    }


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def wheatstone(cfg):
    return cfg.graph()


@pytest.fixture(scope="session")
def wheatstone_costs(cfg, wheatstone):
    return cfg.cost_model(wheatstone)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_route():
    g = make_graph(two_route_network())
    return g, CostModel(g)


DESK_NETWORK = {
    "locations": ["o", "d"],
    "modes": {"car": "road", "subway": "transit"},
    "edges": {"car": [{"tail": "o", "head": "d", "free_flow_time": 2.0, "capacity": 2, "length_km": 4.0}],
              "subway": [{"tail": "o", "head": "d", "fixed_time": 2.2}]},
}


def desk_context(observed=0, traveler_w=0.9, system_w=0.3, alpha=10.0, horizon=None):
    """One traveler choosing between a capacity-2 road and a subway line.

    The traveler's belief is a point mass at `observed`, so only that row of
    the road's signal matters.
    """
    g = make_graph(DESK_NETWORK)
    cm = CostModel(g)
    s = NetworkState.empty(g)
    s.add_traveler(0, "o", "d")
    paths = enumerate_paths(g, "o", "d").paths
    road = next(e.id for e in g.edges if e.attrs.congestible)
    belief = {0: {road: np.eye(3)[observed]}}
    ctx = DecisionContext(s, 0, [0], [paths], {}, belief, cm, {0: WeightProfile.time_weight(traveler_w)},
                          SystemObjective(WeightProfile.time_weight(system_w), horizon), QreParams(target_alpha=alpha))
    return ctx, road
