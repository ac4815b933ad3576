"""Logit-response routing with strategic information design on multimodal networks."""
from .costs import BprParams, CostModel, ModeConstants, WeightProfile
from .graph import ExpandedGraph, enumerate_paths, expand, load_network
from .optimizer import DecisionContext, OptimizerParams, SystemObjective, optimize_signal
from .qre import NormalFormGame, QreParams, solve_qre
from .signaling import Signal, bayes_update, psi_recursion
from .simulation import Simulation, SimulationParams, TravelerSpec, lori_step
from .sssp import SsspPolicy, sssp_route
from .state import NetworkState, advance, commit_edge, project_timeline

__version__ = "0.1.0"
