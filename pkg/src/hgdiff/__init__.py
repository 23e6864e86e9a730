"""Hypergraph diffusion operators, solvers and equivariant diffusion networks."""

from .hypergraph import (
    BipartiteExpansion,
    Hypergraph,
    LabeledHypergraph,
    build_hypergraph,
    ce_homophily,
    star_expansion,
)
from .dataset_io import load_dataset, save_dataset
from .potentials import (
    EdgePotential,
    NodePotential,
    check_equivariance,
    lec_y_vector,
    objective_value,
)
from .power_sum import power_sum_decode, power_sum_encode
from .solvers import DiffusionState, HypergraphDiffusion, SolverConfig, run_diffusion
from .model import EDHNN, EdHnnConfig
from .estimators import EDHNNClassifier, EDHNNRegressor

__version__ = "0.1.0"

__all__ = [
    "BipartiteExpansion",
    "DiffusionState",
    "EDHNN",
    "EDHNNClassifier",
    "EDHNNRegressor",
    "EdHnnConfig",
    "EdgePotential",
    "Hypergraph",
    "HypergraphDiffusion",
    "LabeledHypergraph",
    "NodePotential",
    "SolverConfig",
    "build_hypergraph",
    "ce_homophily",
    "check_equivariance",
    "lec_y_vector",
    "load_dataset",
    "objective_value",
    "power_sum_decode",
    "power_sum_encode",
    "run_diffusion",
    "save_dataset",
    "star_expansion",
]
