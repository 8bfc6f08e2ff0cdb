"""Inferring private attributes from randomized-response reports by modelling how they spread."""

from .cascade import GroundTruth, SeedPolicy, generate_ground_truth, simulate_cascade
from .graph import DirectedGraph, compute_node_metrics, load_edge_list, prepare_graph
from .inference import VARIANTS, SolverConfig, infer
from .ldag import build_index
from .metrics import auc, evaluate
from .netgen import GeneratorSpec, generate
from .privacy import RRMechanism, auc_upper_bound, bayesian_scores, epsilon_of_beta, perturb

__version__ = "0.1.0"
