"""Variational quantum algorithm for the travelling salesman problem on two
maximally entangled registers, with an emulated photonic measurement path."""

__version__ = "0.1.0"

from .cost import CostConfig, DistanceMatrix, detect_violated_subsets, total_cost
from .errors import CapacityError, ConsistencyError, DimensionError
from .fourcity import emulate_16_projectors, projector_settings, table_s1_settings, x_4_analytic
from .linalg import MeshSpec, Su2Block, compose_mesh, rectangular_mesh, triangular_mesh
from .measurement import CorrelationMatrix, assert_doubly_stochastic, correlation_exact, correlation_sampled, overlap
from .optimizer import OptimizerConfig, RunTrace, optimize, random_init
from .oracle import (
    RoutePermutation,
    birkhoff_decompose,
    brute_force_tsp,
    held_karp,
    matrix_to_route,
    nearest_permutation,
    route_to_matrix,
)
from .state import build_trial_state, prepare_bell_registers, register_unitaries

__all__ = [
    "CapacityError", "ConsistencyError", "CorrelationMatrix", "CostConfig", "DimensionError",
    "DistanceMatrix", "MeshSpec", "OptimizerConfig", "RoutePermutation", "RunTrace", "Su2Block",
    "assert_doubly_stochastic", "birkhoff_decompose", "brute_force_tsp", "build_trial_state",
    "compose_mesh", "correlation_exact", "correlation_sampled", "detect_violated_subsets",
    "emulate_16_projectors", "held_karp", "matrix_to_route", "nearest_permutation", "optimize",
    "overlap", "prepare_bell_registers", "projector_settings", "random_init", "rectangular_mesh",
    "register_unitaries", "route_to_matrix", "table_s1_settings", "total_cost", "triangular_mesh",
    "x_4_analytic",
]
