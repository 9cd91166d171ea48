"""Approximation-ratio lower bounds for p=1 clustering QAOA on 3-regular graphs."""
from .lp import (
    PUBLISHED_PARAMS, Tables, build_lp, compute_tables, f_lambda, iterative_bound,
    published_to_internal, solve_bound, table_params,
)
from .simplex import LPProblem, LPSolution, simplex_solve
from .subgraphs import STRUCTURES, WeightedSubgraph, automorphisms, c_lambda, enumerate_subgraphs
