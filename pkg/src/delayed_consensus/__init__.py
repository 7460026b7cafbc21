"""Discrete-time consensus under constant per-link communication delays."""
from .delays import DelayModel, delay_aggregates, delay_model, four_agent_model, lag_adjacency, uniform
from .dynamics import column_spread, init_history, simulate, step
from .graph import Graph, from_edges, graph_stats, laplacian, symmetric_eigen
from .lmi import lmi_feasible, max_step_size
from .spectral import (augmented_matrix, left_eigenvector, polynomial_roots, predict_nonuniform,
                       predict_uniform, rouche_bound, uniform_mode_stability)

__version__ = "0.1.0"
