"""Directed weighted graphs and signed-graph algebra.

Entry (i, j) of an adjacency matrix is the weight of the edge v_j -> v_i.
"""

from typing import Union

import networkx as nx
import numpy as np

from src.config import Config
from src.models.entities import DirectedWeightedGraph, GaugeVector

GraphLike = Union[DirectedWeightedGraph, np.ndarray]


def _support(g: GraphLike, floor: float) -> np.ndarray:
    adjacency = g.adjacency if isinstance(g, DirectedWeightedGraph) else np.asarray(g, dtype=float)
    return np.abs(adjacency) > floor


def to_networkx(g: GraphLike, floor: float = Config.CONNECTIVITY_FLOOR) -> nx.DiGraph:
    """Build the unweighted support digraph (edges j -> i for entry (i, j))."""
    support = _support(g, floor)
    digraph = nx.DiGraph()
    digraph.add_nodes_from(range(support.shape[0]))
    rows, cols = np.nonzero(support)
    digraph.add_edges_from((int(j), int(i)) for i, j in zip(rows, cols) if i != j)
    return digraph


def is_strongly_connected(g: GraphLike, floor: float = Config.CONNECTIVITY_FLOOR) -> bool:
    """True iff the support of g is irreducible."""
    return nx.is_strongly_connected(to_networkx(g, floor))


def laplacian(g: GraphLike) -> np.ndarray:
    """Unsigned Laplacian K - A, with K_ii the i-th row sum of |A|."""
    adjacency = g.adjacency if isinstance(g, DirectedWeightedGraph) else np.asarray(g, dtype=float)
    magnitudes = np.abs(adjacency)
    lap = -magnitudes
    np.fill_diagonal(lap, magnitudes.sum(axis=1) - np.diag(magnitudes))
    return lap


def sign_pattern(o) -> np.ndarray:
    """sgnm applied entrywise as a plain int array; zero opinions map to +1."""
    return np.where(np.asarray(o) >= 0, 1, -1)


def gauge_from_opinions(o) -> GaugeVector:
    return GaugeVector(sign_pattern(o))


def _conjugate(gauge: GaugeVector, m) -> np.ndarray:
    signs = gauge.signs.astype(float)
    return signs[:, None] * np.asarray(m, dtype=float) * signs[None, :]


def signed_laplacian(gauge: GaugeVector, lu) -> np.ndarray:
    """Phi L Phi, computed entrywise as s_i * L_ij * s_j."""
    return _conjugate(gauge, lu)


def signed_adjacency(gauge: GaugeVector, magnitudes) -> np.ndarray:
    """Phi A_u Phi: cooperative edges inside a camp, antagonistic edges across."""
    return _conjugate(gauge, magnitudes)


def is_structurally_balanced(signed_adj, gauge: GaugeVector) -> bool:
    """Check that edges are non-negative within each camp and non-positive across camps."""
    return bool(np.all(_conjugate(gauge, signed_adj) >= 0))
