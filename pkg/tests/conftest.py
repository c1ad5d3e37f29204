"""Shared fixtures: hand-derived small systems and seeded generated scenarios."""

from functools import lru_cache

import numpy as np
import pytest

from src.generators.scenarios import ScenarioGenerator, generate_scenario
from src.models.entities import (
    DirectedWeightedGraph, GeneratorSpec, OpinionMagnitudeGraph, RateRanges, Regime, State, SystemParams,
)
from src.utils.seeding import SeedGenerator

THREE_NODE_MAGNITUDES = np.array([[0.0, 0.0, 1.0], [2.0, 0.0, 1.0], [0.0, 3.0, 0.0]])
THREE_NODE_LAPLACIAN = np.array([[1.0, 0.0, -1.0], [-2.0, 3.0, -1.0], [0.0, -3.0, 3.0]])

PAIR = np.array([[0.0, 1.0], [1.0, 0.0]])


def two_node_system(healing, delta_min, rate, beta_min, opinions=PAIR) -> SystemParams:
    return SystemParams(
        epidemic_graph=DirectedWeightedGraph(PAIR),
        infection_rates=rate * PAIR,
        healing_rates=np.array(healing, dtype=float),
        delta_min=delta_min,
        beta_min=beta_min,
        opinion_graph=OpinionMagnitudeGraph(opinions),
    )


@pytest.fixture
def moderate_pair() -> SystemParams:
    """delta = (2, 2), delta_min = 1, B = [[0,2],[2,0]], beta_min = 0.5."""
    return two_node_system([2.0, 2.0], 1.0, 2.0, 0.5)


@pytest.fixture
def severe_pair() -> SystemParams:
    """delta = (1.2, 1.2), delta_min = 1, B = [[0,3],[3,0]], beta_min = 2 (R_min = 2/1.2)."""
    return two_node_system([1.2, 1.2], 1.0, 3.0, 2.0)


@pytest.fixture
def boundary_pair() -> SystemParams:
    """R_max = rho(B) / delta_min = 1 exactly."""
    return two_node_system([2.0, 2.0], 1.0, 1.0, 0.5)


ANTAGONISTIC = np.array([[0.0, 3.0], [1.0, 0.0]])


@pytest.fixture
def antagonistic_pair() -> SystemParams:
    """Moderate system whose opinion graph admits the dissensus-healthy point o = (0.1, -0.3)."""
    return two_node_system([2.0, 2.0], 1.0, 2.0, 0.5, opinions=ANTAGONISTIC)


@pytest.fixture
def three_node_system() -> SystemParams:
    support = (THREE_NODE_MAGNITUDES > 0).astype(float)
    return SystemParams(
        epidemic_graph=DirectedWeightedGraph(support),
        infection_rates=np.array([[0.0, 0.0, 0.6], [0.5, 0.0, 0.4], [0.0, 0.7, 0.0]]),
        healing_rates=np.array([1.0, 1.2, 0.9]),
        delta_min=0.5,
        beta_min=0.2,
        opinion_graph=OpinionMagnitudeGraph(THREE_NODE_MAGNITUDES),
    )


RANDOM_RANGES = RateRanges(delta=(0.5, 2.0), beta=(0.2, 2.0), delta_min=(0.1, 0.5), beta_min=(0.05, 0.2))


def random_system(seed: int, n: int, density: float = 0.4) -> SystemParams:
    """Random valid system in no particular regime."""
    spec = GeneratorSpec(n=n, target_regime=Regime.MODERATE, edge_density=density, rate_ranges=RANDOM_RANGES)
    return ScenarioGenerator().sample_params(spec, SeedGenerator.rng(seed, 'test-system'))


def random_interior_state(rng: np.random.Generator, n: int) -> State:
    """Interior state with every |o_i| >= 0.05 (away from the switching surface)."""
    x = rng.uniform(0.05, 0.95, size=n)
    o = rng.uniform(0.05, 0.45, size=n) * rng.choice(np.array([-1.0, 1.0]), size=n)
    return State(x, o)


@lru_cache(maxsize=None)
def generated(regime: Regime, seed: int, n: int = 10):
    return generate_scenario(GeneratorSpec(n=n, target_regime=regime), seed)
