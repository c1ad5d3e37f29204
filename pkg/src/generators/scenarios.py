"""Generator for random scenarios landing in a requested regime."""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from src.config import Config
from src.engine.analysis import classify_regime
from src.models.entities import (
    DirectedWeightedGraph, GeneratorSpec, OpinionMagnitudeGraph, RateRanges, Regime,
    ScenarioConfig, SystemParams,
)
from src.models.errors import PreconditionError, RegimeUnreachable
from src.utils.seeding import SeedGenerator

logger = logging.getLogger(__name__)

# Infection-rate ranges (beta, beta_min) are per unit of mean in-degree, so
# the resulting reproduction numbers do not drift with n or density.
DEFAULT_RATE_RANGES: Dict[Regime, RateRanges] = {
    Regime.MILD: RateRanges(
        delta=(0.6, 1.2), beta=(0.05, 0.2), delta_min=(0.4, 0.6), beta_min=(0.02, 0.05),
    ),
    Regime.MODERATE: RateRanges(
        delta=(0.8, 1.2), beta=(0.6, 1.0), delta_min=(0.25, 0.35), beta_min=(0.05, 0.15),
    ),
    Regime.SEVERE: RateRanges(
        delta=(0.6, 1.0), beta=(2.0, 3.0), delta_min=(0.2, 0.3), beta_min=(1.2, 2.0),
    ),
}


class ScenarioGenerator:
    """Generates strongly connected systems with sampled rates."""

    def __init__(self, retry_budget: int = Config.GENERATOR_RETRY_BUDGET):
        self.retry_budget = retry_budget

    @staticmethod
    def random_topology(rng: np.random.Generator, n: int, density: float) -> np.ndarray:
        """0/1 support: a random Hamiltonian cycle plus uniformly chosen extra edges.

        The total edge count is max(n, round(density * n * (n - 1))).
        """
        support = np.zeros((n, n))
        order = rng.permutation(n)
        for k in range(n):
            source, target = order[k], order[(k + 1) % n]
            support[target, source] = 1.0  # entry (i, j) is the edge j -> i

        target_edges = max(n, int(round(density * n * (n - 1))))
        candidates = [(i, j) for i in range(n) for j in range(n) if i != j and support[i, j] == 0]
        extra = min(target_edges - n, len(candidates))
        if extra > 0:
            for k in rng.choice(len(candidates), size=extra, replace=False):
                i, j = candidates[k]
                support[i, j] = 1.0
        return support

    @staticmethod
    def _uniform(rng: np.random.Generator, bounds: Tuple[float, float], size=None):
        low, high = bounds
        return rng.uniform(low, high, size=size)

    def sample_params(self, spec: GeneratorSpec, rng: np.random.Generator) -> SystemParams:
        n = spec.n
        support = self.random_topology(rng, n, spec.edge_density)

        if spec.rate_ranges is None:
            ranges = DEFAULT_RATE_RANGES[self._base_regime(spec.target_regime)]
            scale = 1.0 / (support.sum() / n)
        else:
            ranges = spec.rate_ranges
            scale = 1.0

        delta_min = float(self._uniform(rng, ranges.delta_min))
        beta_min = float(self._uniform(rng, ranges.beta_min)) * scale
        healing = np.maximum(self._uniform(rng, ranges.delta, n), delta_min)
        infection = np.maximum(self._uniform(rng, ranges.beta, (n, n)) * scale, beta_min) * support

        if spec.same_topology_for_opinions:
            opinion_support = support
        else:
            opinion_support = self.random_topology(rng, n, spec.edge_density)
        magnitudes = self._uniform(rng, spec.opinion_weight_range, (n, n)) * opinion_support

        return SystemParams(
            epidemic_graph=DirectedWeightedGraph(support),
            infection_rates=infection,
            healing_rates=healing,
            delta_min=delta_min,
            beta_min=beta_min,
            opinion_graph=OpinionMagnitudeGraph(magnitudes),
        )

    @staticmethod
    def _base_regime(regime: Regime) -> Regime:
        if regime is Regime.BOUNDARY_MILD_EXACT:
            return Regime.MILD
        if regime is Regime.BOUNDARY_SEVERE_EXACT:
            return Regime.SEVERE
        return regime

    def generate(self, spec: GeneratorSpec, seed: int) -> ScenarioConfig:
        """Sample params until classify_regime matches spec.target_regime."""
        if spec.n < 2:
            raise PreconditionError(f"scenario generation needs n >= 2, got {spec.n}")
        if not 0.0 <= spec.edge_density <= 1.0:
            raise PreconditionError(f"edge density must lie in [0, 1], got {spec.edge_density}")

        for attempt in range(self.retry_budget):
            params = self.sample_params(spec, SeedGenerator.rng(seed, 'scenario', attempt))
            regime, bounds = classify_regime(params)
            logger.debug(
                f"Attempt {attempt}: {regime.value} (R_min={bounds.r_min:.4g}, R_max={bounds.r_max:.4g})"
            )
            if regime is spec.target_regime:
                logger.info(
                    f"Generated {regime.value} scenario with n={spec.n} after {attempt + 1} attempt(s): "
                    f"R_min={bounds.r_min:.4g}, R_max={bounds.r_max:.4g}"
                )
                initial = SeedGenerator.sample_state(SeedGenerator.rng(seed, 'initial-state'), spec.n)
                return ScenarioConfig(params=params, generator=spec, initial_state=initial, seed=seed)

        raise RegimeUnreachable(
            f"no {spec.target_regime.value} scenario within {self.retry_budget} attempts "
            f"(n={spec.n}, density={spec.edge_density})"
        )


def generate_scenario(spec: GeneratorSpec, seed: int, retry_budget: Optional[int] = None) -> ScenarioConfig:
    budget = Config.GENERATOR_RETRY_BUDGET if retry_budget is None else retry_budget
    return ScenarioGenerator(budget).generate(spec, seed)
