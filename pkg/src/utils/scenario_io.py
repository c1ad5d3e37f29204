"""Scenario document codec.

A scenario is a JSON object::

    {
      "seed": 7,
      "params": {
        "epidemic_adjacency": [[0, 1], [1, 0]],     # or "epidemic_adjacency_csv": "a.csv"
        "infection_rates": [[0, 2], [2, 0]],        # or "infection_rates_csv"
        "healing_rates": [2, 2],
        "delta_min": 1.0,
        "beta_min": 0.5,
        "opinion_magnitudes": [[0, 1], [1, 0]]      # or "opinion_magnitudes_csv"
      },
      "generator": {"n": 10, "target_regime": "mild", "edge_density": 0.3},
      "initial_state": {"x": [0.9, 0.9], "o": [-0.4, -0.4]},
      "integrator": {"h": 0.01, "horizon": 500, "record_every": 10},
      "stubborn": {"0": 0.5},
      "outputs": ["trajectory", "summary", "plot_data"]
    }

Matrices are row-major and entry (i, j) is the weight of the edge j -> i.
Community indices are zero-based. Either "params" or "generator" must be
present; explicit params win when both are given. Sidecar CSV paths are
resolved relative to the document and hold bare matrices without headers.
"""

import json
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from src.models.entities import (
    DirectedWeightedGraph, GeneratorSpec, IntegratorSettings, OpinionMagnitudeGraph, RateRanges,
    Regime, ScenarioConfig, State, StubbornSpec, SystemParams,
)
from src.models.errors import ConfigError
from src.utils.validators import StateValidator

KNOWN_OUTPUTS = ('trajectory', 'summary', 'plot_data')
MATRIX_KEYS = ('epidemic_adjacency', 'infection_rates', 'opinion_magnitudes')


class ScenarioCodec:
    """Converts between ScenarioConfig objects and scenario documents."""

    @staticmethod
    def emit(config: ScenarioConfig) -> str:
        doc = {'seed': int(config.seed)}
        if config.params is not None:
            p = config.params
            doc['params'] = {
                'epidemic_adjacency': p.epidemic_graph.adjacency.tolist(),
                'infection_rates': p.infection_rates.tolist(),
                'healing_rates': p.healing_rates.tolist(),
                'delta_min': p.delta_min,
                'beta_min': p.beta_min,
                'opinion_magnitudes': p.opinion_graph.magnitudes.tolist(),
            }
        if config.generator is not None:
            g = config.generator
            generator = {
                'n': g.n,
                'target_regime': g.target_regime.value,
                'edge_density': g.edge_density,
                'same_topology_for_opinions': g.same_topology_for_opinions,
                'opinion_weight_range': list(g.opinion_weight_range),
            }
            if g.rate_ranges is not None:
                generator['rate_ranges'] = {
                    name: list(getattr(g.rate_ranges, name))
                    for name in ('delta', 'beta', 'delta_min', 'beta_min')
                }
            doc['generator'] = generator
        if config.initial_state is not None:
            doc['initial_state'] = {
                'x': config.initial_state.x.tolist(),
                'o': config.initial_state.o.tolist(),
            }
        doc['integrator'] = {
            'h': config.integrator.h,
            'horizon': config.integrator.horizon,
            'record_every': config.integrator.record_every,
        }
        if config.stubborn is not None:
            doc['stubborn'] = {str(i): v for i, v in config.stubborn.pinned.items()}
        doc['outputs'] = list(config.outputs)
        return json.dumps(doc, indent=2)

    @staticmethod
    def parse(text: str, base_dir: Optional[Union[str, Path]] = None) -> ScenarioConfig:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Scenario document is not valid JSON: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError("Scenario document must be a JSON object")

        try:
            return ScenarioCodec._from_document(doc, Path(base_dir) if base_dir else Path('.'))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Malformed scenario document: {type(e).__name__}: {e}") from e

    @staticmethod
    def load(path: Union[str, Path]) -> ScenarioConfig:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"Cannot read scenario file {path}: {e}") from e
        return ScenarioCodec.parse(text, base_dir=path.parent)

    @staticmethod
    def dump(config: ScenarioConfig, path: Union[str, Path]):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(ScenarioCodec.emit(config) + '\n')

    @staticmethod
    def _matrix(section: dict, key: str, base_dir: Path) -> np.ndarray:
        if key in section:
            return np.array(section[key], dtype=float)
        sidecar = section.get(f'{key}_csv')
        if sidecar is None:
            raise ConfigError(f"params.{key} (or params.{key}_csv) is required")
        try:
            return pd.read_csv(base_dir / sidecar, header=None).to_numpy(dtype=float)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ConfigError(f"Cannot read sidecar matrix {sidecar}: {e}") from e

    @staticmethod
    def _params(section: dict, base_dir: Path) -> SystemParams:
        return SystemParams(
            epidemic_graph=DirectedWeightedGraph(ScenarioCodec._matrix(section, 'epidemic_adjacency', base_dir)),
            infection_rates=ScenarioCodec._matrix(section, 'infection_rates', base_dir),
            healing_rates=np.array(section['healing_rates'], dtype=float),
            delta_min=float(section['delta_min']),
            beta_min=float(section['beta_min']),
            opinion_graph=OpinionMagnitudeGraph(ScenarioCodec._matrix(section, 'opinion_magnitudes', base_dir)),
        )

    @staticmethod
    def _generator(section: dict) -> GeneratorSpec:
        ranges = section.get('rate_ranges')
        rate_ranges = None
        if ranges is not None:
            rate_ranges = RateRanges(
                **{name: tuple(float(v) for v in ranges[name]) for name in ('delta', 'beta', 'delta_min', 'beta_min')}
            )
        try:
            regime = Regime(section['target_regime'])
        except ValueError:
            raise ConfigError(
                f"Unknown target_regime {section['target_regime']!r}; "
                f"expected one of {[r.value for r in Regime]}"
            )
        return GeneratorSpec(
            n=int(section['n']),
            target_regime=regime,
            edge_density=float(section.get('edge_density', GeneratorSpec.edge_density)),
            rate_ranges=rate_ranges,
            same_topology_for_opinions=bool(section.get('same_topology_for_opinions', True)),
            opinion_weight_range=tuple(float(v) for v in section.get('opinion_weight_range', (0.5, 1.5))),
        )

    @staticmethod
    def _from_document(doc: dict, base_dir: Path) -> ScenarioConfig:
        params = ScenarioCodec._params(doc['params'], base_dir) if 'params' in doc else None
        generator = ScenarioCodec._generator(doc['generator']) if 'generator' in doc else None
        if params is None and generator is None:
            raise ConfigError("Scenario needs either 'params' or 'generator'")
        n = params.n if params is not None else generator.n

        initial_state = None
        if 'initial_state' in doc:
            initial_state = State(doc['initial_state']['x'], doc['initial_state']['o'])
            StateValidator.require_state(initial_state, n)

        integrator = IntegratorSettings()
        if 'integrator' in doc:
            section = doc['integrator']
            integrator = IntegratorSettings(
                h=float(section.get('h', integrator.h)),
                horizon=float(section.get('horizon', integrator.horizon)),
                record_every=int(section.get('record_every', integrator.record_every)),
            )
        StateValidator.require_settings(integrator)

        stubborn = None
        if doc.get('stubborn') is not None:
            stubborn = StubbornSpec({int(k): float(v) for k, v in doc['stubborn'].items()})
            StateValidator.require_stubborn(stubborn, n)

        outputs = list(doc.get('outputs', KNOWN_OUTPUTS))
        unknown = [o for o in outputs if o not in KNOWN_OUTPUTS]
        if unknown:
            raise ConfigError(f"Unknown outputs {unknown}; expected a subset of {list(KNOWN_OUTPUTS)}")

        seed = int(doc.get('seed', 0))
        if not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")

        return ScenarioConfig(
            params=params,
            generator=generator,
            initial_state=initial_state,
            integrator=integrator,
            stubborn=stubborn,
            seed=seed,
            outputs=outputs,
        )
