"""Tests for scenario documents and result writers."""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.engine.dynamics import simulate
from src.models.entities import GeneratorSpec, IntegratorSettings, Regime, ScenarioConfig, State, StubbornSpec
from src.models.errors import ConfigError, NumericError, ParameterError, StateError
from src.utils.scenario_io import ScenarioCodec
from src.utils.writers import ResultWriter, trajectory_columns
from tests.conftest import THREE_NODE_MAGNITUDES

SCENARIOS = Path(__file__).parent.parent / 'data' / 'scenarios'

PAIR_DOC = {
    'seed': 1,
    'params': {
        'epidemic_adjacency': [[0, 1], [1, 0]],
        'infection_rates': [[0, 2], [2, 0]],
        'healing_rates': [2, 2],
        'delta_min': 1.0,
        'beta_min': 0.5,
        'opinion_magnitudes': [[0, 1], [1, 0]],
    },
}


def doc_with(**changes) -> str:
    doc = json.loads(json.dumps(PAIR_DOC))
    doc.update(changes)
    return json.dumps(doc)


class TestScenarioCodec:

    def test_load_bundled_scenario(self):
        config = ScenarioCodec.load(SCENARIOS / 'two_node_moderate.json')
        assert config.params.n == 2
        assert config.seed == 1
        assert config.integrator.horizon == 300
        assert config.integrator.record_every == 100
        assert config.stubborn is None
        assert np.array_equal(config.initial_state.o, [-0.4, -0.4])

    def test_sidecar_matrices(self):
        config = ScenarioCodec.load(SCENARIOS / 'three_node_signed.json')
        assert np.array_equal(config.params.opinion_graph.magnitudes, THREE_NODE_MAGNITUDES)
        assert np.array_equal(config.params.epidemic_graph.adjacency, (THREE_NODE_MAGNITUDES > 0).astype(float))

    def test_stubborn_section(self):
        config = ScenarioCodec.load(SCENARIOS / 'two_node_moderate_pinned.json')
        assert config.stubborn == StubbornSpec({0: 0.5})

    def test_generator_section(self):
        config = ScenarioCodec.load(SCENARIOS / 'mild_generated.json')
        assert config.params is None
        assert config.generator.target_regime is Regime.MILD
        assert config.generator.n == 10

    def test_defaults(self):
        config = ScenarioCodec.parse(json.dumps(PAIR_DOC))
        assert config.integrator == IntegratorSettings()
        assert config.outputs == ['trajectory', 'summary', 'plot_data']
        assert config.initial_state is None

    def test_emit_then_parse(self):
        config = ScenarioConfig(
            params=ScenarioCodec.parse(json.dumps(PAIR_DOC)).params,
            generator=GeneratorSpec(n=2, target_regime=Regime.MODERATE, edge_density=0.5),
            initial_state=State([0.25, 0.5], [-0.1, 0.3]),
            integrator=IntegratorSettings(h=0.005, horizon=12.5, record_every=3),
            stubborn=StubbornSpec({1: 0.4}),
            seed=2 ** 63 + 5,
            outputs=['summary'],
        )
        again = ScenarioCodec.parse(ScenarioCodec.emit(config))
        assert np.array_equal(again.params.infection_rates, config.params.infection_rates)
        assert np.array_equal(again.params.opinion_graph.magnitudes, config.params.opinion_graph.magnitudes)
        assert again.generator == config.generator
        assert np.array_equal(again.initial_state.x, config.initial_state.x)
        assert again.integrator == config.integrator
        assert again.stubborn == config.stubborn
        assert again.seed == config.seed
        assert again.outputs == config.outputs

    def test_dump_and_load(self, tmp_path):
        config = ScenarioCodec.parse(json.dumps(PAIR_DOC))
        ScenarioCodec.dump(config, tmp_path / 'nested' / 'scenario.json')
        assert ScenarioCodec.load(tmp_path / 'nested' / 'scenario.json').params.delta_min == 1.0


class TestScenarioErrors:

    def test_invalid_json(self):
        with pytest.raises(ConfigError):
            ScenarioCodec.parse('{"seed": ')

    def test_not_an_object(self):
        with pytest.raises(ConfigError):
            ScenarioCodec.parse('[1, 2]')

    def test_missing_params_and_generator(self):
        with pytest.raises(ConfigError):
            ScenarioCodec.parse('{"seed": 1}')

    def test_missing_field(self):
        doc = json.loads(json.dumps(PAIR_DOC))
        del doc['params']['healing_rates']
        with pytest.raises(ConfigError):
            ScenarioCodec.parse(json.dumps(doc))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ScenarioCodec.load(tmp_path / 'absent.json')

    def test_missing_sidecar(self, tmp_path):
        doc = json.loads(json.dumps(PAIR_DOC))
        del doc['params']['opinion_magnitudes']
        doc['params']['opinion_magnitudes_csv'] = 'absent.csv'
        path = tmp_path / 'scenario.json'
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError):
            ScenarioCodec.load(path)

    def test_unknown_output(self):
        with pytest.raises(ConfigError):
            ScenarioCodec.parse(doc_with(outputs=['movie']))

    def test_negative_seed(self):
        with pytest.raises(ConfigError):
            ScenarioCodec.parse(doc_with(seed=-1))

    def test_unknown_regime(self):
        with pytest.raises(ConfigError):
            ScenarioCodec.parse(json.dumps({'generator': {'n': 4, 'target_regime': 'extreme'}}))

    def test_disconnected_graph(self):
        doc = json.loads(json.dumps(PAIR_DOC))
        doc['params']['opinion_magnitudes'] = [[0, 1], [0, 0]]
        with pytest.raises(ParameterError):
            ScenarioCodec.parse(json.dumps(doc))

    def test_state_outside_box(self):
        with pytest.raises(StateError):
            ScenarioCodec.parse(doc_with(initial_state={'x': [1.5, 0.0], 'o': [0.0, 0.0]}))

    def test_state_wrong_length(self):
        with pytest.raises(StateError):
            ScenarioCodec.parse(doc_with(initial_state={'x': [0.5], 'o': [0.0]}))

    def test_bad_step_size(self):
        with pytest.raises(ParameterError):
            ScenarioCodec.parse(doc_with(integrator={'h': 0}))

    def test_stubborn_out_of_range(self):
        with pytest.raises(ParameterError):
            ScenarioCodec.parse(doc_with(stubborn={'4': 0.5}))

    def test_config_errors_share_exit_code(self):
        assert ConfigError('x').exit_code == 2
        assert ParameterError('x').exit_code == 2
        assert NumericError('x').exit_code == 3


class TestResultWriter:

    def test_trajectory_csv(self, tmp_path, three_node_system):
        trajectory = simulate(three_node_system, State(np.zeros(3), [0.01, 0.001, -0.01]), horizon=0.05, record_every=1)
        path = ResultWriter(tmp_path).write_trajectory(trajectory)
        frame = pd.read_csv(path)
        assert list(frame.columns) == trajectory_columns(3)
        assert list(frame.columns)[:4] == ['t', 'x_1', 'x_2', 'x_3']
        assert len(frame) == len(trajectory.times)
        assert frame['n_switches_cum'].iloc[-1] == len(trajectory.switch_events)
        assert np.array_equal(frame[['o_1', 'o_2', 'o_3']].to_numpy(), trajectory.o_history)

    def test_plot_data(self, tmp_path, moderate_pair):
        trajectory = simulate(moderate_pair, State([0.5, 0.5], [0.0, 0.0]), horizon=0.1, record_every=1)
        path = ResultWriter(tmp_path).write_plot_data(trajectory)
        data = np.loadtxt(path)
        assert data.shape == (len(trajectory.times), 6)
        assert path.read_text().startswith('# t x_1 x_2 o_1 o_2 R_t_o')

    def test_error_record(self, tmp_path):
        path = ResultWriter(tmp_path).write_error(NumericError('diverged'))
        assert json.loads(path.read_text()) == {'error': 'NumericError', 'message': 'diverged', 'exit_code': 3}

    def test_error_record_for_unexpected_exception(self, tmp_path):
        path = ResultWriter(tmp_path).write_error(RuntimeError('boom'))
        assert json.loads(path.read_text())['exit_code'] == 1
