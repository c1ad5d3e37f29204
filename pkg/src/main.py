"""Command-line entry point for the epidemic-opinion toolkit."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config import Config
from src.engine.analysis import (
    classify_regime, consensus_healthy_equilibrium, dissensus_healthy_equilibria, endemic_equilibrium,
    finite_difference_jacobian, jacobian_at, opinion_outcome, reproduction_number, theorem_residual,
)
from src.engine.control import (
    EXHAUSTIVE, GREEDY, compare_to_threshold, select_stubborn_extreme, uniform_threshold, verify_plan,
)
from src.engine.dynamics import simulate
from src.generators.scenarios import generate_scenario
from src.models.entities import (
    EquilibriumReport, GeneratorSpec, InterventionPlan, Regime, ScenarioConfig, State, StubbornSpec,
    SystemParams,
)
from src.models.errors import ConfigError, HorizonExceeded, NumericError, ToolkitError
from src.utils.scenario_io import ScenarioCodec
from src.utils.seeding import SeedGenerator
from src.utils.writers import ResultWriter

logger = logging.getLogger(__name__)


class ScenarioRunner:
    """Resolves a scenario and runs simulations and analyses on it."""

    def __init__(self, config: ScenarioConfig, writer: ResultWriter, quiet: bool = False):
        self.config = config
        self.writer = writer
        self.quiet = quiet
        self.params = self._resolve_params()
        self.initial_state = self._resolve_initial_state()

    def _resolve_params(self) -> SystemParams:
        if self.config.params is not None:
            return self.config.params
        logger.info(f"Generating {self.config.generator.target_regime.value} scenario from seed {self.config.seed}")
        return generate_scenario(self.config.generator, self.config.seed).params

    def _resolve_initial_state(self) -> State:
        if self.config.initial_state is not None:
            return self.config.initial_state
        return SeedGenerator.sample_state(SeedGenerator.rng(self.config.seed, 'initial-state'), self.params.n)

    def regime_report(self) -> dict:
        regime, bounds = classify_regime(self.params)
        logger.info(f"Regime: {regime.value} (R_min={bounds.r_min:.6g}, R_max={bounds.r_max:.6g})")
        return {'regime': regime.value, 'R_min': bounds.r_min, 'R_max': bounds.r_max, 'n': self.params.n}

    def healthy_equilibria(self) -> List[EquilibriumReport]:
        reports = [consensus_healthy_equilibrium(self.params)]
        reports.extend(dissensus_healthy_equilibria(self.params, seed=self.config.seed, progress=not self.quiet))
        return reports

    def endemic_equilibrium(self, seed_state: State) -> Optional[EquilibriumReport]:
        try:
            return endemic_equilibrium(self.params, seed_state, h=self.config.integrator.h)
        except HorizonExceeded as e:
            logger.warning(f"Endemic search: {e}")
            return None

    def stubborn_plan(self, stubborn: StubbornSpec) -> InterventionPlan:
        """Plan for a given stubborn set, predicted with free communities at -0.5."""
        worst = stubborn.apply(np.full(self.params.n, -0.5))
        return InterventionPlan(stubborn=stubborn, predicted_r=reproduction_number(self.params, worst), mode='given')

    def run(self) -> dict:
        """Simulate the scenario, analyse it and write the requested outputs."""
        settings = self.config.integrator
        summary = self.regime_report()
        summary['seed'] = self.config.seed

        trajectory = simulate(
            self.params, self.initial_state, horizon=settings.horizon, h=settings.h,
            stubborn=self.config.stubborn, record_every=settings.record_every, progress=not self.quiet,
        )
        final = trajectory.final_state
        final_sup_x = float(final.x.max())
        eradicated = final_sup_x < Config.ERADICATION_TOL
        summary.update({
            'final_sup_x': final_sup_x,
            'outcome': 'converged healthy' if eradicated else 'endemic',
            'opinion_outcome': opinion_outcome(final.o),
            'final_opinion_residual': theorem_residual(self.params, final.o),
            'n_switch_events': len(trajectory.switch_events),
            'sliding_communities': trajectory.sliding_communities,
            'max_violation': trajectory.max_violation,
        })

        equilibria = self.healthy_equilibria()
        if not eradicated and not Regime(summary['regime']).is_mild and self.config.stubborn is None:
            endemic = self.endemic_equilibrium(final)
            if endemic is not None:
                equilibria.append(endemic)
        summary['equilibria'] = [eq.to_dict() for eq in equilibria]

        summary['plan'] = None
        if self.config.stubborn is not None:
            plan = self.stubborn_plan(self.config.stubborn)
            plan.verified = eradicated
            plan.final_sup_x = final_sup_x
            summary['plan'] = plan.to_dict()

        if 'trajectory' in self.config.outputs:
            self.writer.write_trajectory(trajectory)
        if 'plot_data' in self.config.outputs:
            self.writer.write_plot_data(trajectory)
        if 'summary' in self.config.outputs:
            self.writer.write_summary(summary)
        logger.info(f"Run finished: {summary['outcome']}, opinions {summary['opinion_outcome']}")
        return summary


def _load_config(args) -> ScenarioConfig:
    if not args.config:
        raise ConfigError(f"--config is required for '{args.command}'")
    config = ScenarioCodec.load(args.config)
    if args.seed is not None:
        config.seed = args.seed
    return config


def cmd_simulate(args, writer: ResultWriter) -> dict:
    return ScenarioRunner(_load_config(args), writer, args.quiet).run()


def cmd_classify(args, writer: ResultWriter) -> dict:
    report = ScenarioRunner(_load_config(args), writer, args.quiet).regime_report()
    writer.write_json('classify.json', report)
    return report


def cmd_equilibria(args, writer: ResultWriter) -> dict:
    runner = ScenarioRunner(_load_config(args), writer, args.quiet)
    report = runner.regime_report()
    equilibria = runner.healthy_equilibria()
    if not Regime(report['regime']).is_mild and np.any(runner.initial_state.x > 0):
        endemic = runner.endemic_equilibrium(runner.initial_state)
        if endemic is not None:
            equilibria.append(endemic)
    report['equilibria'] = [eq.to_dict() for eq in equilibria]
    writer.write_json('equilibria.json', report)
    return report


def cmd_threshold(args, writer: ResultWriter) -> dict:
    runner = ScenarioRunner(_load_config(args), writer, args.quiet)
    threshold = uniform_threshold(runner.params)
    report = runner.regime_report()
    report.update({'alpha': threshold.alpha, 'r_at_alpha': threshold.r_at_alpha, 'boundary': threshold.boundary})
    report['equilibria'] = [
        dict(eq.to_dict(), relation=compare_to_threshold(eq.point.o, threshold.alpha))
        for eq in runner.healthy_equilibria()
    ]
    writer.write_json('threshold.json', report)
    return report


def _select(args, runner: ScenarioRunner) -> InterventionPlan:
    return select_stubborn_extreme(runner.params, mode=args.mode, pin_level=args.pin_level, target_r=args.target_r)


def cmd_select_stubborn(args, writer: ResultWriter) -> dict:
    plan = _select(args, ScenarioRunner(_load_config(args), writer, args.quiet))
    report = plan.to_dict()
    writer.write_json('plan.json', report)
    return report


def cmd_verify_plan(args, writer: ResultWriter) -> dict:
    runner = ScenarioRunner(_load_config(args), writer, args.quiet)
    if runner.config.stubborn is not None:
        plan = runner.stubborn_plan(runner.config.stubborn)
    else:
        plan = _select(args, runner)
    horizon = args.horizon if args.horizon is not None else Config.VERIFY_HORIZON
    checked, trajectory = verify_plan(
        runner.params, plan, runner.initial_state, horizon=horizon, h=runner.config.integrator.h,
        record_every=runner.config.integrator.record_every, progress=not args.quiet,
    )
    writer.write_trajectory(trajectory)
    report = checked.to_dict()
    writer.write_json('plan.json', report)
    return report


def cmd_generate(args, writer: ResultWriter) -> dict:
    spec = GeneratorSpec(
        n=args.n,
        target_regime=Regime(args.regime),
        edge_density=args.density,
        same_topology_for_opinions=not args.distinct_opinion_graph,
    )
    seed = args.seed if args.seed is not None else 0
    config = generate_scenario(spec, seed)
    path = writer.out_dir / 'scenario.json'
    ScenarioCodec.dump(config, path)
    logger.info(f"Scenario written: {path}")
    return {'scenario': str(path), 'seed': seed}


def cmd_jacobian_check(args, writer: ResultWriter) -> dict:
    runner = ScenarioRunner(_load_config(args), writer, args.quiet)
    p = runner.params
    rng = SeedGenerator.rng(runner.config.seed, 'jacobian-check')
    worst = 0.0
    for _ in range(args.samples):
        x = rng.uniform(0.05, 0.95, size=p.n)
        o = rng.uniform(0.05, 0.45, size=p.n) * rng.choice(np.array([-1.0, 1.0]), size=p.n)
        s = State(x, o)
        worst = max(worst, float(np.max(np.abs(jacobian_at(p, s) - finite_difference_jacobian(p, s)))))
    report = {'samples': args.samples, 'max_abs_difference': worst, 'tolerance': args.tolerance,
              'passed': worst <= args.tolerance}
    writer.write_json('jacobian_check.json', report)
    if not report['passed']:
        raise NumericError(f"analytic and finite-difference Jacobians differ by {worst:.3e}")
    return report


COMMANDS = {
    'simulate': cmd_simulate,
    'classify': cmd_classify,
    'equilibria': cmd_equilibria,
    'threshold': cmd_threshold,
    'select-stubborn': cmd_select_stubborn,
    'verify-plan': cmd_verify_plan,
    'generate': cmd_generate,
    'jacobian-check': cmd_jacobian_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='scenario document (JSON)')
    common.add_argument('--seed', type=int, help='override the scenario seed')
    common.add_argument('--out', default=Config.OUTPUT_DIR, help='output directory')
    common.add_argument('--quiet', action='store_true', help='only log warnings and errors')

    parser = argparse.ArgumentParser(description='Networked SIS epidemic and signed opinion dynamics toolkit')
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('simulate', parents=[common], help='simulate a scenario and write trajectory/summary')
    sub.add_parser('classify', parents=[common], help='report R_min, R_max and the regime')
    sub.add_parser('equilibria', parents=[common], help='enumerate equilibria and their stability')
    sub.add_parser('threshold', parents=[common], help='uniform threshold opinion (moderate regime)')

    for name in ('select-stubborn', 'verify-plan'):
        cmd = sub.add_parser(name, parents=[common], help='choose / verify a stubborn-community plan')
        cmd.add_argument('--mode', choices=[GREEDY, EXHAUSTIVE], default=GREEDY)
        cmd.add_argument('--pin-level', type=float, default=0.5)
        cmd.add_argument('--target-r', type=float, default=Config.PLAN_TARGET_R)
        if name == 'verify-plan':
            cmd.add_argument('--horizon', type=float, help=f'verification horizon (default {Config.VERIFY_HORIZON:g})')

    gen = sub.add_parser('generate', parents=[common], help='generate a random scenario in a regime')
    gen.add_argument('--n', type=int, default=10)
    gen.add_argument('--regime', choices=[r.value for r in Regime], default=Regime.MODERATE.value)
    gen.add_argument('--density', type=float, default=Config.DEFAULT_EDGE_DENSITY)
    gen.add_argument('--distinct-opinion-graph', action='store_true')

    jac = sub.add_parser('jacobian-check', parents=[common], help='compare analytic and numeric Jacobians')
    jac.add_argument('--samples', type=int, default=100)
    jac.add_argument('--tolerance', type=float, default=1e-5)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
    )
    writer = ResultWriter(args.out)
    try:
        COMMANDS[args.command](args, writer)
        return 0
    except ToolkitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        writer.write_error(e)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error during '{args.command}': {e}", exc_info=True)
        writer.write_error(e)
        return 1


if __name__ == '__main__':
    raise SystemExit(main())
