"""Tests for reproduction numbers, regimes, equilibria and stability verdicts."""

import itertools
import math

import numpy as np
import pytest
import scipy.optimize
from scipy.optimize import OptimizeResult

from src.engine.analysis import (
    _refine, _verdict, classify_regime, classify_stability, consensus_healthy_equilibrium, dissensus_healthy_equilibria,
    endemic_equilibrium, finite_difference_jacobian, jacobian_at, opinion_outcome, reproduction_bounds,
    reproduction_number, theorem_residual, xi_epsilon_invariance_check,
)
from src.engine.dynamics import rate_matrices, rhs
from src.engine.spectral import is_hurwitz
from src.models.entities import EquilibriumClass, HurwitzResult, Regime, State, Verdict
from src.models.errors import (
    EquilibriumInconsistency, HorizonExceeded, NonConvergence, OnSwitchingSurface, PreconditionError,
    StabilityDisagreement,
)
from tests.conftest import ANTAGONISTIC, random_interior_state, random_system, two_node_system

TOL = 1e-9
SEVERE_ENDEMIC_X = 2.1 - math.sqrt(2.41)


def mild_pair():
    return two_node_system([2.0, 2.0], 1.0, 0.5, 0.2)


class TestReproductionNumber:

    @pytest.mark.parametrize("o, expected", [
        ([0.5, 0.5], 0.25),
        ([-0.5, -0.5], 2.0),
        ([0.0, 0.0], 1.25 / 1.5),
    ])
    def test_hand_values(self, moderate_pair, o, expected):
        assert reproduction_number(moderate_pair, o) == pytest.approx(expected, rel=TOL)

    def test_monotone_pair(self, moderate_pair):
        assert reproduction_number(moderate_pair, [-0.2, 0.3]) >= reproduction_number(moderate_pair, [-0.1, 0.3])

    def test_monotone_in_opinions(self):
        rng = np.random.default_rng(1)
        for trial in range(500):
            n = int(rng.integers(2, 11))
            p = random_system(trial % 25, n)
            o = rng.uniform(-0.5, 0.5, size=n)
            higher = np.minimum(o + rng.uniform(0.0, 0.5, size=n), 0.5)
            assert reproduction_number(p, o) >= reproduction_number(p, higher) - TOL

    def test_bounded_by_extremes(self):
        rng = np.random.default_rng(2)
        for trial in range(500):
            n = int(rng.integers(2, 11))
            p = random_system(trial % 25, n)
            bounds = reproduction_bounds(p)
            r = reproduction_number(p, rng.uniform(-0.5, 0.5, size=n))
            assert bounds.r_min - TOL <= r <= bounds.r_max + TOL

    def test_degenerate_rates_collapse_bounds(self):
        p = two_node_system([1.0, 1.0], 1.0, 0.5, 0.5)
        bounds = reproduction_bounds(p)
        assert bounds.r_min == pytest.approx(bounds.r_max, rel=TOL)


class TestClassifyRegime:

    def test_moderate(self, moderate_pair):
        regime, bounds = classify_regime(moderate_pair)
        assert regime is Regime.MODERATE
        assert bounds.r_min == pytest.approx(0.25, rel=TOL)
        assert bounds.r_max == pytest.approx(2.0, rel=TOL)

    def test_mild(self):
        assert classify_regime(mild_pair())[0] is Regime.MILD

    def test_severe(self, severe_pair):
        regime, bounds = classify_regime(severe_pair)
        assert regime is Regime.SEVERE
        assert bounds.r_min == pytest.approx(2.0 / 1.2, rel=TOL)

    def test_boundary_mild(self, boundary_pair):
        regime, _ = classify_regime(boundary_pair)
        assert regime is Regime.BOUNDARY_MILD_EXACT
        assert regime.is_mild

    def test_boundary_severe(self):
        regime, _ = classify_regime(two_node_system([2.0, 2.0], 1.0, 3.0, 2.0))
        assert regime is Regime.BOUNDARY_SEVERE_EXACT


class TestJacobian:

    def test_healthy_block_structure(self, antagonistic_pair):
        o = np.array([0.1, -0.3])
        jacobian = jacobian_at(antagonistic_pair, State(np.zeros(2), o))
        healing, infection = rate_matrices(antagonistic_pair, o)
        assert np.array_equal(jacobian[2:, :2], np.eye(2))
        assert np.allclose(jacobian[:2, 2:], 0.0)
        assert np.allclose(jacobian[:2, :2], -healing + infection)

    def test_rejects_switching_surface(self, moderate_pair):
        with pytest.raises(OnSwitchingSurface):
            jacobian_at(moderate_pair, State([0.5, 0.5], [0.0, 0.2]))

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(31)
        for k in range(100):
            n = int(rng.integers(2, 7))
            p = random_system(k, n)
            s = random_interior_state(rng, n)
            assert np.allclose(jacobian_at(p, s), finite_difference_jacobian(p, s), atol=1e-5, rtol=0)

    def test_mild_consensus_point_is_hurwitz(self):
        p = mild_pair()
        assert is_hurwitz(jacobian_at(p, State(np.zeros(2), [-0.5, -0.5]))).is_hurwitz is True


class TestConsensusHealthy:

    def test_point_and_residual(self, three_node_system):
        report = consensus_healthy_equilibrium(three_node_system)
        assert np.array_equal(report.point.x, np.zeros(3))
        assert np.array_equal(report.point.o, -0.5 * np.ones(3))
        assert report.residual <= 1e-12
        assert report.eq_class is EquilibriumClass.CONSENSUS_HEALTHY

    def test_mild_is_stable(self):
        assert consensus_healthy_equilibrium(mild_pair()).verdict is Verdict.STABLE

    def test_moderate_is_unstable(self, moderate_pair):
        report = consensus_healthy_equilibrium(moderate_pair)
        assert report.verdict is Verdict.UNSTABLE
        assert report.r_at_equilibrium == pytest.approx(2.0)

    def test_severe_is_unstable(self, severe_pair):
        assert consensus_healthy_equilibrium(severe_pair).verdict is Verdict.UNSTABLE

    def test_boundary_is_marginal(self, boundary_pair):
        assert consensus_healthy_equilibrium(boundary_pair).verdict is Verdict.MARGINAL

    def test_report_dict(self, moderate_pair):
        payload = consensus_healthy_equilibrium(moderate_pair).to_dict()
        assert payload['class'] == 'consensus-healthy'
        assert payload['verdict'] == 'unstable'


def brute_force_patterns(p):
    """Self-consistent mixed patterns found by solving each linear system directly."""
    n = p.n
    found = []
    for signs in itertools.product([1, -1], repeat=n):
        signs = np.array(signs)
        if abs(signs.sum()) == n:
            continue
        phi = np.diag(signs.astype(float))
        o = np.linalg.solve(phi @ p.opinion_laplacian @ phi + np.eye(n), -0.5 * np.ones(n))
        if np.array_equal(np.where(o >= 0, 1, -1), signs):
            found.append(tuple(signs.tolist()))
    return sorted(found)


class TestDissensusHealthy:

    def test_single_antagonistic_point(self, antagonistic_pair):
        reports = dissensus_healthy_equilibria(antagonistic_pair)
        assert len(reports) == 1
        report = reports[0]
        assert np.allclose(report.point.o, [0.1, -0.3], atol=1e-12)
        assert report.pattern.signs.tolist() == [1, -1]
        assert report.eq_class is EquilibriumClass.DISSENSUS_HEALTHY

    def test_low_r_point_is_stable(self, antagonistic_pair):
        report = dissensus_healthy_equilibria(antagonistic_pair)[0]
        assert report.r_at_equilibrium < 1.0
        assert report.verdict is Verdict.STABLE
        assert classify_stability(antagonistic_pair, report) is Verdict.STABLE

    def test_high_r_point_is_unstable(self):
        p = two_node_system([2.0, 2.0], 1.0, 3.0, 0.5, opinions=ANTAGONISTIC)
        report = dissensus_healthy_equilibria(p)[0]
        assert report.r_at_equilibrium > 1.0
        assert report.verdict is Verdict.UNSTABLE

    def test_symmetric_pair_has_none(self, moderate_pair):
        assert dissensus_healthy_equilibria(moderate_pair) == []

    def test_three_node_matches_brute_force(self, three_node_system):
        reports = dissensus_healthy_equilibria(three_node_system)
        found = sorted(tuple(r.pattern.signs.tolist()) for r in reports)
        assert found == brute_force_patterns(three_node_system)

    def test_accepted_points_are_valid(self):
        for seed in range(10):
            p = random_system(seed, 6)
            for report in dissensus_healthy_equilibria(p):
                o = report.point.o
                assert np.all(np.abs(o) <= 0.5)
                assert np.all(np.abs(o) > 1e-9)
                assert report.pattern.is_mixed
                assert theorem_residual(p, o) < 1e-12
                assert report.residual < 1e-12

    def test_sampled_patterns_agree_with_exhaustive(self, three_node_system):
        exhaustive = dissensus_healthy_equilibria(three_node_system)
        sampled = dissensus_healthy_equilibria(three_node_system, pattern_cap=4, samples=200, seed=3)
        assert {r.pattern for r in sampled} == {r.pattern for r in exhaustive}

    def test_opinion_near_zero_is_inconsistent(self):
        # pattern (+1, -1) solves to o ~ (8e-12, -1/6)
        p = two_node_system([2.0, 2.0], 1.0, 2.0, 0.5, opinions=np.array([[0.0, 3.0 + 1e-10], [2.0, 0.0]]))
        with pytest.raises(EquilibriumInconsistency):
            dissensus_healthy_equilibria(p)


class TestStabilityVerdict:

    def test_disagreement_raises(self):
        with pytest.raises(StabilityDisagreement):
            _verdict(EquilibriumClass.DISSENSUS_HEALTHY, 0.5, HurwitzResult(False, 0.3), TOL)

    def test_marginal_jacobian_defers_to_r(self):
        verdict = _verdict(EquilibriumClass.DISSENSUS_HEALTHY, 0.5, HurwitzResult(None, 0.0), TOL)
        assert verdict is Verdict.STABLE

    def test_endemic_uses_jacobian_only(self):
        verdict = _verdict(EquilibriumClass.DISSENSUS_ENDEMIC, 3.0, HurwitzResult(True, -0.2), TOL)
        assert verdict is Verdict.STABLE


class TestEndemicEquilibrium:

    def test_severe_symmetric_point(self, severe_pair):
        report = endemic_equilibrium(severe_pair, State([0.3, 0.3], [0.0, 0.0]))
        assert report is not None
        assert np.allclose(report.point.x, SEVERE_ENDEMIC_X, atol=1e-8)
        assert np.allclose(report.point.o, SEVERE_ENDEMIC_X - 0.5, atol=1e-8)
        assert report.eq_class is EquilibriumClass.CONSENSUS_ENDEMIC
        assert report.residual < 1e-10
        assert report.empirical

    def test_interior_from_asymmetric_seed(self, severe_pair):
        report = endemic_equilibrium(severe_pair, State([0.1, 0.2], [0.1, -0.3]))
        assert report is not None
        assert np.all(report.point.x > 0) and np.all(report.point.x < 1)
        assert np.all(np.abs(report.point.o) < 0.5)
        assert np.all(np.abs(report.point.o) > 1e-9)
        assert report.residual < 1e-10

    def test_mild_rejected(self):
        with pytest.raises(PreconditionError):
            endemic_equilibrium(mild_pair(), State([0.5, 0.5], [0.0, 0.0]))

    def test_zero_seed_rejected(self, severe_pair):
        with pytest.raises(PreconditionError):
            endemic_equilibrium(severe_pair, State([0.0, 0.0], [0.1, 0.1]))

    def test_horizon_budget(self, severe_pair):
        with pytest.raises(HorizonExceeded):
            endemic_equilibrium(severe_pair, State([0.01, 0.02], [0.1, -0.3]), initial_horizon=0.1, max_horizon=0.1)

    def test_collapse_to_stable_healthy_point(self, antagonistic_pair):
        assert endemic_equilibrium(antagonistic_pair, State([1e-3, 1e-3], [0.1, -0.3])) is None

    def test_refine_polishes_a_near_point(self, severe_pair):
        x = SEVERE_ENDEMIC_X + np.array([1e-4, -2e-4])
        z = _refine(severe_pair, np.concatenate([x, x - 0.5]), 1e-10, 50)
        assert np.allclose(z[:2], SEVERE_ENDEMIC_X, atol=1e-9)
        assert np.allclose(z[2:], SEVERE_ENDEMIC_X - 0.5, atol=1e-9)

    def test_failed_refinement_raises(self, severe_pair, monkeypatch):
        def stalled(fun, x0, **kwargs):
            return OptimizeResult(x=np.asarray(x0), success=False, message="not making good progress")

        monkeypatch.setattr(scipy.optimize, 'root', stalled)
        z = np.array([0.3, 0.3, 0.0, 0.0])
        with pytest.raises(NonConvergence):
            _refine(severe_pair, z, 1e-10, 50)


class TestInvarianceCheck:

    def test_severe_pair_passes(self, severe_pair):
        report = xi_epsilon_invariance_check(severe_pair, 1e-4, trials=200)
        assert report.largest_passing == 1e-4
        assert report.counterexamples == []
        assert report.phi == pytest.approx(0.8, rel=TOL)
        assert np.allclose(report.y, [1.0, 1.0])

    def test_zero_epsilon(self, severe_pair):
        report = xi_epsilon_invariance_check(severe_pair, 0.0)
        assert report.largest_passing == 0.0
        assert report.trials == 0

    def test_mild_rejected(self):
        with pytest.raises(PreconditionError):
            xi_epsilon_invariance_check(mild_pair(), 1e-4)

    def test_boundary_faces_point_inward(self, severe_pair):
        report = xi_epsilon_invariance_check(severe_pair, 1e-3, trials=100, seed=9)
        for k in range(2):
            x = np.full(2, 0.5)
            x[k] = report.largest_passing * report.y[k]
            dx, _ = rhs(severe_pair, State(x, [0.5, 0.5]))
            assert dx[k] > 0


class TestOpinionOutcome:

    def test_consensus(self):
        assert opinion_outcome([-0.5, -0.5, -0.5]) == 'consensus'

    def test_dissensus(self):
        assert opinion_outcome([0.1, -0.3]) == 'dissensus'

    def test_same_sign(self):
        assert opinion_outcome([0.1, 0.3]) == 'same-sign'

    def test_theorem_residual_at_dissensus_point(self, antagonistic_pair):
        assert theorem_residual(antagonistic_pair, [0.1, -0.3]) == pytest.approx(0.0, abs=1e-12)
