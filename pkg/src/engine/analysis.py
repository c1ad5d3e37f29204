"""Reproduction numbers, regimes, equilibria and their stability."""

import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize
from tqdm import tqdm

from src.config import Config
from src.engine.dynamics import VectorField, next_generation_matrix, rate_matrices, rhs, simulate
from src.engine.graph import gauge_from_opinions, sign_pattern, signed_laplacian
from src.engine.spectral import is_hurwitz, metzler_eigenpair, spectral_radius
from src.models.entities import (
    EquilibriumClass, EquilibriumReport, GaugeVector, HurwitzResult, Regime, ReproductionNumbers,
    State, SystemParams, Verdict, XiInvarianceReport,
)
from src.models.errors import (
    EquilibriumInconsistency, HorizonExceeded, NonConvergence, OnSwitchingSurface,
    PreconditionError, SingularSolve, StabilityDisagreement,
)
from src.utils.seeding import SeedGenerator
from src.utils.validators import StateValidator

logger = logging.getLogger(__name__)


def reproduction_number(p: SystemParams, o, start: Optional[np.ndarray] = None) -> float:
    """R_t^o = rho(D(o)^-1 B(o))."""
    return spectral_radius(next_generation_matrix(p, o), start=start, fallback=True).value


def reproduction_bounds(p: SystemParams) -> ReproductionNumbers:
    """R_min = R(0.5e) = rho(D^-1 B_min) and R_max = R(-0.5e) = rho(D_min^-1 B)."""
    r_min = reproduction_number(p, np.full(p.n, 0.5))
    r_max = reproduction_number(p, np.full(p.n, -0.5))
    return ReproductionNumbers(r_min=r_min, r_max=r_max)


def classify_regime(p: SystemParams, band: float = Config.R_BAND) -> Tuple[Regime, ReproductionNumbers]:
    bounds = reproduction_bounds(p)
    if abs(bounds.r_max - 1.0) <= band:
        regime = Regime.BOUNDARY_MILD_EXACT
    elif bounds.r_max < 1.0:
        regime = Regime.MILD
    elif abs(bounds.r_min - 1.0) <= band:
        regime = Regime.BOUNDARY_SEVERE_EXACT
    elif bounds.r_min > 1.0:
        regime = Regime.SEVERE
    else:
        regime = Regime.MODERATE
    return regime, bounds


def jacobian_at(p: SystemParams, s: State, surface_tol: float = Config.SWITCHING_SURFACE_TOL) -> np.ndarray:
    """Analytic 2n x 2n Jacobian of the vector field at s (off the switching surface).

    Blocks:
        [[W(o) - diag(B(o)x),  -(D - D_min)X - (I - X) diag((B - B_min)x)],
         [I,                   -(Phi L Phi + I)]]
    with W(o) = -D(o) + (I - X)B(o).
    """
    if np.any(np.abs(s.o) < surface_tol):
        raise OnSwitchingSurface(
            f"Jacobian undefined on the switching surface (min |o_i| = {np.abs(s.o).min():.3e})"
        )
    n = p.n
    x, o = s.x, s.o
    healing, infection = rate_matrices(p, o)
    eye = np.eye(n)

    upper_left = -healing + (1.0 - x)[:, None] * infection - np.diag(infection @ x)
    upper_right = -np.diag(p.healing_gap * x + (1.0 - x) * (p.infection_gap @ x))
    lower_right = -(signed_laplacian(gauge_from_opinions(o), p.opinion_laplacian) + eye)
    return np.block([[upper_left, upper_right], [eye, lower_right]])


def finite_difference_jacobian(p: SystemParams, s: State, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of rhs; the gauge follows the perturbed opinions."""
    z = s.as_vector()
    columns = []
    for k in range(z.shape[0]):
        dz = np.zeros_like(z)
        dz[k] = step
        plus = np.concatenate(rhs(p, State.from_vector(z + dz)))
        minus = np.concatenate(rhs(p, State.from_vector(z - dz)))
        columns.append((plus - minus) / (2.0 * step))
    return np.column_stack(columns)


def _r_verdict(r: float, band: float) -> Verdict:
    if r < 1.0 - band:
        return Verdict.STABLE
    if r > 1.0 + band:
        return Verdict.UNSTABLE
    return Verdict.MARGINAL


def _verdict(eq_class: EquilibriumClass, r: float, hurwitz: HurwitzResult, band: float) -> Verdict:
    if not eq_class.is_healthy:
        return hurwitz.verdict
    verdict = _r_verdict(r, band)
    if verdict is not Verdict.MARGINAL and hurwitz.is_hurwitz is not None and hurwitz.verdict is not verdict:
        raise StabilityDisagreement(
            f"R = {r:.12g} gives {verdict.value} but the Jacobian margin {hurwitz.margin:.3e} "
            f"gives {hurwitz.verdict.value}"
        )
    return verdict


def classify_stability(p: SystemParams, eq: EquilibriumReport, band: float = Config.R_BAND) -> Verdict:
    """Stability verdict for a verified equilibrium.

    Healthy equilibria use R_t^{o*} against 1 (marginal within `band`) and are
    cross-checked against the Jacobian spectrum. Endemic equilibria use the
    Jacobian spectrum alone.
    """
    r = reproduction_number(p, eq.point.o)
    return _verdict(eq.eq_class, r, is_hurwitz(jacobian_at(p, eq.point)), band)


def _build_report(
    p: SystemParams,
    point: State,
    eq_class: EquilibriumClass,
    pattern: Optional[GaugeVector] = None,
    band: float = Config.R_BAND,
) -> EquilibriumReport:
    r = reproduction_number(p, point.o)
    hurwitz = is_hurwitz(jacobian_at(p, point))
    residual = float(np.max(np.abs(np.concatenate(rhs(p, point)))))
    return EquilibriumReport(
        point=point,
        eq_class=eq_class,
        jacobian_max_real=hurwitz.margin,
        verdict=_verdict(eq_class, r, hurwitz, band),
        r_at_equilibrium=r,
        residual=residual,
        empirical=not eq_class.is_healthy,
        pattern=pattern if pattern is not None else gauge_from_opinions(point.o),
    )


def consensus_healthy_equilibrium(p: SystemParams) -> EquilibriumReport:
    """The unique consensus-healthy state (0, -0.5e)."""
    point = State(np.zeros(p.n), np.full(p.n, -0.5))
    return _build_report(p, point, EquilibriumClass.CONSENSUS_HEALTHY)


def _solve_pattern(p: SystemParams, gauge: GaugeVector) -> np.ndarray:
    system = signed_laplacian(gauge, p.opinion_laplacian) + np.eye(p.n)
    try:
        o = scipy.linalg.solve(system, np.full(p.n, -0.5))
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularSolve(f"Phi L Phi + I is singular for pattern {gauge.signs.tolist()}: {e}") from e
    if not np.all(np.isfinite(o)):
        raise SingularSolve(f"non-finite solution for pattern {gauge.signs.tolist()}")
    return o


def _mixed_patterns(n: int, pattern_cap: int, samples: int, seed: int) -> List[GaugeVector]:
    bits = np.arange(n)
    if 2 ** n <= pattern_cap:
        return [GaugeVector(np.where((mask >> bits) & 1, 1, -1)) for mask in range(1, 2 ** n - 1)]

    rng = SeedGenerator.rng(seed, 'sign-patterns')
    seen = set()
    patterns = []
    for _ in range(samples):
        signs = rng.choice(np.array([-1, 1]), size=n)
        if abs(int(signs.sum())) == n:
            continue
        gauge = GaugeVector(signs)
        if gauge not in seen:
            seen.add(gauge)
            patterns.append(gauge)
    logger.info(f"n={n} exceeds the exhaustive cap; sampled {len(patterns)} distinct sign patterns")
    return patterns


def dissensus_healthy_equilibria(
    p: SystemParams,
    pattern_cap: int = Config.PATTERN_CAP,
    samples: int = Config.PATTERN_SAMPLES,
    seed: int = 0,
    progress: bool = False,
) -> List[EquilibriumReport]:
    """Enumerate self-consistent healthy equilibria with mixed opinion signs.

    For each candidate pattern sigma, (Phi_sigma L Phi_sigma + I) o = -0.5e is
    solved directly and kept iff sgnm(o) = sigma exactly. Exhaustive over the
    2^n - 2 mixed patterns while 2^n <= pattern_cap, sampled beyond.
    """
    reports = []
    patterns = _mixed_patterns(p.n, pattern_cap, samples, seed)
    for gauge in tqdm(patterns, desc="Sign patterns", disable=not progress):
        o = _solve_pattern(p, gauge)
        if gauge_from_opinions(o) != gauge:
            continue
        if np.any(np.abs(o) <= Config.R_BAND):
            raise EquilibriumInconsistency(
                f"healthy equilibrium for pattern {gauge.signs.tolist()} has an opinion within "
                f"{Config.R_BAND:g} of zero: {o.tolist()}"
            )
        if np.any(np.abs(o) > 0.5 + Config.R_BAND):
            raise EquilibriumInconsistency(
                f"healthy equilibrium for pattern {gauge.signs.tolist()} leaves the opinion box: {o.tolist()}"
            )
        point = State(np.zeros(p.n), np.clip(o, -0.5, 0.5))
        reports.append(_build_report(p, point, EquilibriumClass.DISSENSUS_HEALTHY, gauge))
    logger.info(f"Found {len(reports)} dissensus-healthy equilibria over {len(patterns)} patterns")
    return reports


def _residual(field: VectorField, z: np.ndarray) -> float:
    return float(np.max(np.abs(field(z, sign_pattern(z[field.n:])))))


def _refine(p: SystemParams, z: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Polish a near-equilibrium with MINPACK's hybrid method and the analytic Jacobian."""
    field = VectorField(p)
    result = scipy.optimize.root(
        lambda w: field(w, sign_pattern(w[p.n:])),
        z,
        jac=lambda w: jacobian_at(p, State.from_vector(w)),
        method='hybr',
        tol=tol,
        options={'maxfev': max_iter * (2 * p.n + 1)},
    )
    residual = _residual(field, result.x)
    if residual < tol:
        return result.x
    if not result.success:
        raise NonConvergence(f"root refinement failed: {result.message} (residual {residual:.3e})")
    raise NonConvergence(f"root refinement stopped at residual {residual:.3e}, above {tol:g}")


def endemic_equilibrium(
    p: SystemParams,
    seed_state: State,
    tol: float = Config.EQUILIBRIUM_TOL,
    h: float = Config.STEP_SIZE,
    initial_horizon: float = Config.ENDEMIC_INITIAL_HORIZON,
    max_horizon: float = Config.ENDEMIC_MAX_HORIZON,
    handoff_tol: float = Config.NEWTON_HANDOFF_TOL,
    max_iter: int = Config.NEWTON_MAX_ITER,
) -> Optional[EquilibriumReport]:
    """Locate an endemic equilibrium by simulating from seed_state, then a root solve.

    The flow is integrated in chunks of doubling length (initial_horizon,
    2*initial_horizon, ...) until the residual drops below handoff_tol, and the
    point is refined with scipy.optimize.root (hybr) to `tol`. Returns None when the flow
    collapses onto the healthy set; raises HorizonExceeded when max_horizon
    elapses first.
    """
    regime, _ = classify_regime(p)
    if regime.is_mild:
        raise PreconditionError(f"no endemic equilibria exist in the {regime.value} regime")
    StateValidator.require_state(seed_state, p.n, Config.BOX_TOLERANCE)
    if not np.any(seed_state.x > 0):
        raise PreconditionError("endemic search needs a seed state with x != 0")

    field = VectorField(p)
    z = seed_state.as_vector()
    elapsed, chunk = 0.0, initial_horizon
    while _residual(field, z) >= handoff_tol:
        if np.max(z[:p.n]) < Config.HEALTHY_COLLAPSE_TOL:
            logger.info(f"Endemic search collapsed onto the healthy set after t={elapsed:g}")
            return None
        if elapsed >= max_horizon:
            raise HorizonExceeded(
                f"no equilibrium within t={max_horizon:g} (residual {_residual(field, z):.3e})"
            )
        chunk = min(chunk, max_horizon - elapsed)
        n_steps = max(1, int(np.ceil(chunk / h - 1e-9)))
        trajectory = simulate(p, State.from_vector(z), horizon=chunk, h=h, record_every=n_steps)
        z = trajectory.final_state.as_vector()
        elapsed += chunk
        chunk *= 2.0

    if np.max(z[:p.n]) < Config.HEALTHY_COLLAPSE_TOL:
        logger.info("Endemic search converged to a healthy state")
        return None

    z = _refine(p, z, tol, max_iter)
    if np.max(z[:p.n]) < Config.HEALTHY_COLLAPSE_TOL:
        logger.info("Root refinement landed on the healthy set")
        return None
    point = State.from_vector(z)
    margin = min(
        float(point.x.min()), float(1.0 - point.x.max()),
        float(0.5 - np.abs(point.o).max()), float(np.abs(point.o).min()),
    )
    if margin <= Config.R_BAND:
        raise EquilibriumInconsistency(
            f"endemic equilibrium is not strictly interior (margin {margin:.3e}): "
            f"x={point.x.tolist()}, o={point.o.tolist()}"
        )
    logger.info(f"Endemic equilibrium found after t={elapsed:g} (sup x = {point.x.max():.6g})")
    # Uniform opinions can occur at endemic points of symmetric systems.
    if opinion_outcome(point.o) == 'consensus':
        eq_class = EquilibriumClass.CONSENSUS_ENDEMIC
    else:
        eq_class = EquilibriumClass.DISSENSUS_ENDEMIC
    return _build_report(p, point, eq_class)


def xi_epsilon_invariance_check(
    p: SystemParams,
    epsilon: float,
    trials: int = 1000,
    seed: int = 0,
    ladder: int = 20,
) -> XiInvarianceReport:
    """Sample the faces x_i = eps*y_i of the set {x >= eps*y} and test dx_i > 0.

    (phi, y) is the rightmost eigenpair of -D + B_min (max y_i = 1). The ladder
    eps, eps/2, ..., eps/2^(ladder-1) is tried from the top; the first rung on
    which every sample points inward is reported as largest_passing.
    """
    regime, _ = classify_regime(p)
    if regime is not Regime.SEVERE:
        raise PreconditionError(f"invariance check requires the severe regime, got {regime.value}")
    if epsilon < 0:
        raise PreconditionError("epsilon must be non-negative")

    pair = metzler_eigenpair(-np.diag(p.healing_rates) + p.infection_floor, fallback=True)
    y = pair.vector
    report = XiInvarianceReport(phi=pair.value, y=y, epsilons_tested=[], largest_passing=0.0)
    if epsilon == 0:
        report.epsilons_tested.append(0.0)
        return report

    rng = SeedGenerator.rng(seed, 'xi-invariance')
    for k in range(ladder):
        eps = epsilon * 2.0 ** -k
        report.epsilons_tested.append(eps)
        failures = []
        for _ in range(trials):
            i = int(rng.integers(p.n))
            x = rng.uniform(np.minimum(eps * y, 1.0), 1.0)
            x[i] = eps * y[i]
            o = rng.uniform(-0.5, 0.5, size=p.n)
            dx, _ = rhs(p, State(x, o))
            if not dx[i] > 0:
                failures.append(State(x, o))
        report.trials += trials
        if not failures:
            report.largest_passing = eps
            break
        report.counterexamples.extend(failures[:10])
    return report


def opinion_outcome(o, tol: float = 1e-6) -> str:
    """'consensus', 'dissensus' or 'same-sign' for a terminal opinion vector."""
    o = np.asarray(o, dtype=float)
    if np.max(o) - np.min(o) <= tol:
        return 'consensus'
    if gauge_from_opinions(o).is_mixed:
        return 'dissensus'
    return 'same-sign'


def theorem_residual(p: SystemParams, o) -> float:
    """||(Phi(o) L Phi(o) + I) o + 0.5e||_inf, zero at every healthy equilibrium."""
    o = np.asarray(o, dtype=float)
    lap = signed_laplacian(gauge_from_opinions(o), p.opinion_laplacian)
    return float(np.max(np.abs(lap @ o + o + 0.5)))
