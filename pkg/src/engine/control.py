"""Opinion-shaping interventions: threshold opinions and stubborn communities."""

import dataclasses
import itertools
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize
from tqdm import tqdm

from src.config import Config
from src.engine.analysis import classify_regime, reproduction_number
from src.engine.dynamics import simulate
from src.models.entities import (
    InterventionPlan, Regime, State, StubbornSpec, SystemParams, ThresholdResult, Trajectory,
)
from src.models.errors import Infeasible, PreconditionError, RegimeMismatch
from src.utils.seeding import SeedGenerator

logger = logging.getLogger(__name__)

GREEDY = 'greedy'
EXHAUSTIVE = 'exhaustive'


def uniform_threshold(p: SystemParams, tol: float = Config.THRESHOLD_TOL) -> ThresholdResult:
    """Uniform threshold opinion alpha with R(alpha * e) = 1.

    alpha -> R(alpha * e) is non-increasing, so bisection on [-0.5, 0.5] is
    sound. In the two exact-boundary regimes the matching endpoint is returned
    with boundary=True.
    """
    regime, bounds = classify_regime(p)
    if regime is Regime.BOUNDARY_MILD_EXACT:
        return ThresholdResult(alpha=-0.5, r_at_alpha=bounds.r_max, boundary=True)
    if regime is Regime.BOUNDARY_SEVERE_EXACT:
        return ThresholdResult(alpha=0.5, r_at_alpha=bounds.r_min, boundary=True)
    if regime is not Regime.MODERATE:
        raise RegimeMismatch(
            f"threshold opinions exist only in the moderate regime "
            f"(R_min={bounds.r_min:.6g}, R_max={bounds.r_max:.6g}, regime {regime.value})"
        )

    def excess(alpha: float) -> float:
        return reproduction_number(p, np.full(p.n, alpha)) - 1.0

    alpha = scipy.optimize.bisect(excess, -0.5, 0.5, xtol=1e-14, maxiter=200)
    r_at_alpha = excess(alpha) + 1.0
    if abs(r_at_alpha - 1.0) > tol:
        logger.warning(f"Threshold residual {abs(r_at_alpha - 1.0):.3e} exceeds tolerance {tol:g}")
    logger.info(f"Uniform threshold opinion alpha = {alpha:.12g} (R = {r_at_alpha:.12g})")
    return ThresholdResult(alpha=float(alpha), r_at_alpha=r_at_alpha)


def compare_to_threshold(o_star, alpha: float) -> str:
    """'above' if o* >> alpha*e, 'below' if o* << alpha*e, else 'incomparable'."""
    o_star = np.asarray(o_star, dtype=float)
    if np.all(o_star > alpha):
        return 'above'
    if np.all(o_star < alpha):
        return 'below'
    return 'incomparable'


def extreme_vector(n: int, pinned: Sequence[int], pin_level: float = 0.5) -> np.ndarray:
    """Worst-case opinions: pin_level on the pinned set, -0.5 elsewhere."""
    o = np.full(n, -0.5)
    o[list(pinned)] = pin_level
    return o


def _plan(pinned: Sequence[int], r: float, pin_level: float, mode: str) -> InterventionPlan:
    return InterventionPlan(
        stubborn=StubbornSpec({i: pin_level for i in pinned}),
        predicted_r=r,
        pin_level=pin_level,
        mode=mode,
    )


def _greedy(p: SystemParams, pin_level: float, target_r: float) -> Optional[Tuple[List[int], float]]:
    pinned: List[int] = []
    while len(pinned) < p.n:
        best_i, best_r = None, np.inf
        for i in range(p.n):
            if i in pinned:
                continue
            r = reproduction_number(p, extreme_vector(p.n, pinned + [i], pin_level))
            if r < best_r - Config.TIE_TOL:  # near-ties keep the lower index
                best_i, best_r = i, r
        pinned.append(best_i)
        logger.debug(f"Greedy pinned community {best_i}: R = {best_r:.12g}")
        if best_r < target_r:
            return sorted(pinned), best_r
    return None


def _exhaustive(p: SystemParams, pin_level: float, target_r: float) -> Optional[Tuple[List[int], float]]:
    for k in range(1, p.n + 1):
        for subset in itertools.combinations(range(p.n), k):
            r = reproduction_number(p, extreme_vector(p.n, subset, pin_level))
            if r < target_r:
                return list(subset), r
    return None


def select_stubborn_extreme(
    p: SystemParams,
    mode: str = GREEDY,
    pin_level: float = 0.5,
    target_r: float = Config.PLAN_TARGET_R,
    exhaustive_max_n: int = Config.EXHAUSTIVE_MAX_N,
) -> InterventionPlan:
    """Find a small set S whose pinning at pin_level gives R(extreme vector) < target_r.

    Free communities are assumed at the worst case -0.5, so predicted_r bounds R
    along any trajectory under the plan. Greedy adds the community that lowers R
    most (lowest index on ties); exhaustive scans subsets by increasing size in
    lexicographic order and returns the first hit.
    """
    regime, bounds = classify_regime(p)
    if regime is not Regime.MODERATE:
        raise RegimeMismatch(f"stubborn selection requires the moderate regime, got {regime.value}")
    if not -0.5 < pin_level <= 0.5:
        raise PreconditionError(f"pin_level must lie in (-0.5, 0.5], got {pin_level}")

    if mode == GREEDY:
        found = _greedy(p, pin_level, target_r)
    elif mode == EXHAUSTIVE:
        if p.n > exhaustive_max_n:
            raise PreconditionError(f"exhaustive selection is limited to n <= {exhaustive_max_n}, got n={p.n}")
        found = _exhaustive(p, pin_level, target_r)
    else:
        raise PreconditionError(f"unknown selection mode: {mode}")

    if found is None:
        raise Infeasible(
            f"pinning every community at {pin_level:g} does not bring R below {target_r:.12g} "
            f"(R_min = {bounds.r_min:.6g})"
        )
    pinned, r = found
    logger.info(f"Selected {len(pinned)} stubborn communities {pinned} ({mode}): predicted R = {r:.6g}")
    return _plan(pinned, r, pin_level, mode)


def _threshold_alpha(p: SystemParams) -> Optional[float]:
    try:
        return uniform_threshold(p).alpha
    except RegimeMismatch:
        return None


def verify_plan(
    p: SystemParams,
    plan: InterventionPlan,
    s0: State,
    horizon: float = Config.VERIFY_HORIZON,
    h: float = Config.STEP_SIZE,
    tol: float = Config.ERADICATION_TOL,
    record_every: int = 100,
    progress: bool = False,
) -> Tuple[InterventionPlan, Trajectory]:
    """Simulate under the plan and record whether the epidemic was eradicated.

    Also records the lowest free-community opinion over the second half of the
    run and whether it stayed above the uniform threshold opinion.
    """
    trajectory = simulate(
        p, s0, horizon=horizon, h=h, stubborn=plan.stubborn, record_every=record_every, progress=progress,
    )
    final_sup_x = float(trajectory.final_state.x.max())

    free = ~plan.stubborn.mask(p.n)
    watched = free if free.any() else np.ones(p.n, dtype=bool)
    times = np.asarray(trajectory.times)
    late = times >= 0.5 * times[-1]
    floor = float(trajectory.o_history[late][:, watched].min())
    alpha = _threshold_alpha(p)

    updated = dataclasses.replace(
        plan,
        verified=final_sup_x < tol,
        final_sup_x=final_sup_x,
        free_opinion_floor=floor,
        threshold_alpha=alpha,
        premise_held=None if alpha is None else bool(floor > alpha),
    )
    logger.info(
        f"Plan with {plan.cardinality} stubborn communities: final sup x = {final_sup_x:.3e} "
        f"({'eradicated' if updated.verified else 'not eradicated'})"
    )
    return updated, trajectory


def verify_plan_ensemble(
    p: SystemParams,
    plan: InterventionPlan,
    trials: int = 20,
    seed: int = 0,
    horizon: float = Config.VERIFY_HORIZON,
    h: float = Config.STEP_SIZE,
    tol: float = Config.ERADICATION_TOL,
    progress: bool = False,
) -> List[InterventionPlan]:
    """Run verify_plan from `trials` seeded random initial states."""
    results = []
    for k in tqdm(range(trials), desc="Verifying plan", disable=not progress):
        s0 = SeedGenerator.sample_state(SeedGenerator.rng(seed, 'verify-ensemble', k), p.n)
        checked, _ = verify_plan(p, plan, s0, horizon=horizon, h=h, tol=tol, record_every=1000)
        results.append(checked)
    passed = sum(r.verified for r in results)
    logger.info(f"Plan verified from {passed}/{trials} random initial states")
    return results
