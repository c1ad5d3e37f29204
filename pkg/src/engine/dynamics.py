"""Coupled epidemic-opinion vector field and the switch-aware RK4 integrator."""

import logging
import math
from collections import defaultdict, deque
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.config import Config
from src.engine.graph import sign_pattern, signed_laplacian
from src.engine.spectral import spectral_radius
from src.models.entities import (
    GaugeVector, IntegratorSettings, State, StubbornSpec, SwitchEvent, SystemParams, Trajectory,
)
from src.models.errors import StepTooLarge
from src.utils.validators import StateValidator, box_violation

logger = logging.getLogger(__name__)

__all__ = [
    'rate_matrices', 'next_generation_matrix', 'rhs', 'step', 'simulate',
    'box_violation', 'SwitchingIntegrator',
]


def rate_matrices(p: SystemParams, o) -> Tuple[np.ndarray, np.ndarray]:
    """D(o) = D_min + (D - D_min)(O + 0.5I) and B(o) = B - (O + 0.5I)(B - B_min)."""
    shifted = np.asarray(o, dtype=float) + 0.5
    healing = np.diag(p.delta_min + p.healing_gap * shifted)
    infection = p.infection_rates - shifted[:, None] * p.infection_gap
    return healing, infection


def next_generation_matrix(p: SystemParams, o) -> np.ndarray:
    """D(o)^-1 B(o)."""
    shifted = np.asarray(o, dtype=float) + 0.5
    healing = p.delta_min + p.healing_gap * shifted
    infection = p.infection_rates - shifted[:, None] * p.infection_gap
    return infection / healing[:, None]


class VectorField:
    """Right-hand side on the flat state z = (x, o) for a caller-fixed sign pattern.

    The pattern is a plain int array of +1/-1 entries (see graph.sign_pattern).
    For each pattern one 4n x 2n system matrix is built and cached so that a
    single product plus a constant offset yields, block by block,

        (B - B_min)x,   D(o),   B(0)x,   x - (Phi L Phi + I)o - 0.5e,

    with D(o) = D(0) + (D - D_min)O and B(0) = B - 0.5(B - B_min).
    """

    def __init__(self, p: SystemParams, stubborn: Optional[StubbornSpec] = None):
        self.p = p
        self.n = p.n
        self.pinned = stubborn.mask(p.n) if stubborn is not None else np.zeros(p.n, dtype=bool)
        self.any_pinned = bool(self.pinned.any())
        n = p.n
        self._offset = np.zeros(4 * n)
        self._offset[n:2 * n] = p.delta_min + 0.5 * p.healing_gap
        self._offset[3 * n:] = -0.5
        self._systems: Dict[bytes, np.ndarray] = {}

    def system(self, signs: np.ndarray) -> np.ndarray:
        key = signs.tobytes()
        matrix = self._systems.get(key)
        if matrix is None:
            n = self.n
            eye = np.eye(n)
            matrix = np.zeros((4 * n, 2 * n))
            matrix[:n, :n] = self.p.infection_gap
            matrix[n:2 * n, n:] = np.diag(self.p.healing_gap)
            matrix[2 * n:3 * n, :n] = self.p.infection_rates - 0.5 * self.p.infection_gap
            matrix[3 * n:, :n] = eye
            matrix[3 * n:, n:] = -(signed_laplacian(GaugeVector(signs), self.p.opinion_laplacian) + eye)
            self._systems[key] = matrix
        return matrix

    def evaluate(self, z: np.ndarray, system: np.ndarray) -> np.ndarray:
        n = self.n
        y = system @ z
        y += self._offset
        infection = y[2 * n:3 * n]
        infection -= z[n:] * y[:n]  # B(o)x
        # dx = B(o)x - x * (B(o)x + D(o))
        infection -= z[:n] * (infection + y[n:2 * n])
        out = y[2 * n:]
        if self.any_pinned:
            out[n:][self.pinned] = 0.0
        return out

    def __call__(self, z: np.ndarray, signs: np.ndarray) -> np.ndarray:
        return self.evaluate(z, self.system(signs))


def rhs(p: SystemParams, s: State, stubborn: Optional[StubbornSpec] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Return (dx, do) at s, with the gauge taken from s.o."""
    field = VectorField(p, stubborn)
    dz = field(s.as_vector(), sign_pattern(s.o))
    return dz[:p.n], dz[p.n:]


class SwitchingIntegrator:
    """Fixed-step RK4 that splits steps at opinion sign crossings.

    The gauge is frozen over each (sub)step at the value given by the opinions
    at its start. When the sign pattern at the end of a step differs, the first
    crossing is bracketed by bisection to EVENT_TOLERANCE * h, the step is
    advanced to the crossing and the remainder is integrated with the new gauge.
    """

    def __init__(
        self,
        p: SystemParams,
        stubborn: Optional[StubbornSpec] = None,
        box_tolerance: float = Config.BOX_TOLERANCE,
        event_tolerance: float = Config.EVENT_TOLERANCE,
        max_splits: int = Config.MAX_SPLITS_PER_STEP,
    ):
        self.p = p
        self.n = p.n
        self.stubborn = StateValidator.require_stubborn(stubborn, p.n)
        self.field = VectorField(p, stubborn)
        self.free = ~self.field.pinned
        self.box_tolerance = box_tolerance
        self.event_tolerance = event_tolerance
        self.max_splits = max_splits
        self.max_violation = 0.0
        self.split_cap_hits = 0
        self._lower = np.concatenate([np.zeros(p.n), np.full(p.n, -0.5)])
        self._upper = np.concatenate([np.ones(p.n), np.full(p.n, 0.5)])

    def pin(self, z: np.ndarray) -> np.ndarray:
        if self.stubborn is not None and self.stubborn.pinned:
            z = z.copy()
            z[self.n:] = self.stubborn.apply(z[self.n:])
        return z

    def _rk4(self, z: np.ndarray, h: float, system: np.ndarray) -> np.ndarray:
        f = self.field.evaluate
        k1 = f(z, system)
        k2 = f(z + (0.5 * h) * k1, system)
        k3 = f(z + (0.5 * h) * k2, system)
        k4 = f(z + h * k3, system)
        return z + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

    def _crossed(self, z: np.ndarray, negative: np.ndarray) -> np.ndarray:
        crossed = (z[self.n:] < 0) != negative
        if self.field.any_pinned:
            crossed &= self.free
        return crossed

    def advance(self, z: np.ndarray, h: float, t0: float = 0.0) -> Tuple[np.ndarray, List[SwitchEvent]]:
        events: List[SwitchEvent] = []
        remaining = h
        t = t0
        splits = 0
        while remaining > 0:
            negative = z[self.n:] < 0
            system = self.field.system(np.where(negative, -1, 1))
            trial = self._rk4(z, remaining, system)
            crossed = self._crossed(trial, negative)
            if not crossed.any():
                z = trial
                break
            if splits >= self.max_splits:
                self.split_cap_hits += 1
                logger.warning(
                    f"Event split cap ({self.max_splits}) reached at t={t:.6g}; "
                    f"finishing step without further splitting"
                )
                events.extend(self._events(t + remaining, crossed, negative))
                z = trial
                break

            lo, hi = 0.0, 1.0
            while (hi - lo) * remaining > self.event_tolerance * h:
                mid = 0.5 * (lo + hi)
                if self._crossed(self._rk4(z, mid * remaining, system), negative).any():
                    hi = mid
                else:
                    lo = mid
            sub = hi * remaining
            z = self._rk4(z, sub, system)
            t += sub
            events.extend(self._events(t, self._crossed(z, negative), negative))
            remaining = remaining - sub if hi < 1.0 else 0.0
            splits += 1
        return z, events

    @staticmethod
    def _events(t: float, crossed: np.ndarray, negative: np.ndarray) -> List[SwitchEvent]:
        return [
            SwitchEvent(time=t, community=int(i), old_sign=-1 if negative[i] else 1, new_sign=1 if negative[i] else -1)
            for i in np.flatnonzero(crossed)
        ]

    def project(self, z: np.ndarray) -> np.ndarray:
        """Clamp onto the box, raising StepTooLarge beyond the tolerance."""
        excess = float(np.maximum(self._lower - z, z - self._upper).max())
        if excess > 0.0:
            if excess > self.box_tolerance:
                raise StepTooLarge(
                    f"step left the box by {excess:.3e} (> {self.box_tolerance:g}); reduce h"
                )
            self.max_violation = max(self.max_violation, excess)
            z = np.minimum(np.maximum(z, self._lower), self._upper)
        return self.pin(z)

    def step(self, s: State, h: float, t0: float = 0.0) -> Tuple[State, List[SwitchEvent]]:
        z, events = self.advance(self.pin(s.as_vector()), h, t0)
        return State.from_vector(self.project(z)), events


def step(
    p: SystemParams,
    s: State,
    h: float,
    stubborn: Optional[StubbornSpec] = None,
    t0: float = 0.0,
) -> Tuple[State, List[SwitchEvent]]:
    """One event-aware RK4 step of size h from s."""
    StateValidator.require_settings(IntegratorSettings(h=h, horizon=h, record_every=1))
    StateValidator.require_state(s, p.n, Config.BOX_TOLERANCE)
    return SwitchingIntegrator(p, stubborn).step(s, h, t0)


class _SlidingMonitor:
    """Flags communities whose opinion re-crosses zero too often."""

    def __init__(self, crossings: int = Config.SLIDING_CROSSINGS, window: float = Config.SLIDING_WINDOW):
        self.crossings = crossings
        self.window = window
        self.recent = defaultdict(deque)
        self.flagged: List[int] = []

    def observe(self, event: SwitchEvent):
        times = self.recent[event.community]
        times.append(event.time)
        while times and times[0] < event.time - self.window:
            times.popleft()
        if len(times) > self.crossings and event.community not in self.flagged:
            self.flagged.append(event.community)
            logger.warning(
                f"Community {event.community} crossed zero more than {self.crossings} times "
                f"within {self.window:g} time units near t={event.time:.6g} (possible sliding mode)"
            )


def simulate(
    p: SystemParams,
    s0: State,
    horizon: float = Config.HORIZON,
    h: float = Config.STEP_SIZE,
    stubborn: Optional[StubbornSpec] = None,
    record_every: int = Config.RECORD_EVERY,
    progress: bool = False,
) -> Trajectory:
    """Integrate from s0 over [0, horizon] with steps of size h.

    Times are k*h for k < ceil(horizon / h); the last step is shortened so the
    run ends exactly at horizon. Every record_every-th state and the final
    state are recorded together with R_t^o; all switch events are kept.
    """
    StateValidator.require_settings(IntegratorSettings(h=h, horizon=horizon, record_every=record_every))
    StateValidator.require_state(s0, p.n, Config.BOX_TOLERANCE)

    integrator = SwitchingIntegrator(p, stubborn)
    monitor = _SlidingMonitor()
    n_steps = int(math.ceil(horizon / h - 1e-9)) if horizon > 0 else 0
    last_h = horizon - (n_steps - 1) * h

    z = integrator.project(integrator.pin(s0.as_vector()))
    state = State.from_vector(z)
    times, states, r_values, events = [0.0], [state], [], []

    pair = spectral_radius(next_generation_matrix(p, state.o), fallback=True)
    r_values.append(pair.value)

    for k in tqdm(range(1, n_steps + 1), desc="Simulating", disable=not progress):
        final = k == n_steps
        z, step_events = integrator.advance(z, last_h if final else h, (k - 1) * h)
        z = integrator.project(z)
        if step_events:
            for event in step_events:
                monitor.observe(event)
            events.extend(step_events)
        if final or k % record_every == 0:
            state = State.from_vector(z)
            pair = spectral_radius(next_generation_matrix(p, state.o), start=pair.vector, fallback=True)
            times.append(float(horizon) if final else k * h)
            states.append(state)
            r_values.append(pair.value)

    logger.debug(f"Simulated {n_steps} steps, {len(events)} switch events")
    return Trajectory(
        times=times,
        states=states,
        r_values=r_values,
        switch_events=events,
        sliding_communities=sorted(monitor.flagged),
        max_violation=integrator.max_violation,
    )
