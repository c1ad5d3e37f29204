"""Data models for the epidemic-opinion toolkit.

Matrix convention: entry (i, j) of every adjacency-like matrix is the weight
of the edge v_j -> v_i ("community j can infect / influence community i").
Community indices are zero-based.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, List, Dict, Tuple, NamedTuple

import numpy as np

from src.config import Config
from src.models.errors import ParameterError, StateError


def _readonly(values, ndim: int, name: str, error=ParameterError) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise error(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise error(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


class Regime(str, Enum):
    MILD = 'mild'
    SEVERE = 'severe'
    MODERATE = 'moderate'
    BOUNDARY_MILD_EXACT = 'boundary-mild-exact'
    BOUNDARY_SEVERE_EXACT = 'boundary-severe-exact'

    @property
    def is_mild(self) -> bool:
        """R_max <= 1, boundary included."""
        return self in (Regime.MILD, Regime.BOUNDARY_MILD_EXACT)


class EquilibriumClass(str, Enum):
    CONSENSUS_HEALTHY = 'consensus-healthy'
    DISSENSUS_HEALTHY = 'dissensus-healthy'
    CONSENSUS_ENDEMIC = 'consensus-endemic'
    DISSENSUS_ENDEMIC = 'dissensus-endemic'

    @property
    def is_healthy(self) -> bool:
        return self in (EquilibriumClass.CONSENSUS_HEALTHY, EquilibriumClass.DISSENSUS_HEALTHY)


class Verdict(str, Enum):
    STABLE = 'stable'
    UNSTABLE = 'unstable'
    MARGINAL = 'marginal'


@dataclass(frozen=True, eq=False)
class DirectedWeightedGraph:
    adjacency: np.ndarray

    def __post_init__(self):
        adj = _readonly(self.adjacency, 2, 'adjacency')
        if adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise ParameterError(f"adjacency must be a non-empty square matrix, got {adj.shape}")
        if np.any(np.diag(adj) != 0):
            raise ParameterError("self-loops are not allowed (non-zero diagonal)")
        if np.any(adj < 0):
            raise ParameterError("edge weights must be non-negative")
        object.__setattr__(self, 'adjacency', adj)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @cached_property
    def support(self) -> np.ndarray:
        """Unweighted 0/1 adjacency; weights under the floor are structural zeros."""
        return (self.adjacency > Config.CONNECTIVITY_FLOOR).astype(float)


@dataclass(frozen=True, eq=False)
class OpinionMagnitudeGraph(DirectedWeightedGraph):
    """Opinion exchange graph holding |a_ij|; signs come from the gauge."""

    @property
    def magnitudes(self) -> np.ndarray:
        return self.adjacency

    @classmethod
    def from_signed(cls, signed_adjacency) -> 'OpinionMagnitudeGraph':
        return cls(np.abs(np.asarray(signed_adjacency, dtype=float)))


@dataclass(frozen=True, eq=False)
class GaugeVector:
    signs: np.ndarray

    def __post_init__(self):
        signs = np.array(self.signs, dtype=int)
        if signs.ndim != 1 or not np.all(np.isin(signs, (-1, 1))):
            raise ParameterError("gauge entries must be +1 or -1")
        signs.setflags(write=False)
        object.__setattr__(self, 'signs', signs)

    def __eq__(self, other) -> bool:
        return isinstance(other, GaugeVector) and np.array_equal(self.signs, other.signs)

    def __hash__(self) -> int:
        return hash(self.signs.tobytes())

    @property
    def n(self) -> int:
        return self.signs.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.signs.astype(float))

    @property
    def is_mixed(self) -> bool:
        return bool(np.any(self.signs > 0) and np.any(self.signs < 0))

    def partition(self) -> Tuple[List[int], List[int]]:
        """Return (V1, V2): communities with sgnm = +1 and sgnm = -1."""
        positive = [int(i) for i in np.flatnonzero(self.signs > 0)]
        negative = [int(i) for i in np.flatnonzero(self.signs < 0)]
        return positive, negative


@dataclass(frozen=True)
class Eigenpair:
    value: float
    vector: np.ndarray = field(compare=False)


class HurwitzResult(NamedTuple):
    is_hurwitz: Optional[bool]  # None inside the marginal band
    margin: float

    @property
    def verdict(self) -> 'Verdict':
        if self.is_hurwitz is None:
            return Verdict.MARGINAL
        return Verdict.STABLE if self.is_hurwitz else Verdict.UNSTABLE


@dataclass(frozen=True, eq=False)
class SystemParams:
    epidemic_graph: DirectedWeightedGraph
    infection_rates: np.ndarray  # B, B_ij = beta_ij on edges of the epidemic graph
    healing_rates: np.ndarray  # diagonal of D
    delta_min: float
    beta_min: float
    opinion_graph: OpinionMagnitudeGraph

    def __post_init__(self):
        # Deferred to avoid a models <-> engine import cycle.
        from src.engine.graph import is_strongly_connected

        b = _readonly(self.infection_rates, 2, 'infection_rates')
        d = _readonly(self.healing_rates, 1, 'healing_rates')
        object.__setattr__(self, 'infection_rates', b)
        object.__setattr__(self, 'healing_rates', d)
        object.__setattr__(self, 'delta_min', float(self.delta_min))
        object.__setattr__(self, 'beta_min', float(self.beta_min))

        n = self.epidemic_graph.n
        if self.opinion_graph.n != n or b.shape != (n, n) or d.shape != (n,):
            raise ParameterError(
                f"inconsistent sizes: epidemic n={n}, opinion n={self.opinion_graph.n}, "
                f"B {b.shape}, delta {d.shape}"
            )
        if self.delta_min <= 0 or self.beta_min <= 0:
            raise ParameterError("delta_min and beta_min must be positive")
        if np.any(d < self.delta_min):
            raise ParameterError("every healing rate must be at least delta_min")

        on_edge = self.epidemic_graph.support > 0
        if np.any(b[on_edge] < self.beta_min):
            raise ParameterError("every infection rate on an edge must be at least beta_min")
        if np.any(b[~on_edge] != 0):
            raise ParameterError("infection rates must vanish off the epidemic graph")

        if not is_strongly_connected(self.epidemic_graph):
            raise ParameterError("epidemic graph is not strongly connected")
        if not is_strongly_connected(self.opinion_graph):
            raise ParameterError("opinion graph is not strongly connected")

    @property
    def n(self) -> int:
        return self.epidemic_graph.n

    @cached_property
    def infection_floor(self) -> np.ndarray:
        """B_min = beta_min * A~."""
        return self.beta_min * self.epidemic_graph.support

    @cached_property
    def infection_gap(self) -> np.ndarray:
        """B - B_min."""
        return self.infection_rates - self.infection_floor

    @cached_property
    def healing_gap(self) -> np.ndarray:
        """Diagonal of D - D_min."""
        return self.healing_rates - self.delta_min

    @cached_property
    def opinion_laplacian(self) -> np.ndarray:
        from src.engine.graph import laplacian

        return laplacian(self.opinion_graph)


@dataclass(frozen=True, eq=False)
class State:
    x: np.ndarray
    o: np.ndarray

    def __post_init__(self):
        x = _readonly(self.x, 1, 'x', StateError)
        o = _readonly(self.o, 1, 'o', StateError)
        if x.shape != o.shape:
            raise StateError(f"x and o must have the same length ({x.shape} vs {o.shape})")
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'o', o)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.o])

    @classmethod
    def from_vector(cls, z) -> 'State':
        z = np.asarray(z, dtype=float)
        n = z.shape[0] // 2
        return cls(z[:n], z[n:])

    def within_box(self, tol: float = 0.0) -> bool:
        return bool(
            np.all(self.x >= -tol) and np.all(self.x <= 1 + tol)
            and np.all(self.o >= -0.5 - tol) and np.all(self.o <= 0.5 + tol)
        )


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    community: int
    old_sign: int
    new_sign: int


@dataclass
class Trajectory:
    times: List[float]
    states: List[State]
    r_values: List[float]
    switch_events: List[SwitchEvent] = field(default_factory=list)
    sliding_communities: List[int] = field(default_factory=list)
    max_violation: float = 0.0

    @property
    def final_state(self) -> State:
        return self.states[-1]

    @property
    def x_history(self) -> np.ndarray:
        return np.vstack([s.x for s in self.states])

    @property
    def o_history(self) -> np.ndarray:
        return np.vstack([s.o for s in self.states])

    def cumulative_switches(self) -> np.ndarray:
        """Number of switch events up to and including each recorded time."""
        event_times = np.sort([e.time for e in self.switch_events])
        return np.searchsorted(event_times, np.asarray(self.times), side='right')


@dataclass(frozen=True)
class ReproductionNumbers:
    r_min: float
    r_max: float
    r_of_o: Optional[float] = None


@dataclass(eq=False)
class EquilibriumReport:
    point: State
    eq_class: EquilibriumClass
    jacobian_max_real: float
    verdict: Verdict
    r_at_equilibrium: float
    residual: float
    empirical: bool = False  # verdict from the Jacobian spectrum only
    pattern: Optional[GaugeVector] = None

    def to_dict(self) -> dict:
        return {
            'class': self.eq_class.value,
            'x': self.point.x.tolist(),
            'o': self.point.o.tolist(),
            'jacobian_max_real': self.jacobian_max_real,
            'verdict': self.verdict.value,
            'r_at_equilibrium': self.r_at_equilibrium,
            'residual': self.residual,
            'empirical': self.empirical,
        }


@dataclass(frozen=True)
class ThresholdResult:
    alpha: float
    r_at_alpha: float
    boundary: bool = False


@dataclass
class XiInvarianceReport:
    phi: float
    y: np.ndarray
    epsilons_tested: List[float]
    largest_passing: float
    counterexamples: List[State] = field(default_factory=list)
    trials: int = 0


@dataclass(frozen=True, eq=False)
class StubbornSpec:
    pinned: Dict[int, float]

    def __post_init__(self):
        pinned = {}
        for index, value in sorted(self.pinned.items()):
            index, value = int(index), float(value)
            if index < 0:
                raise ParameterError(f"stubborn index must be non-negative, got {index}")
            if not -0.5 <= value <= 0.5:
                raise ParameterError(f"pinned opinion {value} for community {index} is outside [-0.5, 0.5]")
            pinned[index] = value
        object.__setattr__(self, 'pinned', pinned)

    def __eq__(self, other) -> bool:
        return isinstance(other, StubbornSpec) and self.pinned == other.pinned

    def __hash__(self) -> int:
        return hash(tuple(self.pinned.items()))

    @property
    def cardinality(self) -> int:
        return len(self.pinned)

    @property
    def indices(self) -> np.ndarray:
        return np.array(list(self.pinned.keys()), dtype=int)

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self.pinned.values()), dtype=float)

    def mask(self, n: int) -> np.ndarray:
        if self.pinned and max(self.pinned) >= n:
            raise ParameterError(f"stubborn index {max(self.pinned)} out of range for n={n}")
        mask = np.zeros(n, dtype=bool)
        mask[self.indices] = True
        return mask

    def apply(self, o: np.ndarray) -> np.ndarray:
        """Return a copy of o with the pinned entries overwritten."""
        out = np.array(o, dtype=float)
        if self.pinned:
            out[self.indices] = self.values
        return out


@dataclass
class InterventionPlan:
    stubborn: StubbornSpec
    predicted_r: float
    verified: bool = False
    pin_level: float = 0.5
    mode: str = 'greedy'
    final_sup_x: Optional[float] = None
    free_opinion_floor: Optional[float] = None
    threshold_alpha: Optional[float] = None
    premise_held: Optional[bool] = None

    @property
    def cardinality(self) -> int:
        return self.stubborn.cardinality

    def to_dict(self) -> dict:
        return {
            'stubborn': {str(k): v for k, v in self.stubborn.pinned.items()},
            'predicted_r': self.predicted_r,
            'verified': self.verified,
            'cardinality': self.cardinality,
            'pin_level': self.pin_level,
            'mode': self.mode,
            'final_sup_x': self.final_sup_x,
            'free_opinion_floor': self.free_opinion_floor,
            'threshold_alpha': self.threshold_alpha,
            'premise_held': self.premise_held,
        }


@dataclass
class IntegratorSettings:
    h: float = Config.STEP_SIZE
    horizon: float = Config.HORIZON
    record_every: int = Config.RECORD_EVERY


@dataclass
class RateRanges:
    delta: Tuple[float, float]
    beta: Tuple[float, float]
    delta_min: Tuple[float, float]
    beta_min: Tuple[float, float]


@dataclass
class GeneratorSpec:
    n: int
    target_regime: Regime
    edge_density: float = Config.DEFAULT_EDGE_DENSITY
    rate_ranges: Optional[RateRanges] = None  # None selects the regime defaults
    same_topology_for_opinions: bool = True
    opinion_weight_range: Tuple[float, float] = (0.5, 1.5)


@dataclass(eq=False)
class ScenarioConfig:
    params: Optional[SystemParams] = None
    generator: Optional[GeneratorSpec] = None
    initial_state: Optional[State] = None
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    stubborn: Optional[StubbornSpec] = None
    seed: int = 0
    outputs: List[str] = field(default_factory=lambda: ['trajectory', 'summary', 'plot_data'])
