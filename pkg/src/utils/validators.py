"""Validators for states, integrator settings and stubborn specifications."""

from typing import Optional, Tuple

import numpy as np

from src.models.entities import IntegratorSettings, State, StubbornSpec
from src.models.errors import ParameterError, StateError


def box_violation(x, o) -> float:
    """Distance (sup-norm) by which (x, o) leaves [0,1]^n x [-0.5,0.5]^n."""
    x = np.asarray(x, dtype=float)
    o = np.asarray(o, dtype=float)
    return max(
        float(np.max(-x, initial=0.0)),
        float(np.max(x - 1.0, initial=0.0)),
        float(np.max(-0.5 - o, initial=0.0)),
        float(np.max(o - 0.5, initial=0.0)),
    )


class StateValidator:
    """Checks on states and run settings, in (ok, message) form or raising."""

    @staticmethod
    def validate_state(state: State, n: Optional[int] = None, tol: float = 0.0) -> Tuple[bool, str]:
        if n is not None and state.n != n:
            return False, f"State has {state.n} communities, expected {n}"
        violation = box_violation(state.x, state.o)
        if violation > tol:
            return False, f"State leaves the box by {violation:.3e}"
        return True, "Valid"

    @staticmethod
    def require_state(state: State, n: Optional[int] = None, tol: float = 0.0) -> State:
        ok, message = StateValidator.validate_state(state, n, tol)
        if not ok:
            raise StateError(message)
        return state

    @staticmethod
    def validate_settings(settings: IntegratorSettings) -> Tuple[bool, str]:
        if not settings.h > 0:
            return False, f"Step size must be positive, got {settings.h}"
        if settings.horizon < 0:
            return False, f"Horizon must be non-negative, got {settings.horizon}"
        if settings.record_every < 1:
            return False, f"record_every must be at least 1, got {settings.record_every}"
        return True, "Valid"

    @staticmethod
    def require_settings(settings: IntegratorSettings) -> IntegratorSettings:
        ok, message = StateValidator.validate_settings(settings)
        if not ok:
            raise ParameterError(message)
        return settings

    @staticmethod
    def require_stubborn(stubborn: Optional[StubbornSpec], n: int) -> Optional[StubbornSpec]:
        if stubborn is not None:
            stubborn.mask(n)  # raises on out-of-range indices
        return stubborn
