"""Spectral kernels: Perron roots, spectral abscissae and Hurwitz tests."""

import logging
import math
from typing import Optional

import numpy as np
import scipy.linalg

from src.config import Config
from src.models.entities import Eigenpair, HurwitzResult
from src.models.errors import NonConvergence, PreconditionError, SizeCap

logger = logging.getLogger(__name__)


def iteration_budget(n: int, tol: float) -> int:
    return max(50, math.ceil(10 * n * math.log(1.0 / tol)))


def _dense_perron(m: np.ndarray, cap: int) -> Eigenpair:
    if m.shape[0] > cap:
        raise SizeCap(f"dense eigensolve requested for n={m.shape[0]} > cap {cap}")
    values, vectors = scipy.linalg.eig(m)
    k = int(np.argmax(values.real))
    vector = np.abs(vectors[:, k].real)
    return Eigenpair(float(values[k].real), vector / vector.max())


def spectral_radius(
    m,
    tol: float = Config.SPECTRAL_TOL,
    start: Optional[np.ndarray] = None,
    fallback: bool = False,
    max_iter: Optional[int] = None,
) -> Eigenpair:
    """Perron root and eigenvector (max entry 1) of a nonnegative matrix.

    Power iteration runs on M + cI with c the mean of the smallest and largest
    row sums. The shift makes periodic irreducible matrices primitive without
    changing the eigenvectors. Iteration stops on the eigenvector residual
    ||Mx - lambda x||_inf <= tol * ||M||_inf.

    Args:
        m: square nonnegative matrix, irreducible for a guaranteed answer.
        tol: relative residual tolerance.
        start: warm-start vector, e.g. the eigenvector of a nearby matrix.
        fallback: on NonConvergence, log and return the dense solution.
        max_iter: override for the iteration budget.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {m.shape}")
    if np.any(m < 0):
        raise PreconditionError("spectral_radius requires a nonnegative matrix")

    n = m.shape[0]
    row_sums = m.sum(axis=1)
    scale = float(row_sums.max())
    if scale == 0.0:
        return Eigenpair(0.0, np.ones(n))

    shift = 0.5 * (float(row_sums.min()) + scale)
    shifted = m + shift * np.eye(n)

    if start is None:
        x = np.ones(n)
    else:
        x = np.abs(np.asarray(start, dtype=float))
        if x.shape != (n,) or x.max() == 0.0:
            x = np.ones(n)
        x = x / x.max()

    budget = max_iter if max_iter is not None else iteration_budget(n, tol)
    threshold = tol * scale
    residual = math.inf
    for _ in range(budget):
        y = shifted @ x
        lam = float(y.max())
        residual = float(np.max(np.abs(y - lam * x)))
        if residual <= threshold:
            return Eigenpair(lam - shift, x)
        x = y / lam

    if fallback:
        logger.warning(
            f"Power iteration did not converge in {budget} steps (residual {residual:.3e}); "
            f"falling back to dense solve"
        )
        return _dense_perron(m, Config.DENSE_SIZE_CAP)
    raise NonConvergence(
        f"power iteration did not converge in {budget} steps (residual {residual:.3e}, n={n})"
    )


def metzler_eigenpair(m, tol: float = Config.SPECTRAL_TOL, fallback: bool = False) -> Eigenpair:
    """Rightmost eigenvalue s(M) of a Metzler matrix and its nonnegative eigenvector."""
    m = np.asarray(m, dtype=float)
    off_diagonal = m - np.diag(np.diag(m))
    if np.any(off_diagonal < 0):
        raise PreconditionError("matrix is not Metzler (negative off-diagonal entry)")
    shift = max(0.0, -float(np.diag(m).min())) + 1.0
    pair = spectral_radius(m + shift * np.eye(m.shape[0]), tol=tol, fallback=fallback)
    return Eigenpair(pair.value - shift, pair.vector)


def spectral_abscissa(m, tol: float = Config.SPECTRAL_TOL, fallback: bool = False) -> float:
    """s(M) = rho(M + cI) - c with c = max(0, -min_i m_ii) + 1."""
    return metzler_eigenpair(m, tol=tol, fallback=fallback).value


def dense_spectrum(m, cap: int = Config.DENSE_SIZE_CAP) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape[0] > cap:
        raise SizeCap(f"dense spectrum requested for n={m.shape[0]} > cap {cap}")
    return scipy.linalg.eigvals(m)


def is_hurwitz(m, eps: float = Config.STABILITY_EPS, cap: int = Config.DENSE_SIZE_CAP) -> HurwitzResult:
    """Hurwitz test with a marginal band: is_hurwitz is None when |margin| < eps."""
    margin = float(np.max(dense_spectrum(m, cap).real))
    if margin < -eps:
        return HurwitzResult(True, margin)
    if margin > eps:
        return HurwitzResult(False, margin)
    return HurwitzResult(None, margin)
