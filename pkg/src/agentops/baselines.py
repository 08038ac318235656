"""Single-agent baselines and brute-force oracles.

``monolithic_minimizer`` and ``averaging_baseline`` are the non-factored
strategies the multi-agent dynamics are compared against.  ``grid_minimize``
and ``finite_diff_grad`` are deliberately naive; they exist to check the
closed forms elsewhere and share no code path with them beyond energy
evaluation.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import (
    InvalidParameterError,
    NondifferentiableError,
    OracleScaleError,
    SingularSystemError,
    UnsupportedObjectiveError,
)
from .penalties import AffineQuadratic, EnergyFunction, Penalty
from .state import StateVector, as_state

MAX_GRID_DIM = 3
MAX_POINTS_PER_AXIS = 2001


def _quadratic_terms(terms: Sequence[Penalty]) -> list:
    out = []
    for i, t in enumerate(terms):
        if not isinstance(t, AffineQuadratic):
            raise UnsupportedObjectiveError(
                f"term {i} is {t.tag}; closed-form baselines need affine_quadratic terms"
            )
        out.append(t)
    return out


def normal_system(F: EnergyFunction):
    """Matrix and right-hand side of ``(sum w a a^T + mu I) x = sum w b a``."""
    terms = _quadratic_terms(F.terms)
    d = F.dim
    N = F.regularizer_mu * np.eye(d)
    rhs = np.zeros(d)
    for t in terms:
        N += t.w * np.outer(t.a, t.a)
        rhs += t.w * t.b * t.a
    return N, rhs


def monolithic_minimizer(F: EnergyFunction) -> StateVector:
    """Exact minimizer of a (regularized) sum of affine quadratics."""
    N, rhs = normal_system(F)
    evals, evecs = np.linalg.eigh(N)
    if evals[0] <= 1e-12 * max(1.0, evals[-1]):
        direction = evecs[:, 0]
        raise SingularSystemError(
            f"normal matrix is singular; objective is flat along {np.round(direction, 12).tolist()}",
            direction=direction,
        )
    return as_state(np.linalg.solve(N, rhs))


def averaging_baseline(terms: Sequence[Penalty]) -> StateVector:
    """Mean of each term's minimum-norm minimizer."""
    terms = _quadratic_terms(terms)
    if not terms:
        raise InvalidParameterError("averaging needs at least one term")
    pts = np.array([t.min_norm_minimizer() for t in terms])
    return as_state(pts.mean(axis=0))


def grid_minimize(F: EnergyFunction, lower, upper, points_per_axis: int = 401):
    """Exhaustive search of ``F`` over a regular grid on the box.

    Ties go to the lexicographically smallest grid index.
    """
    lower, upper = as_state(lower), as_state(upper)
    d = F.dim
    if lower.shape[0] != d or upper.shape[0] != d:
        raise InvalidParameterError("grid bounds must match the energy dimension")
    if d > MAX_GRID_DIM:
        raise OracleScaleError(f"grid oracle handles dim <= {MAX_GRID_DIM}, got {d}")
    n = int(points_per_axis)
    if n < 2 or n > MAX_POINTS_PER_AXIS:
        raise OracleScaleError(f"points_per_axis must be in [2, {MAX_POINTS_PER_AXIS}], got {n}")
    if np.any(lower >= upper):
        raise InvalidParameterError("grid needs lower < upper on every axis")

    axes = [np.linspace(lower[j], upper[j], n) for j in range(d)]
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, d - 1) if d > 1 else None
    best_val, best_pt = math.inf, None
    for v0 in axes[0]:
        if rest is None:
            slab = np.array([[v0]])
        else:
            slab = np.empty((rest.shape[0], d))
            slab[:, 0] = v0
            slab[:, 1:] = rest
        vals = F.eval_batch(slab)
        i = int(np.argmin(vals))
        if vals[i] < best_val or best_pt is None:
            best_val, best_pt = float(vals[i]), slab[i].copy()
    return as_state(best_pt), best_val


def finite_diff_grad(F: EnergyFunction, x, h: float = 1e-6) -> StateVector:
    """Central differences ``(F(x + h e_j) - F(x - h e_j)) / 2h``."""
    x = as_state(x)
    if not h > 0:
        raise InvalidParameterError(f"h must be > 0, got {h}")
    g = np.empty(x.shape[0])
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        fp, fm = F(x + e), F(x - e)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NondifferentiableError(f"energy is infinite within the stencil along axis {j}")
        g[j] = (fp - fm) / (2 * h)
    return as_state(g)
