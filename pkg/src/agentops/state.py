"""Dense finite-dimensional state vectors.

A state is a read-only one-dimensional ``float64`` numpy array.  Construction
through :func:`as_state` rejects empty input and non-finite entries, so every
vector that reaches the operators below is a valid point of R^d.
"""
from __future__ import annotations

import math
from typing import Iterable, Union

import numpy as np

from .errors import DimensionError, InvalidStateError

StateVector = np.ndarray
StateLike = Union[np.ndarray, Iterable[float]]


def as_state(coords: StateLike) -> StateVector:
    """Validate ``coords`` and return it as an immutable state vector.

    Already-frozen float64 vectors are returned as is; anything else is
    copied, so callers' arrays are never frozen behind their back.
    """
    if isinstance(coords, np.ndarray) and coords.dtype == np.float64 and not coords.flags.writeable:
        if coords.ndim == 1 and coords.size and np.all(np.isfinite(coords)):
            return coords
    try:
        x = np.array(coords, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidStateError(f"cannot interpret {coords!r} as a real vector") from exc
    if x.ndim != 1:
        raise InvalidStateError(f"state must be one-dimensional, got shape {x.shape}")
    if x.size == 0:
        raise InvalidStateError("state must have dim >= 1")
    if not np.all(np.isfinite(x)):
        raise InvalidStateError(f"state has non-finite entries: {x}")
    x.flags.writeable = False
    return x


def zeros(dim: int) -> StateVector:
    return as_state(np.zeros(dim))


def check_same_dim(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")


def inner(u: StateLike, v: StateLike) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    check_same_dim(u, v)
    return float(np.dot(u, v))


def norm(u: StateLike) -> float:
    u = np.asarray(u, dtype=np.float64)
    return math.sqrt(inner(u, u))


def axpy(alpha: float, u: StateLike, v: StateLike) -> StateVector:
    """Return ``alpha * u + v``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    check_same_dim(u, v)
    return as_state(alpha * u + v)
