"""Closed convex sets with exact orthogonal projections.

Four primitives are supported: hyperplanes, halfspaces, boxes and balls.
Each is immutable, knows its dimension, and serializes to a tagged record
such as ``{"type": "hyperplane", "a": [1, 1], "b": 1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidParameterError
from .state import StateVector, as_state


_EPS = 2.0 ** -52


def _res_tol(a, x, b):
    """Rounding-error bound of ``a.x - b``; smaller residuals count as zero."""
    with np.errstate(over="ignore"):
        tol = (a.shape[-1] + 2) * _EPS * (np.abs(x * a).sum(axis=-1) + abs(b))
    # an overflowed residual never counts as zero
    return np.minimum(tol, np.finfo(np.float64).max)


class ConvexSet:
    """Common behaviour of the set primitives."""

    tag: str = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def project(self, x) -> StateVector:
        raise NotImplementedError

    def project_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def violation(self, x) -> float:
        """Amount by which ``x`` breaks the defining (in)equality, 0 if inside."""
        raise NotImplementedError

    def violation_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> bool:
        if tol < 0:
            raise InvalidParameterError(f"tol must be >= 0, got {tol}")
        return self.violation(self._point(x)) <= tol

    def distance(self, x) -> float:
        x = self._point(x)
        return float(np.linalg.norm(x - self.project(x)))

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _point(self, x) -> StateVector:
        x = as_state(x)
        if x.shape[0] != self.dim:
            raise DimensionError(f"{self.tag} lives in dim {self.dim}, got a point of dim {x.shape[0]}")
        return x

    def _batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionError(f"{self.tag} lives in dim {self.dim}, got batch of shape {X.shape}")
        return X

    def __eq__(self, other):
        if not isinstance(other, ConvexSet):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))


def _normal(a) -> tuple[StateVector, float]:
    a = as_state(a)
    nsq = float(np.dot(a, a))
    if not nsq > 0:
        raise InvalidParameterError("normal vector must be nonzero")
    return a, nsq


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexSet):
    """The set ``{x : a.x = b}``."""

    a: StateVector
    b: float
    _nsq: float = field(init=False, repr=False)
    tag = "hyperplane"

    def __post_init__(self):
        a, nsq = _normal(self.a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _finite(self.b, "b"))
        object.__setattr__(self, "_nsq", nsq)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def project(self, x) -> StateVector:
        x = self._point(x)
        r = float(np.dot(self.a, x)) - self.b
        if abs(r) <= _res_tol(self.a, x, self.b):
            return x
        return as_state(x - (r / self._nsq) * self.a)

    def project_batch(self, X):
        X = self._batch(X)
        r = X @ self.a - self.b
        r = np.where(np.abs(r) <= _res_tol(self.a, X, self.b), 0.0, r)
        return X - np.outer(r / self._nsq, self.a)

    def violation(self, x) -> float:
        return abs(float(np.dot(self.a, self._point(x))) - self.b)

    def violation_batch(self, X):
        return np.abs(self._batch(X) @ self.a - self.b)

    def to_dict(self) -> dict:
        return {"type": self.tag, "a": self.a.tolist(), "b": self.b}


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """The set ``{x : a.x <= b}``."""

    a: StateVector
    b: float
    _nsq: float = field(init=False, repr=False)
    tag = "halfspace"

    def __post_init__(self):
        a, nsq = _normal(self.a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _finite(self.b, "b"))
        object.__setattr__(self, "_nsq", nsq)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def project(self, x) -> StateVector:
        x = self._point(x)
        r = float(np.dot(self.a, x)) - self.b
        if r <= _res_tol(self.a, x, self.b):
            return x
        return as_state(x - (r / self._nsq) * self.a)

    def project_batch(self, X):
        X = self._batch(X)
        r = X @ self.a - self.b
        r = np.where(r <= _res_tol(self.a, X, self.b), 0.0, r)
        return X - np.outer(r / self._nsq, self.a)

    def violation(self, x) -> float:
        return max(float(np.dot(self.a, self._point(x))) - self.b, 0.0)

    def violation_batch(self, X):
        return np.maximum(self._batch(X) @ self.a - self.b, 0.0)

    def to_dict(self) -> dict:
        return {"type": self.tag, "a": self.a.tolist(), "b": self.b}


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Componentwise bounds ``lower <= x <= upper``."""

    lower: StateVector
    upper: StateVector
    tag = "box"

    def __post_init__(self):
        lo, hi = as_state(self.lower), as_state(self.upper)
        if lo.shape != hi.shape:
            raise DimensionError(f"box bounds differ in dim: {lo.shape[0]} vs {hi.shape[0]}")
        if np.any(lo > hi):
            raise InvalidParameterError("box requires lower <= upper in every component")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, x) -> StateVector:
        return as_state(np.clip(self._point(x), self.lower, self.upper))

    def project_batch(self, X):
        return np.clip(self._batch(X), self.lower, self.upper)

    def violation(self, x) -> float:
        x = self._point(x)
        return float(max(np.max(self.lower - x), np.max(x - self.upper), 0.0))

    def violation_batch(self, X):
        X = self._batch(X)
        v = np.maximum(np.max(self.lower - X, axis=1), np.max(X - self.upper, axis=1))
        return np.maximum(v, 0.0)

    def to_dict(self) -> dict:
        return {"type": self.tag, "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Closed Euclidean ball."""

    center: StateVector
    radius: float
    tag = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", as_state(self.center))
        r = _finite(self.radius, "radius")
        if not r > 0:
            raise InvalidParameterError(f"ball radius must be > 0, got {r}")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, x) -> StateVector:
        x = self._point(x)
        d = x - self.center
        n = math.sqrt(float(np.dot(d, d)))
        if n <= self._radius_tol(x):
            return x
        return as_state(self.center + (self.radius / n) * d)

    def project_batch(self, X):
        X = self._batch(X)
        d = X - self.center
        n = np.linalg.norm(d, axis=1)
        outside = n > self._radius_tol(X)
        scale = self.radius / np.where(outside, n, 1.0)
        return np.where(outside[:, None], self.center + d * scale[:, None], X)

    def _radius_tol(self, x):
        # |x - c| carries rounding error on the scale of |x|, not of the radius
        return self.radius + (self.dim + 2) * _EPS * (self.radius + np.abs(x).sum(axis=-1))

    def violation(self, x) -> float:
        d = self._point(x) - self.center
        return max(math.sqrt(float(np.dot(d, d))) - self.radius, 0.0)

    def violation_batch(self, X):
        return np.maximum(np.linalg.norm(self._batch(X) - self.center, axis=1) - self.radius, 0.0)

    def to_dict(self) -> dict:
        return {"type": self.tag, "center": self.center.tolist(), "radius": self.radius}


def _finite(v, name: str) -> float:
    try:
        v = float(v)
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"{name} must be a real number, got {v!r}") from exc
    if not math.isfinite(v):
        raise InvalidParameterError(f"{name} must be finite, got {v}")
    return v


def project(s: ConvexSet, x) -> StateVector:
    return s.project(x)


def contains(s: ConvexSet, x, tol: float = 0.0) -> bool:
    return s.contains(x, tol)


def distance(s: ConvexSet, x) -> float:
    return s.distance(x)


_SET_TYPES = {cls.tag: cls for cls in (Hyperplane, Halfspace, Box, Ball)}
_SET_FIELDS = {
    "hyperplane": ("a", "b"),
    "halfspace": ("a", "b"),
    "box": ("lower", "upper"),
    "ball": ("center", "radius"),
}


def set_from_dict(d: dict) -> ConvexSet:
    """Inverse of ``ConvexSet.to_dict``.

    Raises ``KeyError`` for unknown tags or missing fields so callers can
    attach a field path.
    """
    tag = d["type"]
    if tag not in _SET_TYPES:
        raise KeyError(f"unknown set type {tag!r}; expected one of {sorted(_SET_TYPES)}")
    fields = _SET_FIELDS[tag]
    extra = set(d) - set(fields) - {"type"}
    if extra:
        raise KeyError(f"unexpected field(s) {sorted(extra)} for {tag}")
    return _SET_TYPES[tag](*(d[f] for f in fields))
