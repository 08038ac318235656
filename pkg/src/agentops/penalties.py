"""Violation penalties with closed-form proximal operators.

Every penalty is proper, convex and lower semicontinuous, vanishes exactly on
its constraint set, and has a prox that needs no inner solver:

* ``AffineQuadratic``  ``(w/2)(a.x - b)^2``
* ``Indicator``        0 on a set, ``inf`` off it (prox is the projection)
* ``SquaredDistance``  ``(w/2) dist(x, S)^2``
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionError,
    InvalidParameterError,
    NondifferentiableError,
)
from .sets import ConvexSet, Hyperplane, _finite, set_from_dict
from .state import StateVector, as_state


class Penalty:
    tag: str = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def eval(self, x) -> float:
        raise NotImplementedError

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, x) -> StateVector:
        raise NotImplementedError

    def prox(self, lam: float, x) -> StateVector:
        raise NotImplementedError

    def zero_set(self) -> ConvexSet:
        """The constraint set on which the penalty vanishes."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _point(self, x) -> StateVector:
        x = as_state(x)
        if x.shape[0] != self.dim:
            raise DimensionError(f"{self.tag} lives in dim {self.dim}, got a point of dim {x.shape[0]}")
        return x

    def __eq__(self, other):
        if not isinstance(other, Penalty):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))


def _check_lambda(lam) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise InvalidParameterError(f"prox parameter must be a finite positive number, got {lam}")
    return lam


def _weight(w) -> float:
    w = _finite(w, "w")
    if not w > 0:
        raise InvalidParameterError(f"weight must be > 0, got {w}")
    return w


@dataclass(frozen=True, eq=False)
class AffineQuadratic(Penalty):
    a: StateVector
    b: float
    w: float = 1.0
    _nsq: float = field(init=False, repr=False)
    tag = "affine_quadratic"

    def __post_init__(self):
        a = as_state(self.a)
        nsq = float(np.dot(a, a))
        if not nsq > 0:
            raise InvalidParameterError("affine_quadratic needs a nonzero coefficient vector")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _finite(self.b, "b"))
        object.__setattr__(self, "w", _weight(self.w))
        object.__setattr__(self, "_nsq", nsq)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def residual(self, x) -> float:
        return float(np.dot(self.a, self._point(x))) - self.b

    def eval(self, x) -> float:
        r = self.residual(x)
        return 0.5 * self.w * r * r

    def eval_batch(self, X):
        r = np.asarray(X, dtype=np.float64) @ self.a - self.b
        return 0.5 * self.w * r * r

    def grad(self, x) -> StateVector:
        return as_state(self.w * self.residual(x) * self.a)

    def prox(self, lam, x) -> StateVector:
        lam = _check_lambda(lam)
        x = self._point(x)
        r = float(np.dot(self.a, x)) - self.b
        coef = lam * self.w * r / (1.0 + lam * self.w * self._nsq)
        return as_state(x - coef * self.a)

    def zero_set(self) -> Hyperplane:
        return Hyperplane(self.a, self.b)

    def min_norm_minimizer(self) -> StateVector:
        """Closest point to the origin on the zero set."""
        return as_state((self.b / self._nsq) * self.a)

    def to_dict(self) -> dict:
        return {"type": self.tag, "a": self.a.tolist(), "b": self.b, "w": self.w}


@dataclass(frozen=True, eq=False)
class Indicator(Penalty):
    """Convex indicator of ``set``.

    ``tol`` is the membership slack used by :meth:`eval` so that points
    produced by a projection (which sit on the boundary up to rounding) are
    not scored as infinitely bad.
    """

    set: ConvexSet
    tol: float = 1e-10
    tag = "indicator"

    def __post_init__(self):
        if not isinstance(self.set, ConvexSet):
            raise InvalidParameterError(f"indicator needs a ConvexSet, got {type(self.set).__name__}")
        tol = _finite(self.tol, "tol")
        if tol < 0:
            raise InvalidParameterError("tol must be >= 0")
        object.__setattr__(self, "tol", tol)

    @property
    def dim(self) -> int:
        return self.set.dim

    def eval(self, x) -> float:
        return 0.0 if self.set.violation(self._point(x)) <= self.tol else math.inf

    def eval_batch(self, X):
        return np.where(self.set.violation_batch(X) <= self.tol, 0.0, np.inf)

    def grad(self, x):
        raise NondifferentiableError("indicator penalties have no gradient")

    def prox(self, lam, x) -> StateVector:
        _check_lambda(lam)
        return self.set.project(x)

    def zero_set(self) -> ConvexSet:
        return self.set

    def to_dict(self) -> dict:
        d = {"type": self.tag, "set": self.set.to_dict()}
        if self.tol != 1e-10:
            d["tol"] = self.tol
        return d


@dataclass(frozen=True, eq=False)
class SquaredDistance(Penalty):
    set: ConvexSet
    w: float = 1.0
    tag = "squared_distance"

    def __post_init__(self):
        if not isinstance(self.set, ConvexSet):
            raise InvalidParameterError(f"squared_distance needs a ConvexSet, got {type(self.set).__name__}")
        object.__setattr__(self, "w", _weight(self.w))

    @property
    def dim(self) -> int:
        return self.set.dim

    def eval(self, x) -> float:
        d = self.set.distance(self._point(x))
        return 0.5 * self.w * d * d

    def eval_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        d = X - self.set.project_batch(X)
        return 0.5 * self.w * np.einsum("ij,ij->i", d, d)

    def grad(self, x) -> StateVector:
        # w(x - P(x)) is the gradient everywhere for convex sets, boundary included
        x = self._point(x)
        return as_state(self.w * (x - self.set.project(x)))

    def prox(self, lam, x) -> StateVector:
        lam = _check_lambda(lam)
        x = self._point(x)
        t = lam * self.w / (1.0 + lam * self.w)
        return as_state(x + t * (self.set.project(x) - x))

    def zero_set(self) -> ConvexSet:
        return self.set

    def to_dict(self) -> dict:
        return {"type": self.tag, "set": self.set.to_dict(), "w": self.w}


@dataclass(frozen=True, eq=False)
class EnergyFunction:
    """Sum of penalties plus an optional ``(mu/2)|x|^2`` regularizer."""

    terms: tuple
    regularizer_mu: float = 0.0

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise InvalidParameterError("an energy function needs at least one term")
        for t in terms:
            if not isinstance(t, Penalty):
                raise InvalidParameterError(f"energy terms must be penalties, got {type(t).__name__}")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise DimensionError(f"energy terms disagree on dimension: {sorted(dims)}")
        mu = _finite(self.regularizer_mu, "regularizer_mu")
        if mu < 0:
            raise InvalidParameterError("regularizer_mu must be >= 0")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "regularizer_mu", mu)

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    def __call__(self, x) -> float:
        return eval_energy(self, x)

    def eval_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DimensionError(f"energy lives in dim {self.dim}, got batch of shape {X.shape}")
        total = np.zeros(X.shape[0])
        for t in self.terms:
            total += t.eval_batch(X)
        if self.regularizer_mu:
            total += 0.5 * self.regularizer_mu * np.einsum("ij,ij->i", X, X)
        return total

    def grad(self, x) -> StateVector:
        x = as_state(x)
        g = sum((t.grad(x) for t in self.terms), np.zeros(self.dim))
        return as_state(g + self.regularizer_mu * x)

    def with_mu(self, mu: float) -> "EnergyFunction":
        return EnergyFunction(self.terms, mu)


def evaluate(p: Penalty, x) -> float:
    return p.eval(x)


def grad(p: Penalty, x) -> StateVector:
    return p.grad(x)


def prox(p: Penalty, lam: float, x) -> StateVector:
    return p.prox(lam, x)


def eval_energy(F: EnergyFunction, x) -> float:
    x = as_state(x)
    if x.shape[0] != F.dim:
        raise DimensionError(f"energy lives in dim {F.dim}, got a point of dim {x.shape[0]}")
    total = 0.0
    for t in F.terms:
        total += t.eval(x)
    if F.regularizer_mu:
        total += 0.5 * F.regularizer_mu * float(np.dot(x, x))
    return total


def energy_of(terms: Sequence[Penalty], mu: float = 0.0) -> EnergyFunction:
    return EnergyFunction(tuple(terms), mu)


_PENALTY_TAGS = ("affine_quadratic", "indicator", "squared_distance")


def penalty_from_dict(d: dict) -> Penalty:
    tag = d["type"]
    if tag == "affine_quadratic":
        _no_extra(d, {"a", "b", "w"}, tag)
        return AffineQuadratic(d["a"], d["b"], d.get("w", 1.0))
    if tag == "indicator":
        _no_extra(d, {"set", "tol"}, tag)
        return Indicator(set_from_dict(d["set"]), d.get("tol", 1e-10))
    if tag == "squared_distance":
        _no_extra(d, {"set", "w"}, tag)
        return SquaredDistance(set_from_dict(d["set"]), d.get("w", 1.0))
    raise KeyError(f"unknown penalty type {tag!r}; expected one of {list(_PENALTY_TAGS)}")


def _no_extra(d, allowed, tag):
    extra = set(d) - allowed - {"type"}
    if extra:
        raise KeyError(f"unexpected field(s) {sorted(extra)} for {tag}")
