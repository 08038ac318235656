"""Flat array encoding of operator lists and energies for the kernels.

Both kernels consume the same record layout; one row per operator (or energy
term):

    kind   0 projection / indicator, 1 affine quadratic, 2 squared distance
    skind  set variant: 0 hyperplane, 1 halfspace, 2 box, 3 ball, -1 none
    va     a (hyperplane, halfspace, affine), lower (box), center (ball)
    vb     upper (box), zeros otherwise
    sb     b (hyperplane, halfspace, affine) or radius (ball)
    sw     weight w (affine, squared distance), 1 otherwise
    snsq   |a|^2 for hyperplane, halfspace, affine
    stol   membership slack for indicator energy terms
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .penalties import AffineQuadratic, EnergyFunction, Indicator, Penalty, SquaredDistance
from .sets import Ball, Box, ConvexSet, Halfspace, Hyperplane

PROJECT, AFFINE, SQDIST = 0, 1, 2
HYPERPLANE, HALFSPACE, BOX, BALL = 0, 1, 2, 3

STATUS_NAMES = {0: "step_tol", 1: "energy_tol", 2: "max_rounds", 3: "diverged"}


@dataclass
class Records:
    kind: np.ndarray
    skind: np.ndarray
    va: np.ndarray
    vb: np.ndarray
    sb: np.ndarray
    sw: np.ndarray
    snsq: np.ndarray
    stol: np.ndarray

    def arrays(self):
        return (self.kind, self.skind, self.va, self.vb, self.sb, self.sw, self.snsq, self.stol)


def _alloc(n, dim):
    return Records(
        kind=np.zeros(n, dtype=np.int32),
        skind=np.full(n, -1, dtype=np.int32),
        va=np.zeros((n, dim)),
        vb=np.zeros((n, dim)),
        sb=np.zeros(n),
        sw=np.ones(n),
        snsq=np.zeros(n),
        stol=np.zeros(n),
    )


def _put_set(rec: Records, i: int, s: ConvexSet) -> None:
    if isinstance(s, Hyperplane):
        rec.skind[i] = HYPERPLANE
        rec.va[i], rec.sb[i], rec.snsq[i] = s.a, s.b, s._nsq
    elif isinstance(s, Halfspace):
        rec.skind[i] = HALFSPACE
        rec.va[i], rec.sb[i], rec.snsq[i] = s.a, s.b, s._nsq
    elif isinstance(s, Box):
        rec.skind[i] = BOX
        rec.va[i], rec.vb[i] = s.lower, s.upper
    elif isinstance(s, Ball):
        rec.skind[i] = BALL
        rec.va[i], rec.sb[i] = s.center, s.radius
    else:
        raise TypeError(f"no kernel encoding for {type(s).__name__}")


def _put_penalty(rec: Records, i: int, p: Penalty) -> None:
    if isinstance(p, AffineQuadratic):
        rec.kind[i] = AFFINE
        rec.va[i], rec.sb[i], rec.sw[i], rec.snsq[i] = p.a, p.b, p.w, p._nsq
    elif isinstance(p, Indicator):
        rec.kind[i] = PROJECT
        _put_set(rec, i, p.set)
        rec.stol[i] = p.tol
    elif isinstance(p, SquaredDistance):
        rec.kind[i] = SQDIST
        _put_set(rec, i, p.set)
        rec.sw[i] = p.w
    else:
        raise TypeError(f"no kernel encoding for {type(p).__name__}")


def encode_operators(ops, dim: int) -> Records:
    """Encode ``AgentOperator`` objects (projection or prox kind)."""
    rec = _alloc(len(ops), dim)
    for i, op in enumerate(ops):
        if op.set is not None:
            rec.kind[i] = PROJECT
            _put_set(rec, i, op.set)
        else:
            _put_penalty(rec, i, op.penalty)
    return rec


def encode_energy(F: EnergyFunction) -> Records:
    rec = _alloc(len(F.terms), F.dim)
    for i, t in enumerate(F.terms):
        _put_penalty(rec, i, t)
    return rec
