"""Factored multi-agent iteration and its diagnostics.

One round applies every agent operator once, in list order, to the shared
state.  :func:`iterate` repeats rounds under a step-size schedule until a stop
rule fires and records the whole trajectory; the remaining functions check
the behaviour the theory predicts (invariance of the common feasible set,
Fejér monotonicity, limit points in every set).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernel as _kernel
from ._program import STATUS_NAMES, encode_energy, encode_operators
from .errors import (
    DimensionError,
    DivergenceError,
    InvalidParameterError,
    RejectedReferenceError,
)
from .penalties import EnergyFunction, Indicator, Penalty
from .sets import ConvexSet
from .state import StateVector, as_state

PROJECTION = "projection"
PROX = "prox"


@dataclass(frozen=True, eq=False)
class AgentOperator:
    """One agent's update: projection onto a set, or prox of a penalty."""

    label: str
    set: Optional[ConvexSet] = None
    penalty: Optional[Penalty] = None

    def __post_init__(self):
        if (self.set is None) == (self.penalty is None):
            raise InvalidParameterError("an agent needs exactly one of set (projection) or penalty (prox)")
        if self.set is not None and not isinstance(self.set, ConvexSet):
            raise InvalidParameterError(f"set must be a ConvexSet, got {type(self.set).__name__}")
        if self.penalty is not None and not isinstance(self.penalty, Penalty):
            raise InvalidParameterError(f"penalty must be a Penalty, got {type(self.penalty).__name__}")

    @classmethod
    def projection(cls, s: ConvexSet, label: str = "") -> "AgentOperator":
        return cls(label or s.tag, set=s)

    @classmethod
    def proximal(cls, p: Penalty, label: str = "") -> "AgentOperator":
        return cls(label or p.tag, penalty=p)

    @property
    def kind(self) -> str:
        return PROJECTION if self.set is not None else PROX

    @property
    def dim(self) -> int:
        return (self.set or self.penalty).dim

    def apply(self, x, lam: float) -> StateVector:
        if self.set is not None:
            return self.set.project(x)
        return self.penalty.prox(lam, x)

    def as_penalty(self) -> Penalty:
        """Penalty whose zero set is this agent's constraint set."""
        return Indicator(self.set) if self.set is not None else self.penalty

    def constraint_set(self) -> ConvexSet:
        return self.set if self.set is not None else self.penalty.zero_set()

    def to_dict(self) -> dict:
        if self.set is not None:
            return {"label": self.label, "kind": PROJECTION, "set": self.set.to_dict()}
        return {"label": self.label, "kind": PROX, "penalty": self.penalty.to_dict()}

    def __eq__(self, other):
        if not isinstance(other, AgentOperator):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))


_SCHEDULE_CODES = {"constant": 0, "harmonic": 1, "poly": 2}


@dataclass(frozen=True)
class Schedule:
    """Per-round prox parameter ``lambda_k``, indexed from ``k = 1``.

    ``constant``: lambda0.  ``harmonic``: lambda0 / k.  ``poly``: lambda0 / k**p
    with ``0.5 < p <= 1``.
    """

    kind: str = "harmonic"
    lambda0: float = 1.0
    p: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _SCHEDULE_CODES:
            raise InvalidParameterError(f"schedule type must be one of {list(_SCHEDULE_CODES)}, got {self.kind!r}")
        lam0 = float(self.lambda0)
        if not (lam0 > 0 and math.isfinite(lam0)):
            raise InvalidParameterError(f"lambda0 must be a finite positive number, got {self.lambda0}")
        object.__setattr__(self, "lambda0", lam0)
        if self.kind == "poly":
            if self.p is None or not (0.5 < float(self.p) <= 1.0):
                raise InvalidParameterError(f"poly schedule needs 0.5 < p <= 1, got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise InvalidParameterError(f"p only applies to the poly schedule, not {self.kind}")

    def __call__(self, k: int) -> float:
        if k < 1:
            raise ValueError("schedule index starts at 1")
        if self.kind == "constant":
            return self.lambda0
        if self.kind == "harmonic":
            return self.lambda0 / float(k)
        return self.lambda0 / math.pow(float(k), self.p)

    @property
    def diminishing(self) -> bool:
        """Whether sum(lambda_k) diverges while sum(lambda_k**2) converges."""
        return self.kind != "constant"

    def to_dict(self) -> dict:
        d = {"type": self.kind, "lambda0": self.lambda0}
        if self.p is not None:
            d["p"] = self.p
        return d


def constant(lambda0: float) -> Schedule:
    return Schedule("constant", lambda0)


def harmonic(lambda0: float = 1.0) -> Schedule:
    return Schedule("harmonic", lambda0)


def poly_decay(lambda0: float, p: float) -> Schedule:
    return Schedule("poly", lambda0, p)


@dataclass(frozen=True)
class StopRule:
    """Stop after ``max_rounds``, or once a round moves less than ``step_tol``,
    or once the energy changes by less than ``energy_tol`` (when an energy is
    attached).  ``step_tol=0`` disables the step criterion."""

    max_rounds: int = 1000
    step_tol: float = 0.0
    energy_tol: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.max_rounds, bool) or int(self.max_rounds) != self.max_rounds or self.max_rounds < 1:
            raise InvalidParameterError(f"max_rounds must be a positive integer, got {self.max_rounds}")
        object.__setattr__(self, "max_rounds", int(self.max_rounds))
        if not (float(self.step_tol) >= 0):
            raise InvalidParameterError(f"step_tol must be >= 0, got {self.step_tol}")
        object.__setattr__(self, "step_tol", float(self.step_tol))
        if self.energy_tol is not None:
            if not (float(self.energy_tol) >= 0):
                raise InvalidParameterError(f"energy_tol must be >= 0, got {self.energy_tol}")
            object.__setattr__(self, "energy_tol", float(self.energy_tol))

    def to_dict(self) -> dict:
        d = {"max_rounds": self.max_rounds, "step_tol": self.step_tol}
        if self.energy_tol is not None:
            d["energy_tol"] = self.energy_tol
        return d


@dataclass
class Trajectory:
    """Iterates ``x^(0) .. x^(K)`` and per-round records.

    ``agent_step_norms[k, i]`` is how far agent ``i`` moved the state during
    round ``k + 1``; ``per_agent_states[k, i]`` is the state right after it.
    """

    states: np.ndarray
    lambdas: np.ndarray
    step_norms: np.ndarray
    agent_step_norms: np.ndarray
    termination: str
    labels: tuple = ()
    kinds: tuple = ()
    energies: Optional[np.ndarray] = None
    per_agent_states: Optional[np.ndarray] = None

    @property
    def rounds(self) -> int:
        return self.step_norms.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> StateVector:
        return as_state(self.states[-1])

    @property
    def projection_only(self) -> bool:
        return all(k == PROJECTION for k in self.kinds)

    def write_csv(self, path) -> None:
        """One row per iterate (round 0 is the initial state)."""
        d, K = self.dim, self.rounds
        header = ["round", "lambda", *[f"x{j + 1}" for j in range(d)], "step_norm", "energy", "max_agent_step"]
        energy = self.energies is not None
        agents = self.agent_step_norms.size > 0
        # round 0 has no lambda or step; missing columns stay empty
        first = ["0", "", *(_fmt(v) for v in self.states[0]), "",
                 _fmt(self.energies[0]) if energy else "", ""]
        cols = [np.arange(1, K + 1), self.lambdas, *self.states[1:].T, self.step_norms]
        tmpl = ["%d", "%.17g"] + ["%.17g"] * d + ["%.17g"]
        if energy:
            cols.append(self.energies[1:])
        tmpl.append("%.17g" if energy else "")
        if agents:
            cols.append(self.agent_step_norms.max(axis=1))
        tmpl.append("%.17g" if agents else "")
        template = ",".join(tmpl)
        rows = zip(*(c.tolist() for c in cols))
        with open(path, "w", newline="") as f:
            f.write(",".join(header) + "\n")
            f.write(",".join(first) + "\n")
            f.writelines(template % r + "\n" for r in rows)

    def write_agents_csv(self, path) -> None:
        if self.per_agent_states is None:
            raise ValueError("trajectory was recorded without per-agent states")
        d = self.dim
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["round", "agent_index", "agent_label", *[f"x{j + 1}" for j in range(d)], "agent_step"])
            for k in range(self.rounds):
                for i, label in enumerate(self.labels):
                    w.writerow([k + 1, i + 1, label, *(_fmt(v) for v in self.per_agent_states[k, i]),
                                _fmt(self.agent_step_norms[k, i])])


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _check_ops(ops: Sequence[AgentOperator], dim: int) -> None:
    if not ops:
        raise InvalidParameterError("need at least one agent operator")
    for op in ops:
        if op.dim != dim:
            raise DimensionError(f"agent {op.label!r} lives in dim {op.dim}, state has dim {dim}")


def _check_round_lambda(ops, lam) -> float:
    lam = float(lam)
    if any(op.kind == PROX for op in ops) and not (lam > 0 and math.isfinite(lam)):
        raise InvalidParameterError(f"lambda must be a finite positive number, got {lam}")
    return lam


def compose_round(ops: Sequence[AgentOperator], x, lam: float = 1.0):
    """Apply ``ops`` in order once.

    Returns the final state and the list of states after each agent.
    """
    x = as_state(x)
    _check_ops(ops, x.shape[0])
    lam = _check_round_lambda(ops, lam)
    inter = []
    for op in ops:
        x = op.apply(x, lam)
        inter.append(x)
    return x, inter


def fixed_point_residual(ops: Sequence[AgentOperator], x, lam: float = 1.0) -> float:
    """``|T(x) - x|`` for the composed round operator ``T``."""
    x = as_state(x)
    y, _ = compose_round(ops, x, lam)
    return float(np.linalg.norm(y - x))


def iterate(
    ops: Sequence[AgentOperator],
    x0,
    schedule: Schedule,
    stop: StopRule,
    energy: Optional[EnergyFunction] = None,
    *,
    record_agents: Optional[bool] = None,
    backend: Optional[str] = None,
) -> Trajectory:
    """Run rounds ``k = 1, 2, ...`` with ``lambda_k = schedule(k)``.

    Raises DivergenceError (carrying the partial trajectory) when a round
    produces a non-finite state.
    """
    x0 = as_state(x0)
    dim = x0.shape[0]
    ops = tuple(ops)
    _check_ops(ops, dim)
    if energy is not None and energy.dim != dim:
        raise DimensionError(f"energy lives in dim {energy.dim}, state has dim {dim}")
    if record_agents is None:
        record_agents = dim <= 16

    run = _kernel.run if backend is None else _kernel.backends()[backend]
    rec = encode_operators(ops, dim)
    erec = encode_energy(energy) if energy is not None else encode_energy(EnergyFunction((ops[0].as_penalty(),)))
    energy_tol = stop.energy_tol if stop.energy_tol is not None else -1.0
    states, lambdas, steps, asteps, energies, astates, status = run(
        *rec.arrays(), np.ascontiguousarray(x0),
        _SCHEDULE_CODES[schedule.kind], schedule.lambda0, schedule.p or 0.0,
        stop.max_rounds, stop.step_tol, energy_tol,
        *erec.arrays(), energy.regularizer_mu if energy is not None else 0.0,
        energy is not None, bool(record_agents),
    )
    traj = Trajectory(
        states=states,
        lambdas=lambdas,
        step_norms=steps,
        agent_step_norms=asteps,
        termination=STATUS_NAMES[status],
        labels=tuple(op.label for op in ops),
        kinds=tuple(op.kind for op in ops),
        energies=energies,
        per_agent_states=astates,
    )
    if status == 3:
        raise DivergenceError(f"non-finite state in round {traj.rounds + 1}", traj)
    return traj


@dataclass
class FejerReport:
    max_increase: list
    tol: float
    informational: bool

    @property
    def worst(self) -> float:
        return max(self.max_increase)

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol


def fejer_report(
    traj: Trajectory,
    references: Sequence,
    sets: Optional[Sequence[ConvexSet]] = None,
    *,
    tol: float = 1e-12,
    membership_tol: float = 1e-9,
) -> FejerReport:
    """Largest round-over-round increase of ``|x^(k) - a|`` per reference ``a``.

    References must lie in every set in ``sets`` (when given).  For
    trajectories containing prox agents the result is informational only.
    """
    refs = [as_state(a) for a in references]
    if not refs:
        raise InvalidParameterError("fejer_report needs at least one reference point")
    for idx, a in enumerate(refs):
        if a.shape[0] != traj.dim:
            raise DimensionError(f"reference {idx} has dim {a.shape[0]}, trajectory has dim {traj.dim}")
        for s in sets or ():
            if not s.contains(a, membership_tol):
                raise RejectedReferenceError(
                    f"reference {idx} {a.tolist()} is not in {s.tag} (violation {s.violation(a):.3g})"
                )
    incs = []
    for a in refs:
        dist = np.linalg.norm(traj.states - a, axis=1)
        inc = float(np.max(np.diff(dist))) if dist.size > 1 else 0.0
        incs.append(max(inc, 0.0))
    return FejerReport(incs, tol, informational=not traj.projection_only)


@dataclass
class ClusterReport:
    distances: list
    tol: float
    converged: bool

    @property
    def passed(self) -> bool:
        return all(d <= self.tol for d in self.distances)


def cluster_point_check(traj: Trajectory, sets: Sequence[ConvexSet], tol: float = 1e-6) -> ClusterReport:
    """Distance from the last iterate to each set.

    ``converged`` records whether the run stopped on ``step_tol``; a pass on a
    run that hit ``max_rounds`` says less about the limit.
    """
    x = traj.final
    return ClusterReport([s.distance(x) for s in sets], tol, traj.termination == "step_tol")


def oscillation_plateau(traj: Trajectory, window: int = 10, rtol: float = 1e-10) -> Optional[float]:
    """Constant nonzero intra-round agent movement over the last ``window`` rounds.

    Returns the plateau value (the largest single-agent move per round), or
    None when the tail is not flat or is already at rest.
    """
    if traj.rounds < window or traj.agent_step_norms.size == 0:
        return None
    tail = traj.agent_step_norms[-window:].max(axis=1)
    level = float(tail[-1])
    if level <= 0 or np.max(np.abs(tail - level)) > rtol * max(1.0, level):
        return None
    return level
