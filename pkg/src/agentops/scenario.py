"""Scenario documents: one JSON file describes one experiment.

Top-level keys::

    name, dim, agents, x0, schedule, stop        required
    feasible_refs, baselines, expected           optional

``agents`` is a list of ``{label, kind: "projection"|"prox", set|penalty}``
where ``set``/``penalty`` are the tagged records of :mod:`agentops.sets` and
:mod:`agentops.penalties`.  Every field is validated at parse time and errors
carry the dotted path of the offending entry.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dynamics import PROJECTION, PROX, AgentOperator, Schedule, StopRule
from .errors import AgentOpsError, ScenarioError
from .penalties import penalty_from_dict
from .sets import set_from_dict
from .state import StateVector, as_state


@dataclass(frozen=True)
class Baselines:
    monolithic: bool = False
    mu_values: tuple = ()
    averaging: bool = False
    grid_oracle: bool = False

    def to_dict(self) -> dict:
        return {
            "monolithic": self.monolithic,
            "mu_values": list(self.mu_values),
            "averaging": self.averaging,
            "grid_oracle": self.grid_oracle,
        }


@dataclass(frozen=True, eq=False)
class Expected:
    point: StateVector
    tol: float

    def to_dict(self) -> dict:
        return {"point": self.point.tolist(), "tol": self.tol}


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    dim: int
    agents: tuple
    x0: StateVector
    schedule: Schedule
    stop: StopRule
    feasible_refs: tuple = ()
    baselines: Baselines = field(default_factory=Baselines)
    expected: Optional[Expected] = None

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "dim": self.dim,
            "agents": [a.to_dict() for a in self.agents],
            "x0": self.x0.tolist(),
            "schedule": self.schedule.to_dict(),
            "stop": self.stop.to_dict(),
            "feasible_refs": [r.tolist() for r in self.feasible_refs],
            "baselines": self.baselines.to_dict(),
        }
        if self.expected is not None:
            d["expected"] = self.expected.to_dict()
        return d

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def with_max_rounds(self, n: int) -> "Scenario":
        return replace(self, stop=replace(self.stop, max_rounds=n))


def serialize(s: Scenario) -> str:
    return json.dumps(s.to_dict(), indent=2) + "\n"


# -- parsing ---------------------------------------------------------------

_TOP_KEYS = {"name", "dim", "agents", "x0", "schedule", "stop", "feasible_refs", "baselines", "expected"}


def _fail(path, msg, kind="schema"):
    return ScenarioError(msg, path, kind)


def _req(d: dict, key: str, path: str):
    if key not in d:
        raise _fail(f"{path}.{key}" if path else key, "required field is missing")
    return d[key]


def _obj(v, path) -> dict:
    if not isinstance(v, dict):
        raise _fail(path, f"expected an object, got {type(v).__name__}")
    return v


def _number(v, path, *, positive=False, nonneg=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _fail(path, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise _fail(path, f"expected a finite number, got {v}")
    if positive and not v > 0:
        raise _fail(path, f"must be > 0, got {v}")
    if nonneg and v < 0:
        raise _fail(path, f"must be >= 0, got {v}")
    return v


def _int(v, path, *, minimum=1) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise _fail(path, f"expected an integer, got {v!r}")
    if v < minimum:
        raise _fail(path, f"must be >= {minimum}, got {v}")
    return int(v)


def _bool(v, path) -> bool:
    if not isinstance(v, bool):
        raise _fail(path, f"expected true/false, got {v!r}")
    return v


def _vector(v, path, dim) -> StateVector:
    if not isinstance(v, list):
        raise _fail(path, f"expected a list of numbers, got {type(v).__name__}")
    vals = [_number(x, f"{path}[{i}]") for i, x in enumerate(v)]
    if len(vals) != dim:
        raise _fail(path, f"dimensional inconsistency: length {len(vals)} but scenario dim is {dim}", "dimension")
    return as_state(vals)


_VECTOR_FIELDS = ("a", "lower", "upper", "center")


def _check_record_dims(rec: dict, path: str, dim: int) -> None:
    for key in _VECTOR_FIELDS:
        if key in rec:
            _vector(rec[key], f"{path}.{key}", dim)
    if isinstance(rec.get("set"), dict):
        _check_record_dims(rec["set"], f"{path}.set", dim)


def _build(factory, rec, path):
    try:
        return factory(rec)
    except KeyError as exc:
        msg = exc.args[0] if exc.args else str(exc)
        if isinstance(msg, str) and " " not in msg:
            raise _fail(f"{path}.{msg}", "required field is missing") from None
        raise _fail(path, str(msg)) from None
    except (AgentOpsError, TypeError, ValueError) as exc:
        raise _fail(path, str(exc)) from None


def _agent(rec, path, dim) -> AgentOperator:
    rec = _obj(rec, path)
    extra = set(rec) - {"label", "kind", "set", "penalty"}
    if extra:
        raise _fail(path, f"unexpected field(s) {sorted(extra)}")
    label = rec.get("label", "")
    if not isinstance(label, str):
        raise _fail(f"{path}.label", "expected a string")
    kind = _req(rec, "kind", path)
    if kind == PROJECTION:
        body = _obj(_req(rec, "set", path), f"{path}.set")
        if "penalty" in rec:
            raise _fail(f"{path}.penalty", "projection agents take a set, not a penalty")
        _check_record_dims(body, f"{path}.set", dim)
        return AgentOperator.projection(_build(set_from_dict, body, f"{path}.set"), label)
    if kind == PROX:
        body = _obj(_req(rec, "penalty", path), f"{path}.penalty")
        if "set" in rec:
            raise _fail(f"{path}.set", "prox agents take a penalty, not a set")
        _check_record_dims(body, f"{path}.penalty", dim)
        return AgentOperator.proximal(_build(penalty_from_dict, body, f"{path}.penalty"), label)
    raise _fail(f"{path}.kind", f"must be 'projection' or 'prox', got {kind!r}")


def _schedule(rec, path) -> Schedule:
    rec = _obj(rec, path)
    extra = set(rec) - {"type", "lambda0", "p"}
    if extra:
        raise _fail(path, f"unexpected field(s) {sorted(extra)}")
    kind = _req(rec, "type", path)
    lam0 = _number(_req(rec, "lambda0", path), f"{path}.lambda0", positive=True)
    p = _number(rec["p"], f"{path}.p") if "p" in rec else None
    try:
        return Schedule(kind, lam0, p)
    except AgentOpsError as exc:
        raise _fail(path, str(exc)) from None


def _stop(rec, path) -> StopRule:
    rec = _obj(rec, path)
    extra = set(rec) - {"max_rounds", "step_tol", "energy_tol"}
    if extra:
        raise _fail(path, f"unexpected field(s) {sorted(extra)}")
    n = _int(_req(rec, "max_rounds", path), f"{path}.max_rounds")
    step_tol = _number(rec.get("step_tol", 0.0), f"{path}.step_tol", nonneg=True)
    etol = rec.get("energy_tol")
    etol = None if etol is None else _number(etol, f"{path}.energy_tol", nonneg=True)
    return StopRule(n, step_tol, etol)


def _baselines(rec, path) -> Baselines:
    rec = _obj(rec, path)
    extra = set(rec) - {"monolithic", "mu_values", "averaging", "grid_oracle"}
    if extra:
        raise _fail(path, f"unexpected field(s) {sorted(extra)}")
    mono = _bool(rec.get("monolithic", False), f"{path}.monolithic")
    mus = rec.get("mu_values", [])
    if not isinstance(mus, list):
        raise _fail(f"{path}.mu_values", "expected a list of numbers")
    mus = tuple(_number(m, f"{path}.mu_values[{i}]", nonneg=True) for i, m in enumerate(mus))
    if mono and not mus:
        raise _fail(f"{path}.mu_values", "must be nonempty when monolithic is true")
    return Baselines(
        mono,
        mus,
        _bool(rec.get("averaging", False), f"{path}.averaging"),
        _bool(rec.get("grid_oracle", False), f"{path}.grid_oracle"),
    )


def scenario_from_dict(doc) -> Scenario:
    doc = _obj(doc, "")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise _fail("", f"unexpected top-level field(s) {sorted(extra)}")
    name = _req(doc, "name", "")
    if not isinstance(name, str) or not name:
        raise _fail("name", "expected a nonempty string")
    dim = _int(_req(doc, "dim", ""), "dim")
    agents = _req(doc, "agents", "")
    if not isinstance(agents, list) or not agents:
        raise _fail("agents", "expected a nonempty list")
    ops = tuple(_agent(a, f"agents[{i}]", dim) for i, a in enumerate(agents))
    x0 = _vector(_req(doc, "x0", ""), "x0", dim)
    schedule = _schedule(_req(doc, "schedule", ""), "schedule")
    stop = _stop(_req(doc, "stop", ""), "stop")
    refs = doc.get("feasible_refs", [])
    if not isinstance(refs, list):
        raise _fail("feasible_refs", "expected a list of points")
    refs = tuple(_vector(r, f"feasible_refs[{i}]", dim) for i, r in enumerate(refs))
    baselines = _baselines(doc["baselines"], "baselines") if "baselines" in doc else Baselines()
    expected = None
    if doc.get("expected") is not None:
        e = _obj(doc["expected"], "expected")
        expected = Expected(
            _vector(_req(e, "point", "expected"), "expected.point", dim),
            _number(_req(e, "tol", "expected"), "expected.tol", positive=True),
        )
    return Scenario(name, dim, ops, x0, schedule, stop, refs, baselines, expected)


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}", kind="syntax"
        ) from None
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as f:
        return parse_scenario(f.read())


# -- built-in scenarios ----------------------------------------------------

def _three_agent_example() -> dict:
    return {
        "name": "paper-example",
        "dim": 2,
        "agents": [
            {"label": "phi1", "kind": "prox", "penalty": {"type": "affine_quadratic", "a": [1, 0], "b": 1, "w": 1}},
            {"label": "phi2", "kind": "prox", "penalty": {"type": "affine_quadratic", "a": [0, 1], "b": 1, "w": 1}},
            {"label": "phi3", "kind": "prox", "penalty": {"type": "affine_quadratic", "a": [1, 1], "b": 1, "w": 1}},
        ],
        "x0": [0, 0],
        "schedule": {"type": "harmonic", "lambda0": 1.0},
        "stop": {"max_rounds": 1000000, "step_tol": 1e-10},
        "baselines": {"monolithic": True, "mu_values": [0.1, 1, 10], "averaging": True, "grid_oracle": True},
        "expected": {"point": [2 / 3, 2 / 3], "tol": 1e-3},
    }


def _von_neumann_lines(theta: float = 0.3) -> dict:
    return {
        "name": "von-neumann-lines",
        "dim": 2,
        "agents": [
            {"label": "x-axis", "kind": "projection", "set": {"type": "hyperplane", "a": [0, 1], "b": 0}},
            {"label": "tilted-line", "kind": "projection",
             "set": {"type": "hyperplane", "a": [-math.sin(theta), math.cos(theta)], "b": 0}},
        ],
        "x0": [1, 1],
        "schedule": {"type": "constant", "lambda0": 1.0},
        "stop": {"max_rounds": 10000, "step_tol": 1e-15},
        "feasible_refs": [[0, 0]],
        "expected": {"point": [0, 0], "tol": 1e-12},
    }


def _identical_agents() -> dict:
    plane = {"type": "hyperplane", "a": [1, 1], "b": 1}
    return {
        "name": "identical-agents",
        "dim": 2,
        "agents": [{"label": f"clone{i + 1}", "kind": "projection", "set": dict(plane)} for i in range(3)],
        "x0": [3, 1],
        "schedule": {"type": "constant", "lambda0": 1.0},
        "stop": {"max_rounds": 100, "step_tol": 1e-12},
        "feasible_refs": [[0.5, 0.5], [1, 0], [-2, 3]],
        "expected": {"point": [1.5, -0.5], "tol": 1e-12},
    }


def _parallel_planes() -> dict:
    # step_tol = 0: the round map is stationary after one round here, so only
    # max_rounds can end the run and expose the intra-round oscillation
    return {
        "name": "parallel-planes",
        "dim": 2,
        "agents": [
            {"label": "x1=0", "kind": "projection", "set": {"type": "hyperplane", "a": [1, 0], "b": 0}},
            {"label": "x1=1", "kind": "projection", "set": {"type": "hyperplane", "a": [1, 0], "b": 1}},
        ],
        "x0": [0.25, 2],
        "schedule": {"type": "constant", "lambda0": 1.0},
        "stop": {"max_rounds": 200, "step_tol": 0.0},
    }


BUILTINS = {
    "paper-example": _three_agent_example,
    "von-neumann-lines": _von_neumann_lines,
    "identical-agents": _identical_agents,
    "parallel-planes": _parallel_planes,
}


def builtin_document(name: str) -> str:
    if name not in BUILTINS:
        raise KeyError(f"unknown built-in {name!r}; choose from {sorted(BUILTINS)}")
    return json.dumps(BUILTINS[name](), indent=2) + "\n"


def load_builtin(name: str) -> Scenario:
    return parse_scenario(builtin_document(name))


def random_halfspace_scenario(rng: np.random.Generator, n_sets: int = 3, dim: int = 2,
                              name: str = "random-halfspaces") -> Scenario:
    """Projection scenario whose halfspaces all contain a planted point.

    The planted point is the (only) feasible reference.
    """
    anchor = rng.normal(size=dim)
    agents = []
    for i in range(n_sets):
        a = rng.normal(size=dim)
        b = float(a @ anchor) + rng.uniform(0.0, 1.0)
        agents.append({"label": f"h{i + 1}", "kind": "projection",
                       "set": {"type": "halfspace", "a": a.tolist(), "b": b}})
    doc = {
        "name": name,
        "dim": dim,
        "agents": agents,
        "x0": (anchor + rng.normal(scale=5.0, size=dim)).tolist(),
        "schedule": {"type": "constant", "lambda0": 1.0},
        "stop": {"max_rounds": 20000, "step_tol": 1e-13},
        "feasible_refs": [anchor.tolist()],
    }
    return scenario_from_dict(doc)
