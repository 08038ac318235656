"""The run / check / compare workflows behind the CLI.

Each returns a plain dict report (JSON-serializable) with an ``ok`` flag that
drives the process exit status.
"""
from __future__ import annotations

import json
import math
import os
from typing import Optional

import numpy as np

from . import kernel
from .baselines import averaging_baseline, grid_minimize, monolithic_minimizer
from .dynamics import (
    PROX,
    Trajectory,
    cluster_point_check,
    compose_round,
    fejer_report,
    fixed_point_residual,
    iterate,
    oscillation_plateau,
)
from .errors import DivergenceError, InvalidStateError, RejectedReferenceError, SingularSystemError, UnsupportedObjectiveError
from .penalties import AffineQuadratic, EnergyFunction
from .scenario import Scenario

CLUSTER_TOL = 1e-6
INVARIANCE_TOL = 1e-12
COLLAPSE_TOL = 1e-15
DEFAULT_MATCH_TOL = 1e-3


def scenario_energy(s: Scenario, mu: float = 0.0) -> EnergyFunction:
    """Sum of the agents' penalties (indicators for projection agents)."""
    return EnergyFunction(tuple(a.as_penalty() for a in s.agents), mu)


def _all_identical(s: Scenario) -> bool:
    first = s.agents[0]
    key = (first.kind, (first.set or first.penalty).to_dict())
    return len(s.agents) > 1 and all((a.kind, (a.set or a.penalty).to_dict()) == key for a in s.agents)


def _quadratic(s: Scenario) -> bool:
    return all(a.kind == PROX and isinstance(a.penalty, AffineQuadratic) for a in s.agents)


def _vec(x) -> list:
    return [float(v) for v in x]


def _num(v: float):
    """JSON has no inf/nan; encode them as strings."""
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _converged_round(traj: Trajectory, tol: float) -> int:
    dist = np.linalg.norm(traj.states - traj.states[-1], axis=1)
    idx = np.nonzero(dist > tol)[0]
    return int(idx[-1] + 1) if idx.size else 0


def simulate(s: Scenario, *, record_agents: Optional[bool] = None):
    """Run the scenario's dynamics; returns (trajectory, error or None)."""
    try:
        return iterate(s.agents, s.x0, s.schedule, s.stop, scenario_energy(s), record_agents=record_agents), None
    except DivergenceError as exc:
        return exc.trajectory, exc


def _safe_residual(ops, x, lam):
    try:
        return fixed_point_residual(ops, x, lam)
    except InvalidStateError:
        return None


def run_command(s: Scenario, output_dir=None, *, per_agent: bool = False) -> dict:
    """Run the dynamics, write trajectory CSV(s) and ``summary.json``."""
    traj, err = simulate(s, record_agents=True if per_agent else None)
    final = traj.final
    last_lam = float(traj.lambdas[-1]) if traj.rounds else s.schedule(1)
    summary = {
        "name": s.name,
        "backend": kernel.BACKEND,
        "dim": s.dim,
        "agents": [a.label for a in s.agents],
        "rounds": traj.rounds,
        "termination": "diverged" if err else traj.termination,
        "final": _vec(final),
        "final_step_norm": float(traj.step_norms[-1]) if traj.rounds else None,
        "final_energy": _num(traj.energies[-1]) if traj.energies is not None else None,
        "terminal_lambda": last_lam,
        "fixed_point_residual": _safe_residual(s.agents, final, last_lam),
        "converged_round": _converged_round(traj, max(s.stop.step_tol, 1e-12)),
        "notes": [],
    }
    ok = err is None
    if err is not None:
        summary["error"] = str(err)
    if _all_identical(s):
        summary["notes"].append(
            f"degenerate collapse: all {len(s.agents)} agents are identical, so one round equals a single operator"
        )
    if any(a.kind == PROX for a in s.agents) and not s.schedule.diminishing:
        summary["notes"].append(
            "constant step size: the prox limit is a lambda-dependent fixed point, not a minimizer of the energy"
        )
    plateau = oscillation_plateau(traj) if traj.termination == "max_rounds" else None
    summary["oscillation_plateau"] = plateau
    if plateau is not None:
        summary["notes"].append(
            f"non-convergent oscillation: agents keep moving {plateau:.17g} per round; the sets likely do not intersect"
        )
    if s.expected is not None:
        error = float(np.linalg.norm(final - s.expected.point))
        met = error <= s.expected.tol
        summary["expected"] = {"point": _vec(s.expected.point), "tol": s.expected.tol, "error": error, "passed": met}
        ok = ok and met
    summary["ok"] = ok

    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        traj.write_csv(os.path.join(output_dir, "trajectory.csv"))
        if per_agent and traj.per_agent_states is not None:
            traj.write_agents_csv(os.path.join(output_dir, "trajectory_agents.csv"))
        with open(os.path.join(output_dir, "summary.json"), "w") as f:
            json.dump(summary, f, indent=2)
            f.write("\n")
    return summary


def _row(name, status, detail):
    return {"check": name, "status": status, "detail": detail}


def check_command(s: Scenario, *, seed: int = 0) -> dict:
    """Run the diagnostic battery that applies to this scenario."""
    rows = []
    traj, err = simulate(s)
    if err is not None:
        rows.append(_row("divergence", "fail", str(err)))
    projection_only = traj.projection_only
    sets = [a.constraint_set() for a in s.agents]

    if s.feasible_refs and not projection_only:
        # refs of a prox scenario are not members of an intersection, so neither
        # Fejer monotonicity nor fixedness is guaranteed
        rep = fejer_report(traj, s.feasible_refs)
        rows.append(_row("fejer", "info", f"max distance increase {rep.worst:.3g}; not guaranteed for prox agents"))
        worst = max(fixed_point_residual(s.agents, r, s.schedule(1)) for r in s.feasible_refs)
        rows.append(_row("invariance", "info", f"max |T(a) - a| over {len(s.feasible_refs)} reference(s) = {worst:.3g}"))
    elif s.feasible_refs:
        try:
            rep = fejer_report(traj, s.feasible_refs, sets)
        except RejectedReferenceError as exc:
            rows.append(_row("fejer", "fail", str(exc)))
        else:
            rows.append(_row("fejer", "pass" if rep.passed else "fail",
                             f"max distance increase {rep.worst:.3g} (tol {rep.tol:g})"))
        worst = max(fixed_point_residual(s.agents, r, s.schedule(1)) for r in s.feasible_refs)
        rows.append(_row("invariance", "pass" if worst <= INVARIANCE_TOL else "fail",
                         f"max |T(a) - a| over {len(s.feasible_refs)} reference(s) = {worst:.3g}"))
    else:
        rows.append(_row("fejer", "skip", "no feasible_refs"))
        rows.append(_row("invariance", "skip", "no feasible_refs"))

    if projection_only:
        rep = cluster_point_check(traj, sets, CLUSTER_TOL)
        dists = ", ".join(f"{d:.3g}" for d in rep.distances)
        note = "" if rep.converged else f" (stopped on {traj.termination})"
        rows.append(_row("cluster_point", "pass" if rep.passed else "fail",
                         f"distance of final state to each set: [{dists}] (tol {rep.tol:g}){note}"))
    else:
        rows.extend(_minimizer_checks(s, traj))

    if _all_identical(s):
        rng = np.random.default_rng(seed)
        pts = [s.x0] + [s.x0 + rng.normal(scale=1.0 + float(np.abs(s.x0).max()), size=s.dim) for _ in range(20)]
        lam = s.schedule(1)
        worst = 0.0
        for p in pts:
            y, _ = compose_round(s.agents, p, lam)
            worst = max(worst, float(np.max(np.abs(y - s.agents[0].apply(p, lam)))))
        rows.append(_row("degenerate_collapse", "pass" if worst <= COLLAPSE_TOL else "fail",
                         f"max |T(x) - T_1(x)| over {len(pts)} inputs = {worst:.3g}"))

    if s.expected is not None:
        e = float(np.linalg.norm(traj.final - s.expected.point))
        rows.append(_row("expected", "pass" if e <= s.expected.tol else "fail",
                         f"|final - expected| = {e:.3g} (tol {s.expected.tol:g})"))

    ok = all(r["status"] != "fail" for r in rows)
    return {"name": s.name, "backend": kernel.BACKEND, "rounds": traj.rounds,
            "termination": traj.termination, "checks": rows, "ok": ok}


def _minimizer_checks(s: Scenario, traj: Trajectory) -> list:
    rows = []
    tol = s.expected.tol if s.expected is not None else DEFAULT_MATCH_TOL
    final = traj.final
    F = scenario_energy(s)
    if not s.schedule.diminishing:
        rows.append(_row("minimizer", "info",
                         "constant step size: convergence to a minimizer is not guaranteed"))
        return rows
    if _quadratic(s):
        try:
            xm = monolithic_minimizer(F)
        except SingularSystemError as exc:
            rows.append(_row("minimizer_exact", "skip", str(exc)))
        else:
            e = float(np.linalg.norm(final - xm))
            rows.append(_row("minimizer_exact", "pass" if e <= tol else "fail",
                             f"|final - argmin F| = {e:.3g} (tol {tol:g})"))
    if s.dim <= 3:
        n = 401
        lo, hi = final - 1.0, final + 1.0
        gp, gv = grid_minimize(F, lo, hi, n)
        cell = 2.0 / (n - 1) * math.sqrt(s.dim)
        e = float(np.linalg.norm(final - gp))
        rows.append(_row("minimizer_grid", "pass" if e <= cell + tol else "fail",
                         f"|final - grid argmin| = {e:.3g} (tol cell {cell:.3g} + {tol:g})"))
    if not rows:
        rows.append(_row("minimizer", "skip", "no oracle for this objective"))
    return rows


def compare_command(s: Scenario) -> dict:
    """Factored dynamics against monolithic, averaging and grid baselines."""
    b = s.baselines
    if (b.monolithic or b.averaging) and not _quadratic(s):
        raise UnsupportedObjectiveError(
            "monolithic and averaging baselines need every agent to be a prox agent with an affine_quadratic penalty"
        )
    traj, err = simulate(s)
    if err is not None:
        raise err
    limit = traj.final
    F = scenario_energy(s)
    tol = s.expected.tol if s.expected is not None else DEFAULT_MATCH_TOL
    terms = [a.as_penalty() for a in s.agents]

    def row(name, point, **extra):
        point = np.asarray(point, dtype=np.float64)
        dist = float(np.linalg.norm(point - limit))
        return {
            "row": name,
            "point": _vec(point),
            "energy": _num(F(point)),
            "distance_to_factored": dist,
            "agent_penalties": [_num(t.eval(point)) for t in terms],
            "differs": dist > tol,
            **extra,
        }

    rows = [row("factored", limit, rounds=traj.rounds, termination=traj.termination)]
    if b.monolithic:
        for mu in b.mu_values:
            try:
                rows.append(row(f"monolithic mu={mu:g}", monolithic_minimizer(F.with_mu(mu)), mu=mu))
            except SingularSystemError as exc:
                rows.append({"row": f"monolithic mu={mu:g}", "error": str(exc), "mu": mu})
    if b.averaging:
        rows.append(row("averaging", averaging_baseline(terms)))
    if b.grid_oracle and s.dim <= 3:
        pts = np.array([limit, s.x0] + [r["point"] for r in rows if "point" in r])
        lo, hi = pts.min(axis=0) - 0.5, pts.max(axis=0) + 0.5
        gp, _ = grid_minimize(F, lo, hi, 401)
        rows.append(row("grid oracle", gp, cell=float(np.max((hi - lo) / 400))))
    return {"name": s.name, "backend": kernel.BACKEND, "tol": tol, "rows": rows, "ok": True}


def render_compare(report: dict) -> str:
    """Aligned plain-text table of a compare report."""
    header = ["row", "point", "F", "dist to factored", "agent penalties", "differs"]
    lines = []
    for r in report["rows"]:
        if "error" in r:
            lines.append([r["row"], r["error"], "", "", "", ""])
            continue
        lines.append([
            r["row"],
            "(" + ", ".join(f"{v:.6f}" for v in r["point"]) + ")",
            _fmt_num(r["energy"]),
            f"{r['distance_to_factored']:.3e}",
            "[" + ", ".join(_fmt_num(v) for v in r["agent_penalties"]) + "]",
            "yes" if r["differs"] else "no",
        ])
    widths = [max(len(str(x)) for x in col) for col in zip(header, *lines)]
    out = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths))]
    out.append("  ".join("-" * w for w in widths))
    out.extend("  ".join(str(c).ljust(w) for c, w in zip(line, widths)) for line in lines)
    return "\n".join(out)


def render_check(report: dict) -> str:
    rows = report["checks"]
    w = max(len(r["check"]) for r in rows)
    out = [f"{r['status'].upper():5s} {r['check'].ljust(w)}  {r['detail']}" for r in rows]
    out.append(f"{'OK' if report['ok'] else 'FAILED'}: {report['name']}")
    return "\n".join(out)


def _fmt_num(v) -> str:
    return v if isinstance(v, str) else f"{v:.6g}"
