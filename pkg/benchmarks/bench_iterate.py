"""Time the compiled and pure-Python iteration kernels on the same workloads.

    python benchmarks/bench_iterate.py [--repeat N]
"""
import argparse
import time

import numpy as np

from agentops import kernel
from agentops.dynamics import AgentOperator, StopRule, constant, iterate
from agentops.scenario import load_builtin
from agentops.sets import Ball, Box, Halfspace


def three_agent_workload():
    s = load_builtin("paper-example")
    return "paper-example (48k rounds, d=2)", s.agents, s.x0, s.schedule, s.stop


def projection_workload(dim=12, n_sets=8, seed=0):
    rng = np.random.default_rng(seed)
    anchor = rng.normal(size=dim)
    sets = []
    for i in range(n_sets):
        if i % 3 == 0:
            a = rng.normal(size=dim)
            sets.append(Halfspace(a, float(a @ anchor) + rng.uniform(0, 0.5)))
        elif i % 3 == 1:
            sets.append(Box(anchor - rng.uniform(0.1, 1, dim), anchor + rng.uniform(0.1, 1, dim)))
        else:
            sets.append(Ball(anchor + rng.normal(scale=0.3, size=dim), 1.0))
    ops = [AgentOperator.projection(s) for s in sets]
    x0 = anchor + rng.normal(scale=10, size=dim)
    return f"mixed projections (20k rounds, d={dim}, m={n_sets})", ops, x0, constant(1.0), StopRule(20000)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    available = kernel.backends()
    if "cython" not in available:
        print("compiled kernel not built; only timing the pure-Python kernel")
    print(f"{'workload':48s} {'backend':8s} {'seconds':>10s}")
    for name, ops, x0, sched, stop in (three_agent_workload(), projection_workload()):
        results = {}
        for backend in sorted(available):
            run = lambda: iterate(ops, x0, sched, stop, record_agents=False, backend=backend)
            results[backend] = (best_of(run, args.repeat), run())
            print(f"{name:48s} {backend:8s} {results[backend][0]:10.4f}")
        if len(results) == 2:
            same = np.array_equal(results["cython"][1].states, results["python"][1].states)
            speedup = results["python"][0] / results["cython"][0]
            print(f"{'':48s} speedup {speedup:9.1f}x  identical trajectories: {same}")


if __name__ == "__main__":
    main()
