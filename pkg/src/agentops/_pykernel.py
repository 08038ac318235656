"""Pure-Python cyclic-iteration kernel.

Reference twin of ``_ckernel.pyx``: same records, same arithmetic in the same
order, so both produce identical floats.  Plain lists are used instead of
numpy because the vectors are tiny and per-call numpy overhead dominates.
"""
import math

import numpy as np

INF = math.inf
EPS = 2.0 ** -52
INF_GUARD = 1.7976931348623157e308  # an overflowed residual never counts as zero


def _dot_res(a, y, b):
    r = 0.0
    for aj, yj in zip(a, y):
        r += aj * yj
    return r - b


def _res_scale(a, y, b):
    s = abs(b)
    for aj, yj in zip(a, y):
        s += abs(aj * yj)
    return (len(a) + 2) * EPS * s


def _project(skind, a, v, b, nsq, y):
    if skind == 0 or skind == 1:
        r = _dot_res(a, y, b)
        # a residual within rounding error of zero means y is already in the set
        if abs(r) <= min(_res_scale(a, y, b), INF_GUARD) or (skind == 1 and r <= 0.0):
            return y
        c = r / nsq
        return [yj - c * aj for yj, aj in zip(y, a)]
    if skind == 2:
        out = []
        for yj, lo, hi in zip(y, a, v):
            if yj < lo:
                yj = lo
            if yj > hi:
                yj = hi
            out.append(yj)
        return out
    n = 0.0
    m = b
    for yj, cj in zip(y, a):
        t = yj - cj
        n += t * t
        m += abs(yj)
    n = math.sqrt(n)
    if n <= b + (len(y) + 2) * EPS * m:
        return y
    c = b / n
    return [cj + c * (yj - cj) for yj, cj in zip(y, a)]


def _violation(skind, a, v, b, y):
    if skind == 0:
        return abs(_dot_res(a, y, b))
    if skind == 1:
        r = _dot_res(a, y, b)
        return r if r > 0.0 else 0.0
    if skind == 2:
        r = 0.0
        for yj, lo, hi in zip(y, a, v):
            t = lo - yj
            if t > r:
                r = t
            t = yj - hi
            if t > r:
                r = t
        return r
    n = 0.0
    for yj, cj in zip(y, a):
        t = yj - cj
        n += t * t
    r = math.sqrt(n) - b
    return r if r > 0.0 else 0.0


def _energy(terms, mu, x):
    total = 0.0
    for kind, skind, a, v, b, w, nsq, tol in terms:
        if kind == 1:
            r = _dot_res(a, x, b)
            total += 0.5 * w * r * r
        elif kind == 2:
            p = _project(skind, a, v, b, nsq, x)
            s = 0.0
            for xj, pj in zip(x, p):
                t = xj - pj
                s += t * t
            total += 0.5 * w * s
        else:
            if _violation(skind, a, v, b, x) > tol:
                total += INF
    if mu != 0.0:
        s = 0.0
        for xj in x:
            s += xj * xj
        total += 0.5 * mu * s
    return total


def _rows(kind, skind, va, vb, sb, sw, snsq, stol):
    return [
        (int(kind[i]), int(skind[i]), va[i].tolist(), vb[i].tolist(),
         float(sb[i]), float(sw[i]), float(snsq[i]), float(stol[i]))
        for i in range(len(kind))
    ]


def run(kind, skind, va, vb, sb, sw, snsq, stol, x0,
        sched_kind, lambda0, p,
        max_rounds, step_tol, energy_tol,
        ekind, eskind, eva, evb, esb, esw, esnsq, estol, mu,
        use_energy, record_agents):
    ops = _rows(kind, skind, va, vb, sb, sw, snsq, stol)
    terms = _rows(ekind, eskind, eva, evb, esb, esw, esnsq, estol) if use_energy else []
    lambda0, p, mu = float(lambda0), float(p), float(mu)

    x = [float(v) for v in x0]
    states = [x]
    lambdas, steps, asteps = [], [], []
    energies = None
    astates = [] if record_agents else None
    e_prev = e_new = 0.0
    if use_energy:
        e_prev = _energy(terms, mu, x)
        energies = [e_prev]
    status = 2

    k = 0
    while k < max_rounds:
        k += 1
        if sched_kind == 0:
            lam = lambda0
        elif sched_kind == 1:
            lam = lambda0 / float(k)
        else:
            lam = lambda0 / math.pow(float(k), p)

        y = x
        round_steps = []
        round_states = []
        for kd, sk, a, v, b, w, nsq, _ in ops:
            prev = y
            if kd == 0:
                y = _project(sk, a, v, b, nsq, y)
            elif kd == 1:
                r = _dot_res(a, y, b)
                coef = lam * w * r / (1.0 + lam * w * nsq)
                y = [yj - coef * aj for yj, aj in zip(y, a)]
            else:
                q = _project(sk, a, v, b, nsq, y)
                t = lam * w / (1.0 + lam * w)
                y = [yj + t * (qj - yj) for yj, qj in zip(y, q)]
            s = 0.0
            for yj, pj in zip(y, prev):
                t = yj - pj
                s += t * t
            round_steps.append(math.sqrt(s))
            if record_agents:
                round_states.append(y)

        finite = True
        s = 0.0
        for yj, xj in zip(y, x):
            if not math.isfinite(yj):
                finite = False
            t = yj - xj
            s += t * t
        if not finite:
            status = 3
            break
        step = math.sqrt(s)

        lambdas.append(lam)
        steps.append(step)
        asteps.append(round_steps)
        if record_agents:
            astates.append(round_states)
        x = y
        states.append(x)
        if use_energy:
            e_new = _energy(terms, mu, x)
            energies.append(e_new)

        if step < step_tol:
            status = 0
            break
        if use_energy and energy_tol >= 0.0 and abs(e_new - e_prev) < energy_tol:
            status = 1
            break
        e_prev = e_new
        status = 2

    d = len(x0)
    m = len(ops)
    K = len(steps)
    return (
        np.array(states, dtype=np.float64).reshape(K + 1, d),
        np.array(lambdas, dtype=np.float64),
        np.array(steps, dtype=np.float64),
        np.array(asteps, dtype=np.float64).reshape(K, m),
        np.array(energies, dtype=np.float64) if use_energy else None,
        np.array(astates, dtype=np.float64).reshape(K, m, d) if record_agents else None,
        status,
    )
