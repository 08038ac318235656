# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic-iteration kernel.

Mirrors ``_pykernel.run`` operation for operation; any change here must be
made there too (the test suite checks the two agree exactly).
"""
import numpy as np

from libc.math cimport sqrt, pow, fabs, fmin, isfinite, INFINITY

cdef double EPS = 2.0 ** -52
cdef double INF_GUARD = 1.7976931348623157e308  # an overflowed residual never counts as zero


cdef inline double _dot_res(const double[:, ::1] va, Py_ssize_t i, double[::1] y, double b, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t j
    cdef double r = 0.0
    for j in range(d):
        r += va[i, j] * y[j]
    return r - b


cdef inline double _res_scale(const double[:, ::1] va, Py_ssize_t i, double[::1] y, double b, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t j
    cdef double s = fabs(b)
    for j in range(d):
        s += fabs(va[i, j] * y[j])
    return (d + 2) * EPS * s


cdef void _project(int skind, Py_ssize_t i, const double[:, ::1] va, const double[:, ::1] vb,
                   const double[::1] sb, const double[::1] snsq,
                   double[::1] y, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t j
    cdef double r, c, n, t, m
    if skind == 0 or skind == 1:
        r = _dot_res(va, i, y, sb[i], d)
        # a residual within rounding error of zero means y is already in the set
        if fabs(r) <= fmin(_res_scale(va, i, y, sb[i], d), INF_GUARD) or (skind == 1 and r <= 0.0):
            return
        c = r / snsq[i]
        for j in range(d):
            y[j] = y[j] - c * va[i, j]
    elif skind == 2:
        for j in range(d):
            if y[j] < va[i, j]:
                y[j] = va[i, j]
            if y[j] > vb[i, j]:
                y[j] = vb[i, j]
    else:
        n = 0.0
        m = sb[i]
        for j in range(d):
            t = y[j] - va[i, j]
            n += t * t
            m += fabs(y[j])
        n = sqrt(n)
        if n <= sb[i] + (d + 2) * EPS * m:
            return
        c = sb[i] / n
        for j in range(d):
            y[j] = va[i, j] + c * (y[j] - va[i, j])


cdef double _violation(int skind, Py_ssize_t i, const double[:, ::1] va, const double[:, ::1] vb,
                       const double[::1] sb, double[::1] y, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t j
    cdef double r, n, t
    if skind == 0:
        return fabs(_dot_res(va, i, y, sb[i], d))
    if skind == 1:
        r = _dot_res(va, i, y, sb[i], d)
        return r if r > 0.0 else 0.0
    if skind == 2:
        r = 0.0
        for j in range(d):
            t = va[i, j] - y[j]
            if t > r:
                r = t
            t = y[j] - vb[i, j]
            if t > r:
                r = t
        return r
    n = 0.0
    for j in range(d):
        t = y[j] - va[i, j]
        n += t * t
    r = sqrt(n) - sb[i]
    return r if r > 0.0 else 0.0


cdef double _energy(const int[::1] kind, const int[::1] skind, const double[:, ::1] va,
                    const double[:, ::1] vb, const double[::1] sb, const double[::1] sw,
                    const double[::1] snsq, const double[::1] stol, double mu,
                    double[::1] x, double[::1] tmp, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n = kind.shape[0]
    cdef double total = 0.0, r, s, t
    for i in range(n):
        if kind[i] == 1:
            r = _dot_res(va, i, x, sb[i], d)
            total += 0.5 * sw[i] * r * r
        elif kind[i] == 2:
            for j in range(d):
                tmp[j] = x[j]
            _project(skind[i], i, va, vb, sb, snsq, tmp, d)
            s = 0.0
            for j in range(d):
                t = x[j] - tmp[j]
                s += t * t
            total += 0.5 * sw[i] * s
        else:
            if _violation(skind[i], i, va, vb, sb, x, d) > stol[i]:
                total += INFINITY
    if mu != 0.0:
        s = 0.0
        for j in range(d):
            s += x[j] * x[j]
        total += 0.5 * mu * s
    return total


def run(kind, skind, va, vb, sb, sw, snsq, stol, x0,
        int sched_kind, double lambda0, double p,
        long max_rounds, double step_tol, double energy_tol,
        ekind, eskind, eva, evb, esb, esw, esnsq, estol, double mu,
        bint use_energy, bint record_agents):
    cdef const int[::1] k_ = kind
    cdef const int[::1] sk_ = skind
    cdef const double[:, ::1] va_ = va
    cdef const double[:, ::1] vb_ = vb
    cdef const double[::1] sb_ = sb
    cdef const double[::1] sw_ = sw
    cdef const double[::1] nsq_ = snsq
    cdef const int[::1] ek_ = ekind
    cdef const int[::1] esk_ = eskind
    cdef const double[:, ::1] eva_ = eva
    cdef const double[:, ::1] evb_ = evb
    cdef const double[::1] esb_ = esb
    cdef const double[::1] esw_ = esw
    cdef const double[::1] ensq_ = esnsq
    cdef const double[::1] etol_ = estol

    cdef Py_ssize_t m = k_.shape[0]
    cdef Py_ssize_t d = va_.shape[1]
    cdef Py_ssize_t i, j, cap, K = 0
    cdef long k
    cdef double lam, r, coef, t, s, step, e_prev = 0.0, e_new = 0.0
    cdef int status = 2
    cdef bint finite

    cap = max_rounds if max_rounds < 1024 else 1024
    states_a = np.empty((cap + 1, d))
    lambdas_a = np.empty(cap)
    steps_a = np.empty(cap)
    asteps_a = np.empty((cap, m))
    energies_a = np.empty(cap + 1) if use_energy else None
    astates_a = np.empty((cap, m, d)) if record_agents else None
    cdef double[:, ::1] states = states_a
    cdef double[::1] lambdas = lambdas_a
    cdef double[::1] steps = steps_a
    cdef double[:, ::1] asteps = asteps_a
    cdef double[::1] energies
    cdef double[:, :, ::1] astates

    x_a = np.array(x0, dtype=np.float64)
    y_a = np.empty(d)
    prev_a = np.empty(d)
    tmp_a = np.empty(d)
    cdef double[::1] x = x_a
    cdef double[::1] y = y_a
    cdef double[::1] prev = prev_a
    cdef double[::1] tmp = tmp_a

    for j in range(d):
        states[0, j] = x[j]
    if use_energy:
        energies = energies_a
        e_prev = _energy(ek_, esk_, eva_, evb_, esb_, esw_, ensq_, etol_, mu, x, tmp, d)
        energies[0] = e_prev
    if record_agents:
        astates = astates_a

    k = 0
    while k < max_rounds:
        k += 1
        if sched_kind == 0:
            lam = lambda0
        elif sched_kind == 1:
            lam = lambda0 / <double>k
        else:
            lam = lambda0 / pow(<double>k, p)

        if K + 1 > cap:
            cap *= 2
            states_a = _grow(states_a, cap + 1)
            lambdas_a = _grow(lambdas_a, cap)
            steps_a = _grow(steps_a, cap)
            asteps_a = _grow(asteps_a, cap)
            states = states_a
            lambdas = lambdas_a
            steps = steps_a
            asteps = asteps_a
            if use_energy:
                energies_a = _grow(energies_a, cap + 1)
                energies = energies_a
            if record_agents:
                astates_a = _grow(astates_a, cap)
                astates = astates_a

        for j in range(d):
            y[j] = x[j]
        for i in range(m):
            for j in range(d):
                prev[j] = y[j]
            if k_[i] == 0:
                _project(sk_[i], i, va_, vb_, sb_, nsq_, y, d)
            elif k_[i] == 1:
                r = _dot_res(va_, i, y, sb_[i], d)
                coef = lam * sw_[i] * r / (1.0 + lam * sw_[i] * nsq_[i])
                for j in range(d):
                    y[j] = y[j] - coef * va_[i, j]
            else:
                for j in range(d):
                    tmp[j] = y[j]
                _project(sk_[i], i, va_, vb_, sb_, nsq_, tmp, d)
                t = lam * sw_[i] / (1.0 + lam * sw_[i])
                for j in range(d):
                    y[j] = y[j] + t * (tmp[j] - y[j])
            s = 0.0
            for j in range(d):
                t = y[j] - prev[j]
                s += t * t
            asteps[K, i] = sqrt(s)
            if record_agents:
                for j in range(d):
                    astates[K, i, j] = y[j]

        finite = True
        s = 0.0
        for j in range(d):
            if not isfinite(y[j]):
                finite = False
            t = y[j] - x[j]
            s += t * t
        if not finite:
            status = 3
            break
        step = sqrt(s)

        K += 1
        lambdas[K - 1] = lam
        steps[K - 1] = step
        for j in range(d):
            x[j] = y[j]
            states[K, j] = y[j]
        if use_energy:
            e_new = _energy(ek_, esk_, eva_, evb_, esb_, esw_, ensq_, etol_, mu, x, tmp, d)
            energies[K] = e_new

        if step < step_tol:
            status = 0
            break
        if use_energy and energy_tol >= 0.0 and fabs(e_new - e_prev) < energy_tol:
            status = 1
            break
        e_prev = e_new
        status = 2

    return (
        states_a[: K + 1].copy(),
        lambdas_a[:K].copy(),
        steps_a[:K].copy(),
        asteps_a[:K].copy(),
        energies_a[: K + 1].copy() if use_energy else None,
        astates_a[:K].copy() if record_agents else None,
        status,
    )


def _grow(a, n):
    out = np.empty((n,) + a.shape[1:])
    out[: a.shape[0]] = a
    return out
