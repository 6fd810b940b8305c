"""Compiled inner loops for the integrators and windowed extrema.

Everything here works on plain float64 arrays; the object layer precomputes
delay values at every stage time (delay profiles are state independent) and
encodes history functions as (kind code, parameter arrays). Histories use
kind 0 = constant, 1 = affine, 2 = sampled piecewise linear.

Status codes returned by the integration kernels: 0 success, 1 delayed
lookup left the history domain, 2 fixed-point iteration failed to converge.
The second return value is the offending step index.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _hist_into(theta, hkind, ha, hb, ht, hv, out):
    n = out.shape[0]
    if hkind == 0:
        for c in range(n):
            out[c] = ha[c]
    elif hkind == 1:
        for c in range(n):
            out[c] = ha[c] + hb[c] * theta
    else:
        last = ht.shape[0] - 2
        j = np.searchsorted(ht, theta, side="right") - 1
        if j < 0:
            j = 0
        if j > last:
            j = last
        w = (theta - ht[j]) / (ht[j + 1] - ht[j])
        for c in range(n):
            out[c] = hv[j, c] + w * (hv[j + 1, c] - hv[j, c])


@njit(cache=True)
def _hermite_into(x0, d0, x1, d1, th, seg, out):
    t2 = th * th
    t3 = t2 * th
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + th
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    for c in range(out.shape[0]):
        out[c] = h00 * x0[c] + h01 * x1[c] + (h10 * d0[c] + h11 * d1[c]) * seg


@njit(cache=True)
def _rhs_into(E, F, q, x, U, out):
    n = out.shape[0]
    m = F.shape[0]
    for a in range(n):
        acc = 0.0
        for b in range(n):
            xv = x[b]
            sv = xv if q == 1 else xv ** q
            acc += E[a, b] * sv
        out[a] = acc
    for k in range(m):
        for a in range(n):
            acc = 0.0
            for b in range(n):
                uv = U[k, b]
                sv = uv if q == 1 else uv ** q
                acc += F[k, a, b] * sv
            out[a] = out[a] + acc


@njit(cache=True)
def _lookup(s, i, times, X, D, t0, dt0, xp, dp, t_cur, t_next,
            hkind, ha, hb, ht, hv, hlo, hist_tol, out):
    """Delayed state at time s while integrating step i.

    Returns 0 for a committed or history read, 1 when the provisional
    segment over (t_cur, t_next] was consulted, -1 when s precedes the
    history domain.
    """
    if s <= t0:
        theta = s - t0
        if theta < hlo - hist_tol:
            return -1
        if theta < hlo:
            theta = hlo
        _hist_into(theta, hkind, ha, hb, ht, hv, out)
        return 0
    if s <= t_cur:
        j = int((s - t0) / dt0)
        if j > i - 1:
            j = i - 1
        if j < 0:
            j = 0
        ta = times[j]
        seg = times[j + 1] - ta
        _hermite_into(X[j], D[j], X[j + 1], D[j + 1], (s - ta) / seg, seg, out)
        return 0
    seg = t_next - t_cur
    th = (s - t_cur) / seg
    if th > 1.0:
        th = 1.0
    _hermite_into(X[i], D[i], xp, dp, th, seg, out)
    return 1


@njit(cache=True)
def rk4_dde_kernel(times, X, D, E, F, q, tau_a, tau_m, tau_b,
                   hkind, ha, hb, ht, hv, hlo, max_iters, fp_tol, iters_out):
    """Classical four-stage step with within-step fixed-point iteration.

    X[0] must hold the initial state; X, D and iters_out are filled in
    place. tau_a/tau_m/tau_b hold each channel's delay evaluated at the
    step start, the step midpoint and the step end, shape (m, steps).
    """
    N = times.shape[0] - 1
    n = X.shape[1]
    m = F.shape[0]
    t0 = times[0]
    dt0 = times[1] - times[0]
    hist_tol = 1e-12 * (1.0 + abs(hlo))

    u = np.empty((m, n))
    u4 = np.empty((m, n))
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    xa = np.empty(n)
    xp = np.empty(n)
    dp = np.empty(n)
    xn = np.empty(n)

    # derivative at t0: delays are nonnegative, so these are history reads
    for k in range(m):
        r = _lookup(t0 - tau_a[k, 0], 0, times, X, D, t0, dt0, xp, dp, t0, t0,
                    hkind, ha, hb, ht, hv, hlo, hist_tol, u[k])
        if r < 0:
            return 1, 0
    _rhs_into(E, F, q, X[0], u, D[0])

    for i in range(N):
        t_cur = times[i]
        t_next = times[i + 1]
        dti = t_next - t_cur
        half = t_cur + 0.5 * dti
        for c in range(n):
            xp[c] = X[i, c] + dti * D[i, c]
            dp[c] = D[i, c]
        converged = False
        it_done = 0
        for it in range(max_iters):
            used = 0
            for k in range(m):
                r = _lookup(t_cur - tau_a[k, i], i, times, X, D, t0, dt0,
                            xp, dp, t_cur, t_next, hkind, ha, hb, ht, hv,
                            hlo, hist_tol, u[k])
                if r < 0:
                    return 1, i
                used |= r
            _rhs_into(E, F, q, X[i], u, k1)

            # stages two and three share the midpoint delayed arguments
            for k in range(m):
                r = _lookup(half - tau_m[k, i], i, times, X, D, t0, dt0,
                            xp, dp, t_cur, t_next, hkind, ha, hb, ht, hv,
                            hlo, hist_tol, u[k])
                if r < 0:
                    return 1, i
                used |= r
            for c in range(n):
                xa[c] = X[i, c] + 0.5 * dti * k1[c]
            _rhs_into(E, F, q, xa, u, k2)
            for c in range(n):
                xa[c] = X[i, c] + 0.5 * dti * k2[c]
            _rhs_into(E, F, q, xa, u, k3)

            for k in range(m):
                r = _lookup(t_next - tau_b[k, i], i, times, X, D, t0, dt0,
                            xp, dp, t_cur, t_next, hkind, ha, hb, ht, hv,
                            hlo, hist_tol, u4[k])
                if r < 0:
                    return 1, i
                used |= r
            for c in range(n):
                xa[c] = X[i, c] + dti * k3[c]
            _rhs_into(E, F, q, xa, u4, k4)

            diff = 0.0
            amax = 0.0
            for c in range(n):
                v = X[i, c] + dti / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
                d = abs(v - xp[c])
                if d > diff:
                    diff = d
                av = abs(v)
                if av > amax:
                    amax = av
                xn[c] = v
            for c in range(n):
                xp[c] = xn[c]
            # derivative at t_next reuses the stage-four delayed arguments
            _rhs_into(E, F, q, xn, u4, dp)
            it_done = it + 1
            if used == 0 or diff <= fp_tol * (1.0 + amax):
                converged = True
                break
        if not converged:
            return 2, i
        iters_out[i] = it_done
        for c in range(n):
            X[i + 1, c] = xp[c]
            D[i + 1, c] = dp[c]
    return 0, -1


@njit(cache=True)
def euler_dde_kernel(times, X, E, F, q, tau, hkind, ha, hb, ht, hv, hlo):
    """Explicit Euler companion scheme with linear-interpolation lookups."""
    N = times.shape[0] - 1
    n = X.shape[1]
    m = F.shape[0]
    t0 = times[0]
    dt0 = times[1] - times[0]
    hist_tol = 1e-12 * (1.0 + abs(hlo))
    u = np.empty((m, n))
    dx = np.empty(n)
    for i in range(N):
        t_cur = times[i]
        for k in range(m):
            s = t_cur - tau[k, i]
            if s <= t0:
                theta = s - t0
                if theta < hlo - hist_tol:
                    return 1, i
                if theta < hlo:
                    theta = hlo
                _hist_into(theta, hkind, ha, hb, ht, hv, u[k])
            else:
                j = int((s - t0) / dt0)
                if j > i - 1:
                    j = i - 1
                if j < 0:
                    j = 0
                ta = times[j]
                w = (s - ta) / (times[j + 1] - ta)
                for c in range(n):
                    u[k, c] = X[j, c] + w * (X[j + 1, c] - X[j, c])
        _rhs_into(E, F, q, X[i], u, dx)
        dti = times[i + 1] - t_cur
        for c in range(n):
            X[i + 1, c] = X[i, c] + dti * dx[c]
    return 0, -1


@njit(cache=True)
def sliding_max_kernel(ts, vals, window, ends_start, out):
    """Trailing-window maxima: out[e] = max vals[j] with ts[j] in [ts[e]-w, ts[e]].

    Monotonic-deque sweep, O(len). Window ends run over ts[ends_start:].
    """
    n = ts.shape[0]
    qidx = np.empty(n, np.int64)
    head = 0
    tail = 0
    for e in range(n):
        v = vals[e]
        while tail > head and vals[qidx[tail - 1]] <= v:
            tail -= 1
        qidx[tail] = e
        tail += 1
        lo = ts[e] - window
        edge = lo - 1e-12 * (1.0 + abs(lo))
        while ts[qidx[head]] < edge:
            head += 1
        if e >= ends_start:
            out[e - ends_start] = vals[qidx[head]]
