"""Compiled evaluation kernels.

Signals and density fields are encoded as flat float64 arrays so that the same
formula code serves both the Python API (``TimeSignal.evaluate``,
``rho_eval``...) and the fixed-step integration loops.
"""

import math

import numpy as np
from numba import njit

SIG_WIDTH = 40
MAX_TERMS = 12
PAR_WIDTH = 40
MAX_OBSTACLES = 9
N_SIGS = 3

# signal kinds
S_ZERO = 0
S_CONSTANT = 1
S_SINUSOID_SUM = 2
S_ATAN_CHATTER = 3
S_EXP_DECAY_MIX = 4
S_EXP_PLUS_SIN = 5
S_PIECEWISE_LINEAR = 6
S_ATAN_SQUARE_MIX = 7

# density kinds
D_CONSTANT = 0
D_FUNNEL = 1
D_SIGN_SHIFT = 2
D_LOG_RATIO = 3
D_LOG_TUBE = 4
D_LOG_SYM = 5
D_LINEAR = 6
D_LINEAR_TRACK = 7
D_LOG_SURFACE = 8
D_ANNULUS_LOG = 9
D_OBSTACLE_LOG = 10
D_NORM_LOG = 11
D_EXP_BARRIER = 12
D_DISK_LOG = 13

# dynamics families
F_SCALAR = 0
F_PLANAR = 1
F_PENDULUM = 2
F_ADAPTIVE = 3

# stop codes
STOP_COMPLETED = 0
STOP_BLOWUP = 1
STOP_FORBIDDEN = 2
STOP_SINGULAR_APPROACH = 3
STOP_CONTROLLER_FAULT = 4

HALF_PI = 0.5 * math.pi


@njit(cache=True)
def signal_value(sig, t):
    kind = int(sig[0])
    if kind == S_ZERO:
        return 0.0
    if kind == S_CONSTANT:
        return sig[1]
    if kind == S_SINUSOID_SUM:
        v = sig[1]
        m = int(sig[2])
        for i in range(m):
            v += sig[3 + 3 * i] * math.sin(sig[4 + 3 * i] * t + sig[5 + 3 * i])
        return v
    if kind == S_ATAN_CHATTER:
        return sig[1] * math.atan(sig[2] * math.sin(sig[3] * t))
    if kind == S_EXP_DECAY_MIX:
        # a*exp(-lam*t)*(c + sin(omega*t + phase)) + offset
        return sig[1] * math.exp(-sig[2] * t) * (sig[3] + math.sin(sig[5] * t + sig[6])) + sig[4]
    if kind == S_EXP_PLUS_SIN:
        # a*exp(-lam*t) + b*sin(omega*t + phase) + offset
        return sig[1] * math.exp(-sig[2] * t) + sig[3] * math.sin(sig[4] * t + sig[6]) + sig[5]
    if kind == S_PIECEWISE_LINEAR:
        m = int(sig[1])
        for i in range(m):
            if t <= sig[2 + 3 * i] or i == m - 1:
                return sig[3 + 3 * i] * t + sig[4 + 3 * i]
        return 0.0
    if kind == S_ATAN_SQUARE_MIX:
        return sig[1] + math.sin(t) + math.atan(sig[2] * math.sin(sig[3] * t))
    return math.nan


@njit(cache=True)
def _sign(v):
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def _qsum(a, b, q):
    return abs(a) ** q + abs(b) ** q


@njit(cache=True)
def rho_value(kind, par, sigs, x, t):
    """Return ``(rho, ok)``; ``ok`` is False outside the admissible domain."""
    if kind == D_CONSTANT:
        return par[0], True
    if kind == D_FUNNEL:
        gap = signal_value(sigs[0], t) - abs(x[0])
        if gap <= 0.0:
            return math.nan, False
        return par[0] / gap, True
    if kind == D_SIGN_SHIFT:
        z = signal_value(sigs[0], t)
        return par[0] * (x[0] - z) * _sign(x[0]), True
    if kind == D_LOG_RATIO or kind == D_LOG_TUBE:
        num = signal_value(sigs[0], t) - x[0]
        den = x[0] - signal_value(sigs[1], t)
        if num <= 0.0 or den <= 0.0:
            return math.nan, False
        r = math.log(num) - math.log(den)
        if kind == D_LOG_RATIO:
            return -par[0] * r, True
        return par[0] * r, True
    if kind == D_LOG_SYM:
        b = signal_value(sigs[0], t)
        num = b - x[0]
        den = b + x[0]
        if num <= 0.0 or den <= 0.0:
            return math.nan, False
        return par[0] * (math.log(num) - math.log(den)), True
    if kind == D_LINEAR:
        return -par[0] * x[0], True
    if kind == D_LINEAR_TRACK:
        return -par[0] * (x[0] - signal_value(sigs[0], t)), True
    if kind == D_LOG_SURFACE:
        arg = x[0] - signal_value(sigs[0], t)
        if arg <= 0.0:
            return math.nan, False
        return -par[0] * math.log(arg), True
    if kind == D_ANNULUS_LOG:
        s = _qsum(x[0], x[1], par[0])
        num = signal_value(sigs[0], t) - s
        den = s - signal_value(sigs[1], t)
        if num <= 0.0 or den <= 0.0:
            return math.nan, False
        return math.log(num) - math.log(den), True
    if kind == D_OBSTACLE_LOG:
        m = int(par[0])
        total = 0.0
        for i in range(m):
            j = 1 + 4 * i
            a = _qsum(x[0] - par[j], x[1] - par[j + 1], par[j + 2]) - par[j + 3]
            if a <= 0.0:
                return math.nan, False
            total += math.log(a)
        return total, True
    if kind == D_NORM_LOG:
        a = _qsum(x[0], x[1], par[1]) - 1.0
        if a <= 0.0:
            return math.nan, False
        return par[0] * math.log(a), True
    if kind == D_EXP_BARRIER:
        a = x[0] * x[0] + x[1] * x[1] - 1.0
        if a <= 0.0:
            return math.nan, False
        expo = a ** (-par[1])
        if expo > 709.0:
            return par[0] * math.inf, True
        return par[0] * math.exp(expo), True
    if kind == D_DISK_LOG:
        a = x[0] * x[0] + x[1] * x[1] - 1.0
        if a <= 0.0:
            return math.nan, False
        return par[0] * math.log(a), True
    return math.nan, False


@njit(cache=True)
def _segment_distance(u, v, c):
    # distance from (u, v) to the segment (c, 0)-(0, c)
    dx = -c
    dy = c
    s = ((u - c) * dx + v * dy) / (dx * dx + dy * dy)
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    px = c + s * dx
    py = s * dy
    return math.hypot(u - px, v - py)


@njit(cache=True)
def _curve_point_distance(u, v, radius, p, th):
    px = radius * abs(math.cos(th)) ** p
    py = radius * abs(math.sin(th)) ** p
    return math.hypot(u - px, v - py)


@njit(cache=True)
def qcurve_distance(u, v, q, c):
    """Euclidean distance from ``(|u|, |v|)`` to the curve ``|x1|^q + |x2|^q = c``."""
    u = abs(u)
    v = abs(v)
    if c <= 0.0:
        return math.hypot(u, v)
    if q == 2.0:
        return abs(math.hypot(u, v) - math.sqrt(c))
    if q == 1.0:
        return _segment_distance(u, v, c)
    radius = c ** (1.0 / q)
    p = 2.0 / q
    n = 512
    step = HALF_PI / n
    best = math.inf
    ibest = 0
    for i in range(n + 1):
        d = _curve_point_distance(u, v, radius, p, i * step)
        if d < best:
            best = d
            ibest = i
    lo = max(ibest - 1, 0) * step
    hi = min(ibest + 1, n) * step
    g = 0.5 * (math.sqrt(5.0) - 1.0)
    a = hi - g * (hi - lo)
    b = lo + g * (hi - lo)
    fa = _curve_point_distance(u, v, radius, p, a)
    fb = _curve_point_distance(u, v, radius, p, b)
    for _ in range(60):
        if fa < fb:
            hi = b
            b = a
            fb = fa
            a = hi - g * (hi - lo)
            fa = _curve_point_distance(u, v, radius, p, a)
        else:
            lo = a
            a = b
            fa = fb
            b = lo + g * (hi - lo)
            fb = _curve_point_distance(u, v, radius, p, b)
    return min(best, fa, fb)


@njit(cache=True)
def _qcurve_distance_capped(u, v, q, c, cap):
    # |x1|^q + |x2|^q = c lies between the radii at the axes and at the diagonal,
    # so the radial gap is a lower bound; the exact search runs only below ``cap``
    if c > 0.0 and q != 1.0 and q != 2.0:
        r_axis = c ** (1.0 / q)
        r_diag = math.sqrt(2.0) * (0.5 * c) ** (1.0 / q)
        r = math.hypot(u, v)
        lb = max(min(r_axis, r_diag) - r, r - max(r_axis, r_diag), 0.0)
        if lb >= cap:
            return lb
    return qcurve_distance(u, v, q, c)


@njit(cache=True)
def _singular_distance(kind, par, sigs, x, t, cap):
    if kind == D_CONSTANT or kind == D_SIGN_SHIFT or kind == D_LINEAR or kind == D_LINEAR_TRACK:
        return math.inf
    if kind == D_FUNNEL or kind == D_LOG_SYM:
        return max(signal_value(sigs[0], t) - abs(x[0]), 0.0)
    if kind == D_LOG_RATIO or kind == D_LOG_TUBE:
        hi = signal_value(sigs[0], t) - x[0]
        lo = x[0] - signal_value(sigs[1], t)
        return max(min(hi, lo), 0.0)
    if kind == D_LOG_SURFACE:
        return max(x[0] - signal_value(sigs[0], t), 0.0)
    if kind == D_ANNULUS_LOG:
        q = par[0]
        s = _qsum(x[0], x[1], q)
        hi = signal_value(sigs[0], t)
        lo = signal_value(sigs[1], t)
        if s >= hi or s <= lo:
            return 0.0
        return min(_qcurve_distance_capped(x[0], x[1], q, hi, cap),
                   _qcurve_distance_capped(x[0], x[1], q, lo, cap))
    if kind == D_OBSTACLE_LOG:
        m = int(par[0])
        best = math.inf
        for i in range(m):
            j = 1 + 4 * i
            du = x[0] - par[j]
            dv = x[1] - par[j + 1]
            if _qsum(du, dv, par[j + 2]) - par[j + 3] <= 0.0:
                return 0.0
            d = _qcurve_distance_capped(du, dv, par[j + 2], par[j + 3], cap)
            if d < best:
                best = d
        return best
    if kind == D_NORM_LOG:
        if _qsum(x[0], x[1], par[1]) <= 1.0:
            return 0.0
        return _qcurve_distance_capped(x[0], x[1], par[1], 1.0, cap)
    if kind == D_EXP_BARRIER or kind == D_DISK_LOG:
        return max(math.hypot(x[0], x[1]) - 1.0, 0.0)
    return 0.0


@njit(cache=True)
def singular_distance_value(kind, par, sigs, x, t):
    """Distance to the complement of the admissible domain (0 outside it, inf if empty)."""
    return _singular_distance(kind, par, sigs, x, t, math.inf)


@njit(cache=True)
def rho_many(kind, par, sigs, xs, ts):
    n = xs.shape[0]
    out = np.empty(n)
    for i in range(n):
        v, ok = rho_value(kind, par, sigs, xs[i], ts[i])
        out[i] = v if ok else math.nan
    return out


@njit(cache=True)
def singular_distance_many(kind, par, sigs, xs, ts, cap=math.inf):
    n = xs.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = _singular_distance(kind, par, sigs, xs[i], ts[i], cap)
    return out


@njit(cache=True)
def signal_many(sig, ts):
    out = np.empty(ts.shape[0])
    for i in range(ts.shape[0]):
        out[i] = signal_value(sig, ts[i])
    return out


@njit(cache=True)
def _clamp(v, m):
    if v > m:
        return m
    if v < -m:
        return -m
    return v


@njit(cache=True)
def _rhs(family, x, t, out, dk, dpar, dsig, rho2_mode, dist, extra, clamp,
         n, A, Bu, Bd, C, F, bvec, tau, beta, gamma, inv_k, ybuf, w):
    """Evaluate the right-hand side into ``out``; return ``(ok, rho, u)``."""
    if family == F_ADAPTIVE:
        m = n - 1
        y = 0.0
        for i in range(n):
            y += C[i] * x[i]
        ybuf[0] = y
        rho, ok = rho_value(dk, dpar, dsig, ybuf, t)
        if not ok:
            return False, math.nan, math.nan
        rho = _clamp(rho, clamp)
        for i in range(m):
            w[i] = x[n + i]
            w[m + i] = x[n + m + i]
        w[2 * m] = y
        c0 = n + 2 * m
        u = tau * rho
        for i in range(2 * m + 1):
            u += x[c0 + i] * w[i]
        d = signal_value(dist[0], t)
        up = u * inv_k
        for i in range(n):
            acc = Bu[i] * up + Bd[i] * d
            for j in range(n):
                acc += A[i, j] * x[j]
            out[i] = acc
        for i in range(m):
            ay = bvec[i] * y
            au = bvec[i] * u
            for j in range(m):
                ay += F[i, j] * x[n + j]
                au += F[i, j] * x[n + m + j]
            out[n + i] = ay
            out[n + m + i] = au
        s = _sign(rho * y)
        ay = abs(y)
        for i in range(2 * m + 1):
            out[c0 + i] = -beta * y * w[i] - gamma * x[c0 + i] * ay * s
        return True, rho, u

    rho, ok = rho_value(dk, dpar, dsig, x, t)
    if not ok:
        return False, math.nan, math.nan
    rho = _clamp(rho, clamp)
    if family == F_SCALAR:
        out[0] = -rho * x[0] + signal_value(dist[0], t)
    elif family == F_PLANAR:
        rho2 = rho if rho2_mode == 0 else 0.0
        out[0] = x[1] - rho * x[0] + signal_value(dist[0], t)
        out[1] = -x[0] - rho2 * x[1] + signal_value(dist[1], t)
    else:
        out[0] = x[1] + signal_value(dist[0], t)
        out[1] = -extra[0] * math.sin(x[0]) - rho * x[1] + signal_value(dist[1], t)
    return True, rho, math.nan


@njit(cache=True)
def _all_finite(v):
    for i in range(v.shape[0]):
        if not math.isfinite(v[i]):
            return False
    return True


@njit(cache=True)
def _barrier_distance(family, x, dk, dpar, dsig, t, C, n, ybuf, eps):
    if family == F_ADAPTIVE:
        y = 0.0
        for i in range(n):
            y += C[i] * x[i]
        ybuf[0] = y
        return _singular_distance(dk, dpar, dsig, ybuf, t, eps)
    return _singular_distance(dk, dpar, dsig, x, t, eps)


@njit(cache=True)
def integrate_kernel(family, x0, t0, h, nsteps, stride, use_euler, clamp, eps_sing,
                     dk, dpar, dsig, rho2_mode, dist, extra,
                     n, A, Bu, Bd, C, F, bvec, tau, beta, gamma, inv_k):
    """Fixed-step integration of one preset family.

    Returns ``(states, u, rho, n_valid, stop_code, stop_time)``. Sample ``i`` is
    at ``t0 + i*stride*h``.
    """
    dim = x0.shape[0]
    nrec = nsteps // stride + 1
    states = np.empty((nrec, dim))
    us = np.full(nrec, math.nan)
    rhos = np.full(nrec, math.nan)
    x = x0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    xn = np.empty(dim)
    ybuf = np.empty(1)
    w = np.empty(max(2 * n - 1, 1))
    fault = STOP_CONTROLLER_FAULT if family == F_ADAPTIVE else STOP_FORBIDDEN

    ok, rho, u = _rhs(family, x, t0, k1, dk, dpar, dsig, rho2_mode, dist, extra, clamp,
                      n, A, Bu, Bd, C, F, bvec, tau, beta, gamma, inv_k, ybuf, w)
    states[0] = x
    rhos[0] = rho
    us[0] = u
    if not ok:
        return states, us, rhos, 1, fault, t0
    nvalid = 1
    stop = STOP_COMPLETED
    stop_time = t0 + nsteps * h
    for step in range(nsteps):
        t = t0 + step * h
        if use_euler:
            for i in range(dim):
                xn[i] = x[i] + h * k1[i]
        else:
            hh = 0.5 * h
            for i in range(dim):
                tmp[i] = x[i] + hh * k1[i]
            ok, _, _ = _rhs(family, tmp, t + hh, k2, dk, dpar, dsig, rho2_mode, dist, extra, clamp,
                            n, A, Bu, Bd, C, F, bvec, tau, beta, gamma, inv_k, ybuf, w)
            if not ok:
                stop = fault
                stop_time = t
                break
            for i in range(dim):
                tmp[i] = x[i] + hh * k2[i]
            ok, _, _ = _rhs(family, tmp, t + hh, k3, dk, dpar, dsig, rho2_mode, dist, extra, clamp,
                            n, A, Bu, Bd, C, F, bvec, tau, beta, gamma, inv_k, ybuf, w)
            if not ok:
                stop = fault
                stop_time = t
                break
            for i in range(dim):
                tmp[i] = x[i] + h * k3[i]
            ok, _, _ = _rhs(family, tmp, t + h, k4, dk, dpar, dsig, rho2_mode, dist, extra, clamp,
                            n, A, Bu, Bd, C, F, bvec, tau, beta, gamma, inv_k, ybuf, w)
            if not ok:
                stop = fault
                stop_time = t
                break
            for i in range(dim):
                xn[i] = x[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
        tn = t0 + (step + 1) * h
        if not _all_finite(xn):
            stop = STOP_BLOWUP
            stop_time = tn
            break
        ok, rho, u = _rhs(family, xn, tn, k1, dk, dpar, dsig, rho2_mode, dist, extra, clamp,
                          n, A, Bu, Bd, C, F, bvec, tau, beta, gamma, inv_k, ybuf, w)
        if not ok:
            stop = fault
            stop_time = tn
            break
        if not _all_finite(k1):
            stop = STOP_BLOWUP
            stop_time = tn
            break
        if eps_sing > 0.0:
            if _barrier_distance(family, xn, dk, dpar, dsig, tn, C, n, ybuf, eps_sing) < eps_sing:
                stop = STOP_SINGULAR_APPROACH
                stop_time = tn
                break
        for i in range(dim):
            x[i] = xn[i]
        if (step + 1) % stride == 0:
            states[nvalid] = x
            rhos[nvalid] = rho
            us[nvalid] = u
            nvalid += 1
    return states[:nvalid].copy(), us[:nvalid].copy(), rhos[:nvalid].copy(), nvalid, stop, stop_time
