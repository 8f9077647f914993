# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernel.

Same program format, stepper and operation order as _kernel_py, so the two
paths agree to rounding (in practice bit for bit).
"""
from libc.math cimport sqrt, pow, fabs, isfinite
from libc.stdlib cimport malloc, free

cdef enum:
    MAXN = 16
    MAXP = 64

cdef enum:
    OP_POLY = 0
    OP_NORM = 1
    OP_RATIO = 2
    OP_LINCOMB = 3

cdef enum:
    MAX_TIME = 0
    SPEED_FLOOR = 1
    LEFT_BOX = 2
    STEP_FAILURE = 3
    MAX_STEPS = 4
    PROJECTION_FAILURE = 5

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef struct Prog:
    int npoly
    int nterm
    double *coef
    int *ex
    int *ey
    int *ez
    int *offsets
    int n
    int *kinds
    int *arg_a
    int *arg_b
    int *lc_poly
    int *lc_state
    double direction
    int mx
    int my
    int mz


cdef void eval_polys(Prog *pr, double x, double y, double z, double *out) nogil:
    cdef double px[MAXP]
    cdef double py[MAXP]
    cdef double pz[MAXP]
    cdef int i, k
    cdef double s
    px[0] = 1.0
    py[0] = 1.0
    pz[0] = 1.0
    for i in range(1, pr.mx + 1):
        px[i] = px[i - 1] * x
    for i in range(1, pr.my + 1):
        py[i] = py[i - 1] * y
    for i in range(1, pr.mz + 1):
        pz[i] = pz[i - 1] * z
    for k in range(pr.npoly):
        s = 0.0
        for i in range(pr.offsets[k], pr.offsets[k + 1]):
            s += pr.coef[i] * px[pr.ex[i]] * py[pr.ey[i]] * pz[pr.ez[i]]
        out[k] = s


cdef void rhs(Prog *pr, double *P, double *y, double *out) nogil:
    cdef int k, i, a, b
    cdef double s
    for k in range(pr.n):
        a = pr.arg_a[k]
        b = pr.arg_b[k]
        if pr.kinds[k] == OP_POLY:
            out[k] = pr.direction * P[a]
        elif pr.kinds[k] == OP_NORM:
            s = 0.0
            for i in range(a, b):
                s += P[i] * P[i]
            out[k] = sqrt(s)
        elif pr.kinds[k] == OP_RATIO:
            out[k] = pr.direction * P[a] / P[b]
        else:
            s = 0.0
            for i in range(a, a + b):
                s += P[pr.lc_poly[i]] * y[pr.lc_state[i]]
            out[k] = pr.direction * s


cdef bint project(Prog *pr, double *y, int ih, int gx, int gy, int gz,
                  double tol, double deg, int maxit, double *P) nogil:
    cdef int it
    cdef double hv, r, g0, g1, g2, gg, s
    cdef bint ok
    for it in range(maxit + 1):
        eval_polys(pr, y[0], y[1], y[2], P)
        hv = P[ih]
        r = sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])
        ok = fabs(hv) <= tol * (1.0 + pow(r, deg))
        if ok and it > 0:
            return True
        if it == maxit:
            return ok
        g0 = P[gx]
        g1 = P[gy]
        g2 = P[gz]
        gg = g0 * g0 + g1 * g1 + g2 * g2
        if gg == 0.0 or not isfinite(hv):
            return ok
        s = hv / gg
        y[0] -= s * g0
        y[1] -= s * g1
        y[2] -= s * g2
    return False


cdef int *int_array(seq) except NULL:
    cdef int n = len(seq)
    cdef int *a = <int *> malloc((n + 1) * sizeof(int))
    if a == NULL:
        raise MemoryError()
    for i in range(n):
        a[i] = seq[i]
    return a


def integrate(coef, ex, ey, ez, offsets, kinds, arg_a, arg_b, lc_poly, lc_state,
              y0, double t0, double t_end, double direction, double rtol, double atol,
              double h_init, double h_max, long max_steps, double stop_speed,
              proj, double proj_tol, int proj_deg, int proj_maxit, box_lo, box_hi, stops):
    """Adaptive integration; returns (times, states, status, accepted_steps)."""
    cdef Prog pr
    cdef int n = len(kinds)
    cdef int i, k
    if n > MAXN or len(offsets) - 1 > MAXP:
        raise ValueError("program too large for the compiled kernel")
    pr.npoly = len(offsets) - 1
    pr.nterm = len(coef)
    pr.n = n
    pr.direction = direction
    pr.mx = max(ex, default=0)
    pr.my = max(ey, default=0)
    pr.mz = max(ez, default=0)
    if pr.mx >= MAXP or pr.my >= MAXP or pr.mz >= MAXP:
        raise ValueError("exponent too large for the compiled kernel")
    pr.coef = <double *> malloc((pr.nterm + 1) * sizeof(double))
    for i in range(pr.nterm):
        pr.coef[i] = coef[i]
    pr.ex = int_array(ex)
    pr.ey = int_array(ey)
    pr.ez = int_array(ez)
    pr.offsets = int_array(offsets)
    pr.kinds = int_array(kinds)
    pr.arg_a = int_array(arg_a)
    pr.arg_b = int_array(arg_b)
    pr.lc_poly = int_array(lc_poly)
    pr.lc_state = int_array(lc_state)
    try:
        return _run(&pr, y0, t0, t_end, rtol, atol, h_init, h_max, max_steps, stop_speed,
                    proj, proj_tol, proj_deg, proj_maxit, box_lo, box_hi, stops)
    finally:
        free(pr.coef)
        free(pr.ex)
        free(pr.ey)
        free(pr.ez)
        free(pr.offsets)
        free(pr.kinds)
        free(pr.arg_a)
        free(pr.arg_b)
        free(pr.lc_poly)
        free(pr.lc_state)


cdef list _state(double *y, int n):
    return [y[i] for i in range(n)]


cdef _run(Prog *pr, y0, double t0, double t_end, double rtol, double atol,
          double h_init, double h_max, long max_steps, double stop_speed,
          proj, double proj_tol, int proj_deg, int proj_maxit, box_lo, box_hi, stops_in):
    cdef int n = pr.n
    cdef double y[MAXN]
    cdef double yn[MAXN]
    cdef double ys_[MAXN]
    cdef double k1[MAXN]
    cdef double k2[MAXN]
    cdef double k3[MAXN]
    cdef double k4[MAXN]
    cdef double k5[MAXN]
    cdef double k6[MAXN]
    cdef double k7[MAXN]
    cdef double P[MAXP]
    cdef double lo[3]
    cdef double hi[3]
    cdef int i, si = 0, nstops
    cdef long nsteps = 0
    cdef double t = t0, h, hh, target, tiny, err, e, sc, q, speed, d0, d1, fac
    cdef bint clipped, use_proj = proj[0] >= 0, use_box = box_lo is not None
    cdef int ih = proj[0], gx = proj[1], gy = proj[2], gz = proj[3]
    cdef double pdeg = proj_deg
    ts = []
    ys = []
    for i in range(n):
        y[i] = y0[i]
    if use_box:
        for i in range(3):
            lo[i] = box_lo[i]
            hi[i] = box_hi[i]
    if use_proj and not project(pr, y, ih, gx, gy, gz, proj_tol, pdeg, proj_maxit, P):
        return [t], [_state(y, n)], PROJECTION_FAILURE, 0
    eval_polys(pr, y[0], y[1], y[2], P)
    ts.append(t)
    ys.append(_state(y, n))
    speed = sqrt(P[0] * P[0] + P[1] * P[1] + P[2] * P[2])
    if speed < stop_speed:
        return ts, ys, SPEED_FLOOR, 0
    if t >= t_end:
        return ts, ys, MAX_TIME, 0
    stops = [s for s in stops_in if s > t]
    nstops = len(stops)
    cdef double *st = <double *> malloc((nstops + 1) * sizeof(double))
    for i in range(nstops):
        st[i] = stops[i]
    try:
        rhs(pr, P, y, k1)
        if h_init > 0:
            h = h_init
        else:
            d0 = 0.0
            d1 = 0.0
            for i in range(n):
                q = y[i] / (atol + rtol * fabs(y[i]))
                d0 += q * q
            for i in range(n):
                q = k1[i] / (atol + rtol * fabs(y[i]))
                d1 += q * q
            d0 = sqrt(d0 / n)
            d1 = sqrt(d1 / n)
            h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        h = min(h, h_max)
        while True:
            if nsteps >= max_steps:
                return ts, ys, MAX_STEPS, nsteps
            tiny = 1e-14 * max(1.0, fabs(t))
            while si < nstops and st[si] - t <= tiny:
                si += 1
            if t_end - t <= tiny:
                return ts, ys, MAX_TIME, nsteps
            target = t_end
            if si < nstops and st[si] < target:
                target = st[si]
            hh = h
            clipped = False
            if hh >= target - t:
                hh = target - t
                clipped = True
            if hh <= tiny:
                return ts, ys, STEP_FAILURE, nsteps
            for i in range(n):
                ys_[i] = y[i] + hh * A21 * k1[i]
            eval_polys(pr, ys_[0], ys_[1], ys_[2], P)
            rhs(pr, P, ys_, k2)
            for i in range(n):
                ys_[i] = y[i] + hh * (A31 * k1[i] + A32 * k2[i])
            eval_polys(pr, ys_[0], ys_[1], ys_[2], P)
            rhs(pr, P, ys_, k3)
            for i in range(n):
                ys_[i] = y[i] + hh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            eval_polys(pr, ys_[0], ys_[1], ys_[2], P)
            rhs(pr, P, ys_, k4)
            for i in range(n):
                ys_[i] = y[i] + hh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            eval_polys(pr, ys_[0], ys_[1], ys_[2], P)
            rhs(pr, P, ys_, k5)
            for i in range(n):
                ys_[i] = y[i] + hh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            eval_polys(pr, ys_[0], ys_[1], ys_[2], P)
            rhs(pr, P, ys_, k6)
            for i in range(n):
                yn[i] = y[i] + hh * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            eval_polys(pr, yn[0], yn[1], yn[2], P)
            rhs(pr, P, yn, k7)
            err = 0.0
            for i in range(n):
                e = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                sc = atol + rtol * max(fabs(y[i]), fabs(yn[i]))
                q = e / sc
                err += q * q
            err = sqrt(err / n)
            if not isfinite(err):
                h = hh * 0.2
                continue
            if err <= 1.0:
                t = target if clipped else t + hh
                if use_proj and not project(pr, yn, ih, gx, gy, gz, proj_tol, pdeg, proj_maxit, P):
                    ts.append(t)
                    ys.append(_state(yn, n))
                    return ts, ys, PROJECTION_FAILURE, nsteps + 1
                for i in range(n):
                    y[i] = yn[i]
                nsteps += 1
                ts.append(t)
                ys.append(_state(y, n))
                if si < nstops and t >= st[si]:
                    si += 1
                eval_polys(pr, y[0], y[1], y[2], P)
                if use_box:
                    for i in range(3):
                        if y[i] < lo[i] or y[i] > hi[i]:
                            return ts, ys, LEFT_BOX, nsteps
                speed = sqrt(P[0] * P[0] + P[1] * P[1] + P[2] * P[2])
                if speed < stop_speed:
                    return ts, ys, SPEED_FLOOR, nsteps
                if t >= t_end:
                    return ts, ys, MAX_TIME, nsteps
                rhs(pr, P, y, k1)
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
                if not clipped:
                    h = hh * fac
                h = min(h, h_max)
            else:
                h = hh * max(0.2, 0.9 * pow(err, -0.2))
    finally:
        free(st)
