"""Pure-Python integration kernel (fallback for the compiled _speedups module).

The right-hand side is a small program over a list of polynomials that are
all evaluated at the position (state[0], state[1], state[2]). Each state
component gets one op:

    OP_POLY    a      direction * P[a]
    OP_NORM    a, b   sqrt(P[a]^2 + ... + P[b-1]^2)   (never signed)
    OP_RATIO   a, b   direction * P[a] / P[b]
    OP_LINCOMB a, b   direction * sum_k P[lc_poly[k]] * state[lc_state[k]], k in [a, a+b)

The stepper is the Dormand-Prince 5(4) pair with local extrapolation,
followed after each accepted step by Newton projection of the position
onto {h = 0} when a projection is configured.
"""
from __future__ import annotations

import math

OP_POLY, OP_NORM, OP_RATIO, OP_LINCOMB = 0, 1, 2, 3
MAX_TIME, SPEED_FLOOR, LEFT_BOX, STEP_FAILURE, MAX_STEPS, PROJECTION_FAILURE = range(6)

# Dormand-Prince coefficients
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40


class Evaluator:
    """Evaluates a flattened list of polynomials at a point."""

    def __init__(self, coef, ex, ey, ez, offsets):
        self.polys = []
        for k in range(len(offsets) - 1):
            self.polys.append([(coef[i], ex[i], ey[i], ez[i]) for i in range(offsets[k], offsets[k + 1])])
        self.mx = max(ex, default=0)
        self.my = max(ey, default=0)
        self.mz = max(ez, default=0)

    def __call__(self, x, y, z):
        px = [1.0] * (self.mx + 1)
        py = [1.0] * (self.my + 1)
        pz = [1.0] * (self.mz + 1)
        for i in range(1, self.mx + 1):
            px[i] = px[i - 1] * x
        for i in range(1, self.my + 1):
            py[i] = py[i - 1] * y
        for i in range(1, self.mz + 1):
            pz[i] = pz[i - 1] * z
        out = []
        for terms in self.polys:
            s = 0.0
            for c, a, b, d in terms:
                s += c * px[a] * py[b] * pz[d]
            out.append(s)
        return out


def _rhs(P, y, kinds, arg_a, arg_b, lc_poly, lc_state, direction):
    out = []
    for k in range(len(kinds)):
        kind, a, b = kinds[k], arg_a[k], arg_b[k]
        if kind == OP_POLY:
            out.append(direction * P[a])
        elif kind == OP_NORM:
            s = 0.0
            for i in range(a, b):
                s += P[i] * P[i]
            out.append(math.sqrt(s))
        elif kind == OP_RATIO:
            out.append(direction * P[a] / P[b])
        else:
            s = 0.0
            for i in range(a, a + b):
                s += P[lc_poly[i]] * y[lc_state[i]]
            out.append(direction * s)
    return out


def _project(ev, y, proj, tol, deg, maxit):
    """Newton projection of y[0:3] onto {P[proj[0]] = 0}; returns success flag."""
    # at least one Newton step is always taken: near a self-crossing of the
    # surface a residual that passes the test can still sit far from it
    ih, gx, gy, gz = proj
    for it in range(maxit + 1):
        P = ev(y[0], y[1], y[2])
        hv = P[ih]
        r = math.sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])
        ok = abs(hv) <= tol * (1.0 + r ** deg)
        if ok and it > 0:
            return True
        if it == maxit:
            return ok
        g0, g1, g2 = P[gx], P[gy], P[gz]
        gg = g0 * g0 + g1 * g1 + g2 * g2
        if gg == 0.0 or not math.isfinite(hv):
            return ok
        s = hv / gg
        y[0] -= s * g0
        y[1] -= s * g1
        y[2] -= s * g2
    return False


def integrate(coef, ex, ey, ez, offsets, kinds, arg_a, arg_b, lc_poly, lc_state,
              y0, t0, t_end, direction, rtol, atol, h_init, h_max, max_steps,
              stop_speed, proj, proj_tol, proj_deg, proj_maxit, box_lo, box_hi, stops):
    """Adaptive integration; returns (times, states, status, accepted_steps)."""
    ev = Evaluator(coef, ex, ey, ez, offsets)
    n = len(kinds)
    y = [float(v) for v in y0]
    t = float(t0)
    use_proj = proj[0] >= 0
    ts, ys = [], []
    if use_proj and not _project(ev, y, proj, proj_tol, proj_deg, proj_maxit):
        return [t], [y], PROJECTION_FAILURE, 0
    P = ev(y[0], y[1], y[2])
    ts.append(t)
    ys.append(list(y))
    speed = math.sqrt(P[0] * P[0] + P[1] * P[1] + P[2] * P[2])
    if speed < stop_speed:
        return ts, ys, SPEED_FLOOR, 0
    if t >= t_end:
        return ts, ys, MAX_TIME, 0
    stops = [s for s in stops if s > t]
    si = 0

    def args(v):
        return (v, kinds, arg_a, arg_b, lc_poly, lc_state, direction)

    k1 = _rhs(P, *args(y))
    if h_init > 0:
        h = h_init
    else:
        # squares as products: libm pow(q, 2) is not always correctly rounded,
        # and the compiled kernel must reproduce these sums bit for bit
        d0 = d1 = 0.0
        for i in range(n):
            q = y[i] / (atol + rtol * abs(y[i]))
            d0 += q * q
        for i in range(n):
            q = k1[i] / (atol + rtol * abs(y[i]))
            d1 += q * q
        d0 = math.sqrt(d0 / n)
        d1 = math.sqrt(d1 / n)
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, h_max)
    nsteps = 0
    while True:
        if nsteps >= max_steps:
            return ts, ys, MAX_STEPS, nsteps
        tiny = 1e-14 * max(1.0, abs(t))
        while si < len(stops) and stops[si] - t <= tiny:
            si += 1
        if t_end - t <= tiny:
            return ts, ys, MAX_TIME, nsteps
        target = t_end
        if si < len(stops) and stops[si] < target:
            target = stops[si]
        hh = h
        clipped = False
        if hh >= target - t:
            hh = target - t
            clipped = True
        if hh <= tiny:
            return ts, ys, STEP_FAILURE, nsteps
        y2 = [y[i] + hh * A21 * k1[i] for i in range(n)]
        k2 = _rhs(ev(y2[0], y2[1], y2[2]), *args(y2))
        y3 = [y[i] + hh * (A31 * k1[i] + A32 * k2[i]) for i in range(n)]
        k3 = _rhs(ev(y3[0], y3[1], y3[2]), *args(y3))
        y4 = [y[i] + hh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(n)]
        k4 = _rhs(ev(y4[0], y4[1], y4[2]), *args(y4))
        y5 = [y[i] + hh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]) for i in range(n)]
        k5 = _rhs(ev(y5[0], y5[1], y5[2]), *args(y5))
        y6 = [y[i] + hh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
              for i in range(n)]
        k6 = _rhs(ev(y6[0], y6[1], y6[2]), *args(y6))
        yn = [y[i] + hh * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
              for i in range(n)]
        k7 = _rhs(ev(yn[0], yn[1], yn[2]), *args(yn))
        err = 0.0
        for i in range(n):
            e = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            q = e / sc
            err += q * q
        err = math.sqrt(err / n)
        if not math.isfinite(err):
            h = hh * 0.2
            continue
        if err <= 1.0:
            t = target if clipped else t + hh
            if use_proj and not _project(ev, yn, proj, proj_tol, proj_deg, proj_maxit):
                ts.append(t)
                ys.append(yn)
                return ts, ys, PROJECTION_FAILURE, nsteps + 1
            y = yn
            nsteps += 1
            ts.append(t)
            ys.append(list(y))
            if si < len(stops) and t >= stops[si]:
                si += 1
            P = ev(y[0], y[1], y[2])
            if box_lo is not None:
                for i in range(3):
                    if y[i] < box_lo[i] or y[i] > box_hi[i]:
                        return ts, ys, LEFT_BOX, nsteps
            speed = math.sqrt(P[0] * P[0] + P[1] * P[1] + P[2] * P[2])
            if speed < stop_speed:
                return ts, ys, SPEED_FLOOR, nsteps
            if t >= t_end:
                return ts, ys, MAX_TIME, nsteps
            k1 = _rhs(P, *args(y))
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not clipped:
                h = hh * fac
            h = min(h, h_max)
        else:
            h = hh * max(0.2, 0.9 * err ** -0.2)
