"""Directional charts of real blow-ups and transform bookkeeping.

A chart with center variables C (|C| = 2 or 3), direction j in C and sign
eps maps new coordinates to old ones by

    x_i -> x_i * x_j   for i in C, i != j
    x_j -> eps * x_j
    x_i -> x_i         for i not in C

so the exceptional divisor is {x_j = 0}. Vector fields pull back to
Laurent fields with poles only along x_j.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .martinet import Distribution, NoAdmissibleSamplesError, characteristic_field, sample_rng
from .poly import NotDivisibleError, Poly, divide_exact
from .surface import SurfaceDivergence, newton_project
from .vfield import VecField, divergence_euclidean, lie_derivative

__all__ = [
    "ChartMap",
    "TransformResult",
    "TransformedCharacteristic",
    "CompatReport",
    "DegenerateChartError",
    "NoExceptionalFactorError",
    "chart_map",
    "identity_chart",
    "total_transform",
    "strict_transform",
    "pullback_vecfield",
    "pushforward_at",
    "chart_jacobian",
    "volume_factor",
    "transformed_characteristic",
    "verify_div_compat",
]


class DegenerateChartError(ValueError):
    pass


class NoExceptionalFactorError(ValueError):
    """The transformed function does not vanish on the exceptional divisor."""


@dataclass(frozen=True)
class ChartMap:
    center: tuple
    j: int | None
    sign: int
    images: tuple
    beta: int
    alpha: int | None = None

    @property
    def exceptional_var(self):
        return self.j

    @property
    def is_identity(self) -> bool:
        return self.j is None

    def to_dict(self) -> dict:
        return {"center": list(self.center), "j": self.j, "sign": "+" if self.sign > 0 else "-",
                "images": [str(p) for p in self.images]}

    def apply(self, p):
        """Old coordinates of the point with chart coordinates p."""
        return tuple(img.evaluate(p) for img in self.images)


def chart_map(center, j: int, sign: int = 1) -> ChartMap:
    center = tuple(sorted(set(int(c) for c in center)))
    if len(center) not in (2, 3) or any(c not in (1, 2, 3) for c in center):
        raise DegenerateChartError(f"center must be 2 or 3 of the variables 1, 2, 3; got {center}")
    if j not in center:
        raise DegenerateChartError(f"direction {j} is not in the center {center}")
    if sign not in (1, -1):
        raise DegenerateChartError("sign must be +1 or -1")
    xj = Poly.var(j)
    images = []
    for i in (1, 2, 3):
        if i == j:
            images.append(xj * sign)
        elif i in center:
            images.append(Poly.var(i) * xj)
        else:
            images.append(Poly.var(i))
    return ChartMap(center, j, sign, tuple(images), len(center) - 1)


def identity_chart() -> ChartMap:
    """The trivial chart (no blow-up); alpha = beta = 0."""
    return ChartMap((), None, 1, tuple(Poly.var(i) for i in (1, 2, 3)), 0, 0)


@dataclass(frozen=True)
class TransformResult:
    total: Poly
    alpha: int
    strict: Poly
    weighted: Poly | None
    chart: ChartMap


def total_transform(f: Poly, c: ChartMap) -> Poly:
    return f.subs(c.images)


def strict_transform(f: Poly, c: ChartMap) -> TransformResult:
    if f.is_zero():
        raise ValueError("strict transform of the zero polynomial is undefined")
    total = total_transform(f, c)
    if c.is_identity:
        return TransformResult(total, 0, total, None, replace(c, alpha=0))
    alpha = total.min_exponent(c.j)
    strict = total.shift(c.j, -alpha)
    weighted = total.shift(c.j, -1) if alpha >= 1 else None
    return TransformResult(total, alpha, strict, weighted, replace(c, alpha=alpha))


def _det3(m):
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def chart_jacobian(c: ChartMap):
    """Entry [i][k] = d(image_i)/dx_k."""
    return tuple(tuple(img.diff(k) for k in (1, 2, 3)) for img in c.images)


@dataclass(frozen=True)
class VolumeFactor:
    beta: int
    jacobian_monomial: Poly


def volume_factor(c: ChartMap) -> VolumeFactor:
    det = _det3(chart_jacobian(c))
    expected = Poly.one() if c.is_identity else Poly.var(c.j, c.beta) * c.sign
    if det != expected:
        raise DegenerateChartError(f"chart Jacobian {det} is not {expected}")
    return VolumeFactor(c.beta, det)


def _inverse_jacobian(c: ChartMap):
    m = chart_jacobian(c)
    if c.is_identity:
        return m
    # the determinant is sign * x_j^beta, so the inverse is adj / det in the Laurent ring
    adj = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for k in range(3):
            r = [a for a in range(3) if a != k]
            s = [b for b in range(3) if b != i]
            minor = m[r[0]][s[0]] * m[r[1]][s[1]] - m[r[0]][s[1]] * m[r[1]][s[0]]
            adj[i][k] = minor * (1 if (i + k) % 2 == 0 else -1)
    return tuple(tuple((adj[i][k] * c.sign).shift(c.j, -c.beta).with_laurent(c.j) for k in range(3))
                 for i in range(3))


def pullback_vecfield(V: VecField, c: ChartMap) -> VecField:
    """The field V* with d(sigma) V* = V o sigma, as a Laurent field in x_j."""
    Vs = [comp.subs(c.images) for comp in V.comps]
    if c.is_identity:
        return VecField(Vs)
    inv = _inverse_jacobian(c)
    comps = []
    for i in range(3):
        s = Poly.zero(c.j)
        for k in range(3):
            if not inv[i][k].is_zero() and not Vs[k].is_zero():
                s = s + inv[i][k] * Vs[k]
        comps.append(s)
    W = VecField(comps)
    bound = -(1 + len(c.center)) + min(0, V.laurent_order())
    if W.laurent_order(c.j) < bound:
        raise AssertionError(f"pullback has a pole of order {-W.laurent_order(c.j)} along the divisor")
    return W


def pushforward_at(W: VecField, c: ChartMap, p):
    """(sigma(p), d(sigma)_p W(p)) as float tuples."""
    J = chart_jacobian(c)
    w = W(p)
    v = tuple(sum(J[i][k].evaluate(p) * w[k] for k in range(3)) for i in range(3))
    return c.apply(p), v


@dataclass
class TransformedCharacteristic:
    Zstar: VecField
    Ztilde: VecField
    W: VecField
    alpha: int
    beta: int
    strict: Poly
    chart: ChartMap
    extension: VecField

    @property
    def extends_smoothly(self) -> bool:
        """Does (beta/alpha) * Ztilde, the field on the strict transform, have no pole?"""
        return self.extension.laurent_order(self.chart.j) >= 0


def transformed_characteristic(D: Distribution, h: Poly, c: ChartMap) -> TransformedCharacteristic:
    """Split the pulled-back characteristic field as Zstar = Ztilde + strict * W."""
    if c.is_identity:
        raise NoExceptionalFactorError("identity chart has no exceptional divisor")
    tr = strict_transform(h, c)
    if tr.alpha < 1:
        raise NoExceptionalFactorError("center not in zero set: transformed h has no exceptional factor")
    j = c.j
    ht = tr.strict.with_laurent(j)
    amono = Poly.var(j, tr.alpha, laurent_var=j)
    Xs = pullback_vecfield(D.X, c)
    Ys = pullback_vecfield(D.Y, c)
    Zstar = pullback_vecfield(characteristic_field(D, h), c)
    core = Ys.scale(lie_derivative(Xs, ht)) - Xs.scale(lie_derivative(Ys, ht))
    Ztilde = core.scale(amono)
    W = Ys.scale(lie_derivative(Xs, amono)) - Xs.scale(lie_derivative(Ys, amono))
    try:
        quotient = VecField([divide_exact(a, ht) for a in (Zstar - Ztilde).comps])
    except NotDivisibleError:
        raise AssertionError("pulled-back field minus Ztilde is not divisible by the strict transform") from None
    if quotient != W:
        raise AssertionError("residual quotient differs from the assembled correction field")
    if amono * lie_derivative(W, ht) != -lie_derivative(Ztilde, amono):
        raise AssertionError("W.h~ = -(Ztilde.alpha)/alpha fails")
    extension = core.scale(Poly.var(j, c.beta, laurent_var=j))
    return TransformedCharacteristic(Zstar, Ztilde, W, tr.alpha, c.beta, tr.strict, tr.chart, extension)


@dataclass(frozen=True)
class CompatReport:
    max_abs_err: float
    max_abs_err_zstar: float
    n: int
    chart: dict
    alpha: int
    beta: int
    seed: int

    def to_dict(self) -> dict:
        return {"max_abs_err": self.max_abs_err, "max_abs_err_zstar": self.max_abs_err_zstar,
                "n": self.n, "chart": self.chart, "alpha": self.alpha, "beta": self.beta,
                "seed": self.seed}


def _sample_surface(h: Poly, box, n, seed, j, margin):
    grad = h.gradient()
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    pts = []
    for i in range(50 * n):
        if len(pts) == n:
            break
        p = newton_project(h, grad, sample_rng(seed, i).uniform(lo, hi))
        if p is None or any(p[k] < lo[k] or p[k] > hi[k] for k in range(3)):
            continue
        if j is not None and p[j - 1] < margin:
            continue
        if math.sqrt(sum(g.evaluate(p) ** 2 for g in grad)) < 1e-6:
            continue
        pts.append(p)
    if not pts:
        raise NoAdmissibleSamplesError("no admissible samples")
    return pts


def verify_div_compat(D: Distribution, h: Poly, c: ChartMap, n: int = 200, seed: int = 0,
                      box=None, margin: float = 0.1) -> CompatReport:
    """Compare the weighted surface divergence upstairs with div Z downstairs.

    On the strict transform S~ = {h~ = 0} the volume is (beta/(alpha xi)) times
    the induced area, with beta = x_j^b the chart Jacobian, alpha = x_j^a the
    exceptional factor of h and xi = |grad h~|. The left side is evaluated as
    div_area(Ztilde) + Ztilde.log beta - Ztilde.log alpha - Ztilde.log xi,
    the right side as the ambient divergence of Z at sigma(p). The same left
    side computed from Zstar with the general tangent-field formula is
    reported too.
    """
    Z = characteristic_field(D, h)
    div_down = divergence_euclidean(Z)
    if c.is_identity:
        j, a, b = None, 0, 0
        Zt, Zs, ht = Z, Z, h
        box = box or [(-1.0, 1.0)] * 3
    else:
        tc = transformed_characteristic(D, h, c)
        j, a, b = c.j, tc.alpha, tc.beta
        Zt, Zs, ht = tc.Ztilde, tc.Zstar, tc.strict
        if box is None:
            box = [(margin, 1.0) if i == j else (-2.0, 2.0) for i in (1, 2, 3)]
    sd_t = SurfaceDivergence(Zt, ht.with_laurent(j) if j else ht)
    sd_s = SurfaceDivergence(Zs, ht.with_laurent(j) if j else ht)
    pts = _sample_surface(ht.with_laurent(None), box, n, seed, j, margin)
    err_t = err_s = 0.0
    for p in pts:
        rhs = div_down.evaluate(c.apply(p))
        log_xi = sd_t.correction(p)     # Z.log|grad h~| = (Z.g)/(2g)
        shift_t = 0.0 if j is None else (b - a) * Zt.comps[j - 1].evaluate(p) / p[j - 1]
        lhs_t = sd_t(p) + shift_t - log_xi
        shift_s = 0.0 if j is None else (b - a) * Zs.comps[j - 1].evaluate(p) / p[j - 1]
        lhs_s = sd_s(p) + shift_s - sd_s.correction(p)
        err_t = max(err_t, abs(lhs_t - rhs))
        err_s = max(err_s, abs(lhs_s - rhs))
    return CompatReport(err_t, err_s, len(pts), c.to_dict(), a, b, seed)
