"""Divergence of a tangent field along a level surface {h = 0}.

For a field Z with Z.h = q*h (q a polynomial, so Z is tangent to the
level set) the divergence with respect to the induced area form is

    div_S Z = div Z - q + (Z.g) / (2 g),      g = |grad h|^2.

When Z.h vanishes identically q = 0 and only the gradient correction is
left. The -q term accounts for the normal component of dZ picked up when
Z is extended off the surface without being tangent to nearby level sets.
"""
from __future__ import annotations

import math

from .poly import NotDivisibleError, Poly, divide_exact
from .vfield import VecField, divergence_euclidean, lie_derivative

__all__ = ["NotTangentError", "GradientDegenerateError", "SurfaceDivergence", "newton_project"]


class NotTangentError(ValueError):
    """The field is not tangent to the level surface."""


class GradientDegenerateError(ValueError):
    """The gradient of h is (numerically) zero at the evaluation point."""


class SurfaceDivergence:
    """Precomputed symbolic pieces of the surface divergence of Z on {h = 0}."""

    def __init__(self, Z: VecField, h: Poly, grad_floor: float = 1e-9):
        lv = Z.laurent_var
        Zh = lie_derivative(Z, h)
        try:
            q = divide_exact(Zh, h.with_laurent(lv) if lv else h)
        except NotDivisibleError:
            raise NotTangentError("field is not tangent to {h = 0}: Z.h is not divisible by h") from None
        grad = h.gradient()
        g = grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]
        self.Z = Z
        self.h = h
        self.grad = grad
        self.grad_sq = g
        self.q = q
        self.div = divergence_euclidean(Z)
        self.Zg = lie_derivative(Z, g)
        self.grad_floor = grad_floor

    def correction(self, p) -> float:
        """The term (Z.g)/(2g) at p."""
        g = self.grad_sq.evaluate(p)
        if math.sqrt(g) < self.grad_floor:
            raise GradientDegenerateError(f"|grad h| = {math.sqrt(g):.3e} at {tuple(p)}")
        return self.Zg.evaluate(p) / (2.0 * g)

    def __call__(self, p) -> float:
        c = self.correction(p)
        return self.div.evaluate(p) - self.q.evaluate(p) + c

    def numerator_denominator(self):
        """Polynomials N, D with div_S Z = N / D (used by the compiled kernels)."""
        two_g = self.grad_sq * 2
        return (self.div - self.q) * two_g + self.Zg, two_g


def newton_project(h: Poly, grad, p, tol: float = 1e-12, max_iter: int = 50, grad_floor: float = 1e-12):
    """Project p onto {h = 0} along the gradient.

    Returns the projected point or None when the iteration does not reach
    |h| <= tol * (1 + |p|^deg h).
    """
    x = [float(v) for v in p]
    deg = max(h.degree(), 0)
    for _ in range(max_iter + 1):
        hv = h.evaluate(x)
        scale = 1.0 + math.sqrt(x[0] ** 2 + x[1] ** 2 + x[2] ** 2) ** deg
        if abs(hv) <= tol * scale:
            return tuple(x)
        gr = [gi.evaluate(x) for gi in grad]
        gg = gr[0] ** 2 + gr[1] ** 2 + gr[2] ** 2
        if gg < grad_floor ** 2 or not math.isfinite(hv):
            return None
        s = hv / gg
        x = [x[i] - s * gr[i] for i in range(3)]
    return None
