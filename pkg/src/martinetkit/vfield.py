"""Polynomial vector fields on 3-space."""
from __future__ import annotations

from fractions import Fraction

from .poly import Poly, parse

__all__ = [
    "VecField",
    "lie_derivative",
    "lie_bracket",
    "divergence_euclidean",
    "divergence_density",
    "jacobian",
    "evaluate",
]


class VecField:
    """A triple of Polys, the coefficients of d/dx1, d/dx2, d/dx3."""

    __slots__ = ("comps",)

    def __init__(self, comps):
        comps = tuple(c if isinstance(c, Poly) else Poly.const(c) for c in comps)
        if len(comps) != 3:
            raise ValueError("a vector field needs three components")
        lv = None
        for c in comps:
            if c.laurent_var is not None:
                if lv is not None and lv != c.laurent_var:
                    raise ValueError("components use different Laurent variables")
                lv = c.laurent_var
        if lv is not None:
            comps = tuple(c.with_laurent(lv) for c in comps)
        self.comps = comps

    @classmethod
    def parse(cls, exprs, laurent_var=None) -> VecField:
        return cls([parse(e, laurent_var) for e in exprs])

    @classmethod
    def zero(cls) -> VecField:
        return cls([Poly.zero()] * 3)

    @classmethod
    def coordinate(cls, v) -> VecField:
        """The constant field d/dx_v (v is 1-based)."""
        return cls([Poly.one() if i == v else Poly.zero() for i in (1, 2, 3)])

    @property
    def laurent_var(self):
        for c in self.comps:
            if c.laurent_var is not None:
                return c.laurent_var
        return None

    def __getitem__(self, i):
        return self.comps[i]

    def __iter__(self):
        return iter(self.comps)

    def __add__(self, other: VecField) -> VecField:
        return VecField([a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other: VecField) -> VecField:
        return VecField([a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self) -> VecField:
        return VecField([-a for a in self.comps])

    def scale(self, f) -> VecField:
        """Multiply every component by the scalar polynomial (or number) f."""
        return VecField([f * a for a in self.comps])

    def __rmul__(self, f) -> VecField:
        return self.scale(f)

    def __eq__(self, other):
        if not isinstance(other, VecField):
            return NotImplemented
        return self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps)

    def degree(self) -> int:
        return max(c.degree() for c in self.comps)

    def laurent_order(self, v=None) -> int:
        """Lowest exponent of the Laurent variable over all components."""
        v = v or self.laurent_var
        if v is None:
            return 0
        return min((c.min_exponent(v) for c in self.comps if not c.is_zero()), default=0)

    def apply(self, f: Poly) -> Poly:
        return lie_derivative(self, f)

    def bracket(self, other: VecField) -> VecField:
        return lie_bracket(self, other)

    def divergence(self) -> Poly:
        return divergence_euclidean(self)

    def jacobian(self):
        return jacobian(self)

    def __call__(self, p):
        return evaluate(self, p)

    def subs(self, images) -> VecField:
        return VecField([c.subs(images) for c in self.comps])

    def to_strings(self):
        return [str(c) for c in self.comps]

    def __str__(self):
        parts = []
        for name, c in zip(("d/dx", "d/dy", "d/dz"), self.comps):
            if not c.is_zero():
                parts.append(f"({c}) {name}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"VecField({self.to_strings()!r})"


def lie_derivative(V: VecField, f: Poly) -> Poly:
    """V.f = sum_i V_i * df/dx_i."""
    out = Poly.zero()
    for i, vi in enumerate(V.comps, start=1):
        if not vi.is_zero():
            out = out + vi * f.diff(i)
    return out


def lie_bracket(V: VecField, W: VecField) -> VecField:
    """[V, W]_k = V.W_k - W.V_k."""
    return VecField([lie_derivative(V, wk) - lie_derivative(W, vk)
                     for vk, wk in zip(V.comps, W.comps)])


def divergence_euclidean(V: VecField) -> Poly:
    out = Poly.zero()
    for i, vi in enumerate(V.comps, start=1):
        out = out + vi.diff(i)
    return out


def jacobian(V: VecField):
    """3x3 nested tuple with entry [i][j] = dV_i/dx_j."""
    return tuple(tuple(vi.diff(j) for j in (1, 2, 3)) for vi in V.comps)


def divergence_density(V: VecField, density: Poly, p) -> float:
    """Divergence of V for the volume density * dx at p: div(density V) / density."""
    rho = density.evaluate(p)
    if rho == 0.0:
        raise ZeroDivisionError("density vanishes at the evaluation point")
    return divergence_euclidean(V.scale(density)).evaluate(p) / rho


def evaluate(V: VecField, p, exact: bool = False):
    """Numeric value of V at p as a tuple of floats.

    With exact=True the components are evaluated in rational arithmetic
    (the point is converted exactly) and only the result is rounded.
    """
    if exact:
        return tuple(float(c.evaluate_exact([Fraction(v) for v in p])) for c in V.comps)
    return tuple(c.evaluate(p) for c in V.comps)
