"""Martinet surface of a rank-two distribution and its characteristic field."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .poly import NotDivisibleError, ParseError, Poly, divide_exact, divmod_poly, parse, squarefree_part
from .surface import GradientDegenerateError, SurfaceDivergence, newton_project
from .vfield import VecField, lie_bracket, lie_derivative

__all__ = [
    "Distribution",
    "MartinetData",
    "Stratum",
    "PathVerdict",
    "ScanReport",
    "InvariantError",
    "DegenerateDistributionError",
    "NoAdmissibleSamplesError",
    "martinet_function",
    "reduced_martinet",
    "characteristic_field",
    "classify_point",
    "check_bracket_generating",
    "divergence_ratio_scan",
    "is_singular_path",
    "compare_modulo",
    "surface_scale",
]


class InvariantError(RuntimeError):
    """A symbolic certificate that must hold by construction failed."""


class DegenerateDistributionError(ValueError):
    pass


class NoAdmissibleSamplesError(RuntimeError):
    pass


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _parse_at(text, where: str) -> Poly:
    if not isinstance(text, str):
        raise ValueError(f"{where}: expected a string expression, got {text!r}")
    try:
        return parse(text)
    except ParseError as exc:
        msg = f"{where}: {exc.message} in {text!r}"
        err = type(exc).__new__(type(exc))
        if exc.offset is None:
            ValueError.__init__(err, msg)
            err.message, err.offset = msg, None
        else:
            ParseError.__init__(err, msg, exc.offset)
        raise err from None


def _field_at(exprs, key: str) -> VecField:
    return VecField([_parse_at(e, f"{key}[{i}]") for i, e in enumerate(exprs)])


@dataclass(frozen=True)
class Distribution:
    """A rank-two distribution given by a frame X, Y.

    `h` optionally fixes the generator of the Martinet ideal to use (it must
    have the same squarefree part as the determinant); `Z_reference` is an
    optional externally supplied characteristic field kept for comparison.
    """

    X: VecField
    Y: VecField
    name: str = ""
    h: Poly | None = None
    Z_reference: VecField | None = None

    def __post_init__(self):
        if all(c.is_zero() for c in _cross(self.X.comps, self.Y.comps)):
            raise DegenerateDistributionError(
                f"frame of {self.name or 'distribution'} is everywhere collinear")

    @classmethod
    def from_dict(cls, d: dict) -> Distribution:
        for key in ("X", "Y"):
            if key not in d:
                raise KeyError(f"missing field {key!r}")
            if not isinstance(d[key], list) or len(d[key]) != 3:
                raise ValueError(f"field {key!r} must be a list of three expressions")
        h = _parse_at(d["h"], "h") if d.get("h") else None
        zref = _field_at(d["Z_reference"], "Z_reference") if d.get("Z_reference") else None
        return cls(_field_at(d["X"], "X"), _field_at(d["Y"], "Y"), d.get("name", ""), h, zref)

    @classmethod
    def from_json(cls, text: str) -> Distribution:
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        d = {"name": self.name, "X": self.X.to_strings(), "Y": self.Y.to_strings()}
        if self.h is not None:
            d["h"] = str(self.h)
        if self.Z_reference is not None:
            d["Z_reference"] = self.Z_reference.to_strings()
        return d

    def swapped(self) -> Distribution:
        return Distribution(self.Y, self.X, self.name + " (swapped)")


def martinet_function(D: Distribution) -> Poly:
    """det[X, Y, [X, Y]] with the three fields as columns."""
    B = lie_bracket(D.X, D.Y)
    X, Y = D.X.comps, D.Y.comps
    return (X[0] * (Y[1] * B[2] - Y[2] * B[1])
            - Y[0] * (X[1] * B[2] - X[2] * B[1])
            + B[0] * (X[1] * Y[2] - X[2] * Y[1]))


def reduced_martinet(h_raw: Poly) -> Poly:
    if h_raw.is_zero():
        raise DegenerateDistributionError("Martinet determinant vanishes identically")
    return squarefree_part(h_raw)


def characteristic_field(D: Distribution, h: Poly) -> VecField:
    """Z = (X.h) Y - (Y.h) X, checked to be tangent to {h = 0}."""
    if h.is_zero():
        raise ValueError("h must be nonzero")
    Z = D.Y.scale(lie_derivative(D.X, h)) - D.X.scale(lie_derivative(D.Y, h))
    try:
        divide_exact(lie_derivative(Z, h), h)
    except NotDivisibleError:
        raise InvariantError("tangency certificate failed: Z.h is not divisible by h") from None
    return Z


@dataclass
class MartinetData:
    distribution: Distribution
    h_raw: Poly
    h: Poly
    grad_h: tuple
    Z: VecField
    Xh: Poly = field(repr=False, default=None)
    Yh: Poly = field(repr=False, default=None)
    _surface: SurfaceDivergence | None = field(repr=False, default=None)

    @classmethod
    def from_distribution(cls, D: Distribution) -> MartinetData:
        h_raw = martinet_function(D)
        h = reduced_martinet(h_raw)
        if D.h is not None:
            if D.h.is_zero() or D.h.primitive() != h:
                raise InvariantError(f"supplied generator {D.h} does not match reduced determinant {h}")
            h = D.h
        Z = characteristic_field(D, h)
        return cls(D, h_raw, h, h.gradient(), Z, lie_derivative(D.X, h), lie_derivative(D.Y, h))

    @property
    def surface(self) -> SurfaceDivergence:
        if self._surface is None:
            self._surface = SurfaceDivergence(self.Z, self.h)
        return self._surface

    @property
    def sigma_empty(self) -> bool:
        return self.h.is_constant()

    def tangency_quotient(self) -> Poly:
        """(Z.h)/h, the exact quotient certifying tangency."""
        return divide_exact(lie_derivative(self.Z, self.h), self.h)


def surface_scale(h: Poly, p) -> float:
    r = math.sqrt(sum(float(v) ** 2 for v in p))
    return 1.0 + r ** max(h.degree(), 0)


class Stratum(enum.Enum):
    Sigma2_tr = "Sigma2_tr"
    Sigma2_tan = "Sigma2_tan"
    SingularLocus = "SingularLocus"
    OffSurface = "OffSurface"


def classify_point(md: MartinetData, p, tol: float = 1e-9) -> Stratum:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if abs(md.h.evaluate(p)) > tol * surface_scale(md.h, p):
        return Stratum.OffSurface
    if math.sqrt(sum(g.evaluate(p) ** 2 for g in md.grad_h)) <= tol:
        return Stratum.SingularLocus
    if abs(md.Xh.evaluate(p)) <= tol and abs(md.Yh.evaluate(p)) <= tol:
        return Stratum.Sigma2_tan
    return Stratum.Sigma2_tr


def check_bracket_generating(D: Distribution, p, max_depth: int) -> bool:
    """Do the iterated brackets of X, Y of length <= max_depth span R^3 at p?"""
    if max_depth < 2:
        raise ValueError("max_depth must be at least 2")
    level = [D.X, D.Y]
    seen = set(level)
    cols = [D.X(p), D.Y(p)]
    for _ in range(2, max_depth + 1):
        nxt = []
        for B in level:
            for G in (D.X, D.Y):
                C = lie_bracket(G, B)
                if C.is_zero() or C in seen:
                    continue
                seen.add(C)
                nxt.append(C)
                cols.append(C(p))
        if np.linalg.matrix_rank(np.array(cols).T, tol=1e-9) == 3:
            return True
        level = nxt
        if not level:
            break
    return bool(np.linalg.matrix_rank(np.array(cols).T, tol=1e-9) == 3)


@dataclass(frozen=True)
class ScanReport:
    sup_ratio: float
    argmax: tuple
    samples_used: int
    n: int
    seed: int

    def to_dict(self) -> dict:
        return {"sup_ratio": self.sup_ratio, "argmax": list(self.argmax), "n": self.n,
                "seed": self.seed, "samples_used": self.samples_used}


def sample_rng(seed: int, i: int) -> np.random.Generator:
    """Independent substream for sample i; results do not depend on evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def _scan_sample(md, lo, hi, seed, i):
    p = sample_rng(seed, i).uniform(lo, hi)
    q = newton_project(md.h, md.grad_h, p)
    if q is None or any(q[k] < lo[k] or q[k] > hi[k] for k in range(3)):
        return None
    if math.sqrt(sum(g.evaluate(q) ** 2 for g in md.grad_h)) < 1e-6:
        return None
    zn = math.sqrt(sum(v * v for v in md.Z(q)))
    if zn < 1e-12:
        return None
    try:
        d = md.surface(q)
    except GradientDegenerateError:
        return None
    return abs(d) / zn, q


def divergence_ratio_scan(md: MartinetData, box, n: int, seed: int = 0) -> ScanReport:
    """Largest |div_S Z| / |Z| over n random draws projected onto {h = 0} in the box.

    Draw i always uses the same substream, so the first n draws of a larger
    scan coincide with a scan of size n.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    best, arg, used = -1.0, None, 0
    for i in range(n):
        r = _scan_sample(md, lo, hi, seed, i)
        if r is None:
            continue
        used += 1
        if r[0] > best:
            best, arg = r
    if used == 0:
        raise NoAdmissibleSamplesError("no admissible samples")
    return ScanReport(best, tuple(arg), used, n, seed)


class PathVerdict(enum.Enum):
    Singular = "Singular"
    NotHorizontal = "NotHorizontal"
    NotInSigma = "NotInSigma"


class DegenerateSamplingError(ValueError):
    pass


def is_singular_path(md: MartinetData, D: Distribution, path, tol: float = 1e-6,
                     max_step: float | None = None) -> PathVerdict:
    """Classify a sampled path [(t, p), ...] as a singular horizontal curve.

    The horizontality residual is measured relative to the chord speed,
    with the frame evaluated at the chord midpoint.
    """
    if len(path) < 2:
        raise DegenerateSamplingError("need at least two samples")
    for k in range(len(path) - 1):
        if not path[k + 1][0] > path[k][0]:
            raise DegenerateSamplingError(f"times not strictly increasing at sample {k + 1}")
        if max_step is not None:
            dist = math.dist(path[k][1], path[k + 1][1])
            if dist > max_step:
                raise DegenerateSamplingError(f"step {dist:.3e} exceeds bound {max_step:.3e} at sample {k + 1}")
    for _, p in path:
        if abs(md.h.evaluate(p)) > tol * surface_scale(md.h, p):
            return PathVerdict.NotInSigma
    for k in range(len(path) - 1):
        (t0, p0), (t1, p1) = path[k], path[k + 1]
        v = (np.asarray(p1, float) - np.asarray(p0, float)) / (t1 - t0)
        speed = float(np.linalg.norm(v))
        if speed == 0.0:
            continue
        mid = (np.asarray(p0, float) + np.asarray(p1, float)) / 2
        A = np.array([D.X(mid), D.Y(mid)]).T
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        res = float(np.linalg.norm(A @ coef - v))
        if res > tol * speed:
            return PathVerdict.NotHorizontal
    return PathVerdict.Singular


def compare_modulo(Z1: VecField, Z2: VecField, h: Poly) -> list:
    """Componentwise comparison of two fields modulo the ideal (h).

    Each entry holds the difference, its normal form modulo h and whether
    the two components agree on {h = 0} as polynomials.
    """
    out = []
    for k, (a, b) in enumerate(zip(Z1.comps, Z2.comps)):
        d = a - b
        _, rem = divmod_poly(d, h)
        out.append({"component": "xyz"[k], "difference": str(d), "remainder": str(rem),
                    "equal_mod_h": rem.is_zero()})
    return out
