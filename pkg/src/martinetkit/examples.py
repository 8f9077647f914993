"""Built-in distributions and the homoclinic-chain experiment on the loop example.

The chain works with the rescaled field

    F = -2xy d/dx - (3x^3 + 2y^2) d/dy + (4/3) x y^4 d/dz

whose (x, y) part has a family of orbits homoclinic to the origin. Starting
from (xbar, 0, -xbar) the orbit is followed in both time directions until
its speed drops below a floor; the limiting heights z(-inf) > z(+inf) are
extrapolated from two floors. Shooting on xbar produces a chain of loops
z_0 > z_1 > ... whose lengths and heights are checked against closed-form
bounds.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .flow import IntegratorOpts, Termination, integrate_field
from .martinet import Distribution, MartinetData
from .poly import Poly, parse
from .vfield import VecField, lie_derivative

__all__ = [
    "BUILTIN_NAMES",
    "ChainOptions",
    "ChainLink",
    "ChainReport",
    "ShootingError",
    "OrbitFailure",
    "builtin",
    "builtin_data",
    "printed_field",
    "derived_field",
    "curvature_polynomial",
    "homoclinic_orbit",
    "shoot_for_zminus",
    "run_chain",
    "chain_constant",
]

BUILTIN_NAMES = ("heisenberg", "martinet_flat", "loop", "conical_frame")


class ShootingError(RuntimeError):
    pass


class OrbitFailure(RuntimeError):
    """The orbit did not reach the speed floor near the axis."""


def builtin_data(path=None) -> dict:
    """Raw builtin records (name -> dict); `path` overrides the packaged file."""
    if path is None:
        text = resources.files("martinetkit").joinpath("data/builtins.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def builtin(name: str, path=None) -> Distribution:
    data = builtin_data(path)
    if name not in data:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(sorted(data))}")
    return Distribution.from_dict(data[name])


def printed_field() -> VecField:
    return VecField.parse(["-2*x*y", "-(3*x^3 + 2*y^2)", "4/3*x*y^4"])


def derived_field() -> tuple:
    """(-x * Z, h) with Z the characteristic field of the loop example.

    Agrees with the printed field on {h = 0} but, unlike it, is tangent
    to that surface, so its orbits are projected onto it.
    """
    md = MartinetData.from_distribution(builtin("loop"))
    return md.Z.scale(parse("-x")), md.h


def curvature_polynomial(F: VecField) -> Poly:
    """F1 (F.F2) - F2 (F.F1): the sign of the curvature of planar orbits."""
    F1, F2 = F.comps[0], F.comps[1]
    return F1 * lie_derivative(F, F2) - F2 * lie_derivative(F, F1)


@dataclass(frozen=True)
class ChainOptions:
    field: str = "printed"
    floors: tuple = (1e-6, 1e-8)
    extrapolation_order: float = 2.0
    rel_tol: float = 1e-12
    abs_tol: float = 1e-15
    max_steps: int = 400000
    slack: float = 0.05
    shoot_tol: float = 1e-10
    mirror_samples: int = 200
    backend: str | None = None

    def __post_init__(self):
        if self.field not in ("printed", "derived"):
            raise ValueError("field must be 'printed' or 'derived'")
        if len(self.floors) != 2 or not 0 < self.floors[1] < self.floors[0]:
            raise ValueError("floors must be two decreasing positive values")
        if self.slack < 0:
            raise ValueError("slack must be nonnegative")

    def integrator(self, floor: float) -> IntegratorOpts:
        return IntegratorOpts(rel_tol=self.rel_tol, abs_tol=self.abs_tol, max_steps=self.max_steps,
                              stop_speed=floor)

    def to_dict(self) -> dict:
        return {"field": self.field, "floors": list(self.floors),
                "extrapolation_order": self.extrapolation_order, "rel_tol": self.rel_tol,
                "abs_tol": self.abs_tol, "slack": self.slack, "shoot_tol": self.shoot_tol}


def _field(opts: ChainOptions):
    if opts.field == "printed":
        return printed_field(), None
    return derived_field()


@dataclass
class ChainLink:
    xbar: float
    z_minus: float
    z_plus: float
    len_planar: float
    len_3d: float
    curvature_sign_ok: bool
    mirror_error: float = float("nan")
    z_minus_raw: tuple = ()
    z_plus_raw: tuple = ()
    forward: list = field(default_factory=list, repr=False)
    backward: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"xbar": self.xbar, "z_minus": self.z_minus, "z_plus": self.z_plus,
                "len_planar": self.len_planar, "len_3d": self.len_3d,
                "curvature_sign_ok": self.curvature_sign_ok, "mirror_error": self.mirror_error,
                "z_minus_raw": list(self.z_minus_raw), "z_plus_raw": list(self.z_plus_raw)}


def _half_orbit(F, h, p0, opts: ChainOptions, direction, floor, stops=()):
    ts, pts, l3, lxy, term = integrate_field(F, p0, opts.integrator(floor), direction=direction,
                                             stops=stops, h=h, backend=opts.backend)
    if term is not Termination.SpeedFloor:
        raise OrbitFailure(f"orbit from {tuple(p0)} ended with {term.value} before reaching the axis")
    return ts, pts, l3, lxy


def _extrapolate(values, opts: ChainOptions) -> float:
    """Richardson step assuming the error scales like floor^p."""
    r = (opts.floors[0] / opts.floors[1]) ** opts.extrapolation_order
    return (r * values[1] - values[0]) / (r - 1.0)


def _zminus(xbar, F, h, opts):
    p0 = (xbar, 0.0, -xbar)
    raw = tuple(_half_orbit(F, h, p0, opts, -1, f)[1][-1][2] for f in opts.floors)
    return _extrapolate(raw, opts), raw


def homoclinic_orbit(xbar: float, opts: ChainOptions | None = None) -> ChainLink:
    if not (xbar < 0 and abs(xbar) <= 1):
        raise ValueError("xbar must lie in [-1, 0)")
    opts = opts or ChainOptions()
    F, h = _field(opts)
    p0 = (xbar, 0.0, -xbar)
    runs = {d: [_half_orbit(F, h, p0, opts, d, f) for f in opts.floors] for d in (1, -1)}
    zp_raw = tuple(r[1][-1][2] for r in runs[1])
    zm_raw = tuple(r[1][-1][2] for r in runs[-1])
    fwd, bwd = runs[1][-1], runs[-1][-1]
    len_planar = fwd[3][-1] + bwd[3][-1]
    len_3d = fwd[2][-1] + bwd[2][-1]

    curv = curvature_polynomial(F)
    vals = [curv.evaluate(p) for _, p in zip(fwd[0][1:-1], fwd[1][1:-1])]
    vals += [curv.evaluate(p) for _, p in zip(bwd[0][1:-1], bwd[1][1:-1])]
    curvature_ok = all(v < 0 for v in vals) or all(v > 0 for v in vals)

    # mirror check on a shared time grid
    T = 0.9 * min(fwd[0][-1], bwd[0][-1])
    grid = list(np.linspace(0.0, T, opts.mirror_samples + 1)[1:])
    f_s = _half_orbit(F, h, p0, opts, 1, opts.floors[0], grid)
    b_s = _half_orbit(F, h, p0, opts, -1, opts.floors[0], grid)
    fmap = dict(zip(f_s[0], f_s[1]))
    bmap = dict(zip(b_s[0], b_s[1]))
    mirror = 0.0
    for t in grid:
        if t in fmap and t in bmap:
            a, b = fmap[t], bmap[t]
            mirror = max(mirror, abs(a[0] - b[0]), abs(a[1] + b[1]))
    return ChainLink(xbar, _extrapolate(zm_raw, opts), _extrapolate(zp_raw, opts), len_planar, len_3d,
                     curvature_ok, mirror, zm_raw, zp_raw,
                     list(zip(fwd[0], fwd[1])), list(zip(bwd[0], bwd[1])))


@dataclass
class ShootResult:
    xbar: float
    z_minus: float
    iterations: int
    monotone: bool


def shoot_for_zminus(z0: float, tol: float = 1e-10, opts: ChainOptions | None = None,
                     eps: float = 0.01) -> ShootResult:
    """Bisect xbar in [-z0, -eps*z0] so that the backward limit height is z0."""
    if not 0 < z0 <= 1:
        raise ValueError("z0 must lie in (0, 1]")
    opts = opts or ChainOptions()
    F, h = _field(opts)
    lo, hi = -z0, -eps * z0
    f_lo, f_hi = _zminus(lo, F, h, opts)[0] - z0, _zminus(hi, F, h, opts)[0] - z0
    if f_lo * f_hi > 0:
        raise ShootingError(f"bracket [{lo}, {hi}] does not straddle z0 = {z0}: "
                            f"z_minus - z0 = {f_lo:.6g}, {f_hi:.6g}")
    evals = [(lo, f_lo), (hi, f_hi)]
    mid = 0.5 * (lo + hi)
    if tol >= abs(f_lo - f_hi):
        return ShootResult(mid, z0 + 0.5 * (f_lo + f_hi), 0, True)
    it = 0
    while True:
        it += 1
        mid = 0.5 * (lo + hi)
        fm = _zminus(mid, F, h, opts)[0] - z0
        evals.append((mid, fm))
        if abs(fm) <= tol or hi - lo <= 1e-15 * abs(mid):
            break
        if it > 200:
            raise ShootingError("bisection did not converge")
        if (fm > 0) == (f_lo > 0):
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
    evals.sort()
    diffs = [b[1] - a[1] for a, b in zip(evals, evals[1:])]
    monotone = all(d <= 0 for d in diffs) or all(d >= 0 for d in diffs)
    return ShootResult(mid, fm + z0, it, monotone)


def chain_constant(z0: float) -> float:
    return max(0.5 + abs(z0) ** 4.5 / 3.0, 2.0 * math.sqrt(2.0) + (4.0 / 3.0) * z0 ** 4.5)


def _leq(a: float, b: float, slack: float) -> bool:
    return a <= b + slack * max(abs(a), abs(b))


def link_checks(link: ChainLink, slack: float) -> list:
    """Closed-form bounds for one loop as (name, lhs, rhs, ok) with lhs <= rhs expected."""
    zm, zp, lp, l3, a = link.z_minus, link.z_plus, link.len_planar, link.len_3d, abs(link.xbar)
    rows = [
        ("height_drop_lower", -(2.0 / 3.0) * zm ** 4.5 * lp, zp - zm),
        ("height_drop_upper", zp - zm, -zp ** 5.5 / 35.0),
        ("start_height_vs_planar_length", zm, lp * (0.5 + zm ** 4.5 / 3.0)),
        ("planar_below_spatial_length", lp, l3),
        ("spatial_length_bound", l3, 2.0 * (zm + 2.0 * zm ** 1.5) * (math.sqrt(2.0) + (2.0 / 3.0) * zm ** 4.5)),
        ("planar_length_lower", 2.0 * a, lp),
        ("planar_length_upper", lp, 2.0 * a + 4.0 * a ** 1.5),
    ]
    out = [(n, lhs, rhs, _leq(lhs, rhs, slack)) for n, lhs, rhs in rows]
    out.append(("heights_strictly_drop", zp, zm, zp < zm))
    return out


def sequence_checks(z_seq, len_seq, K: float, slack: float) -> list:
    out = []
    for k in range(len(len_seq)):
        zk, zk1, lk = z_seq[k], z_seq[k + 1], len_seq[k]
        for name, lhs, rhs in (
            ("step_drop_lower", -(2.0 / 3.0) * zk ** 4.5 * lk, zk1 - zk),
            ("step_drop_upper", zk1 - zk, -zk1 ** 5.5 / 35.0),
            ("height_vs_length", zk, K * lk),
            ("length_vs_height", lk, K * (zk + 2.0 * zk ** 1.5)),
        ):
            out.append((f"{name}[{k}]", lhs, rhs, _leq(lhs, rhs, slack)))
    return out


@dataclass
class ChainReport:
    z0: float
    links: list
    z_seq: list
    len_seq: list
    K: float
    checks: list
    partial_sum_evidence: list
    options: ChainOptions
    error: str | None = None

    @property
    def ineq_violations(self) -> list:
        return [c for c in self.checks if not c[3]]

    @property
    def ok(self) -> bool:
        return self.error is None and not self.ineq_violations

    def to_dict(self) -> dict:
        return {
            "z0": self.z0,
            "K": self.K,
            "z_seq": self.z_seq,
            "len_seq": self.len_seq,
            "links": [ln.to_dict() for ln in self.links],
            "checks": [{"name": n, "lhs": a, "rhs": b, "ok": ok} for n, a, b, ok in self.checks],
            "ineq_violations": [n for n, *_ in self.ineq_violations],
            "partial_sum_evidence": [
                {"k": k, "p_k": p, "window_sum": s, "monotone_bound": m, "lower_bound": lb}
                for k, p, s, m, lb in self.partial_sum_evidence],
            "options": self.options.to_dict(),
            "error": self.error,
        }


def _partial_sums(z_seq, K):
    out = []
    for k, zk in enumerate(z_seq):
        p = math.ceil(3.0 / (4.0 * K * zk ** 4.5))
        lower = 3.0 / (4.0 * K) * zk ** -3.5
        if k + p < len(z_seq):
            out.append((k, p, sum(z_seq[k:k + p + 1]), p * z_seq[k + p], lower))
        else:
            out.append((k, p, None, None, lower))
    return out


def run_chain(z0: float, n_links: int, opts: ChainOptions | None = None, progress=None) -> ChainReport:
    """Build n_links consecutive loops starting from height z0.

    On a shooting failure the report so far is returned with `error` set.
    """
    if not 0 < z0 <= 1:
        raise ValueError("z0 must lie in (0, 1]")
    if n_links < 1:
        raise ValueError("n_links must be at least 1")
    opts = opts or ChainOptions()
    K = chain_constant(z0)
    links, z_seq, len_seq, checks = [], [z0], [], []
    error = None
    for k in range(n_links):
        try:
            shot = shoot_for_zminus(z_seq[-1], opts.shoot_tol, opts)
            link = homoclinic_orbit(shot.xbar, opts)
        except (ShootingError, OrbitFailure) as exc:
            error = f"link {k}: {exc}"
            break
        links.append(link)
        checks += [(f"{n}[{k}]", a, b, ok) for n, a, b, ok in link_checks(link, opts.slack)]
        checks.append((f"shooting_monotone[{k}]", 0.0, 0.0, shot.monotone))
        z_seq.append(link.z_plus)
        len_seq.append(link.len_3d)
        if progress:
            progress(k, link)
    checks += sequence_checks(z_seq, len_seq, K, opts.slack)
    checks += [(f"heights_positive_decreasing[{k}]", z_seq[k + 1], z_seq[k], 0 < z_seq[k + 1] < z_seq[k])
               for k in range(len(z_seq) - 1)]
    evidence = _partial_sums(z_seq, K)
    checks += [(f"window_sum[{k}]", m, s, s >= m) for k, p, s, m, lb in evidence if s is not None]
    return ChainReport(z0, links, z_seq, len_seq, K, checks, evidence, opts, error)
