"""Integration of characteristic fields on the Martinet surface.

Orbits are integrated with an adaptive Dormand-Prince 5(4) pair; arc length
and the divergence integral are carried as extra state components so they
get the same quadrature as the position. After each accepted step the
position is projected back onto {h = 0} by Newton iteration along grad h.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from fractions import Fraction
from dataclasses import dataclass, field

from . import _kernels
from ._kernel_py import OP_LINCOMB, OP_NORM, OP_POLY, OP_RATIO
from .martinet import MartinetData, Stratum, classify_point, surface_scale
from .poly import Poly
from .surface import GradientDegenerateError, NotTangentError, SurfaceDivergence
from .vfield import VecField, jacobian

__all__ = [
    "IntegratorOpts",
    "OrbitTrace",
    "Termination",
    "VolumeReport",
    "Reparametrization",
    "OffSurfaceError",
    "ProjectionError",
    "OrbitEscapeError",
    "NonPositiveRateError",
    "surface_divergence",
    "integrate_orbit",
    "integrate_field",
    "liouville_check",
    "reparametrize",
    "Program",
]


class OffSurfaceError(ValueError):
    """The starting point is not on {h = 0}."""


class ProjectionError(RuntimeError):
    """Newton projection onto {h = 0} did not converge."""


class OrbitEscapeError(RuntimeError):
    pass


class NonPositiveRateError(ValueError):
    pass


class Termination(enum.Enum):
    MaxTime = "MaxTime"
    SpeedFloor = "SpeedFloor"
    LeftBox = "LeftBox"
    StepFailure = "StepFailure"
    MaxSteps = "MaxSteps"


_STATUS = {0: Termination.MaxTime, 1: Termination.SpeedFloor, 2: Termination.LeftBox,
           3: Termination.StepFailure, 4: Termination.MaxSteps}


@dataclass(frozen=True)
class IntegratorOpts:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_time: float = 1e6
    max_steps: int = 200_000
    projection_tol: float = 1e-12
    projection_max_iter: int = 5
    stop_speed: float = 1e-8
    chart_box: tuple | None = None
    h_init: float = 0.0
    h_max: float = math.inf

    def __post_init__(self):
        if min(self.rel_tol, self.abs_tol, self.projection_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.max_time <= 0:
            raise ValueError("max_time must be positive")
        if self.stop_speed < 0:
            raise ValueError("stop_speed must be nonnegative")


class Program:
    """Right-hand side program for the integration kernels (see _kernel_py)."""

    def __init__(self):
        self.polys = []
        self.ops = []
        self.lincomb = []
        self.proj = (-1, -1, -1, -1)
        self.proj_deg = 0

    def poly(self, p) -> int:
        if not isinstance(p, Poly):
            p = Poly.const(p)
        if p.is_laurent():
            raise ValueError("kernel programs take ordinary polynomials only")
        self.polys.append(p)
        return len(self.polys) - 1

    def op_poly(self, i):
        self.ops.append((OP_POLY, i, 0))

    def op_norm(self, start, stop):
        self.ops.append((OP_NORM, start, stop))

    def op_ratio(self, num, den):
        self.ops.append((OP_RATIO, num, den))

    def op_lincomb(self, pairs):
        self.ops.append((OP_LINCOMB, len(self.lincomb), len(pairs)))
        self.lincomb.extend(pairs)

    def project_onto(self, h: Poly):
        idx = [self.poly(h)] + [self.poly(g) for g in h.gradient()]
        self.proj = tuple(idx)
        self.proj_deg = max(h.degree(), 0)

    def arrays(self):
        coef, ex, ey, ez, offsets = [], [], [], [], [0]
        for p in self.polys:
            for e, c in p.items():
                coef.append(float(c))
                ex.append(e[0])
                ey.append(e[1])
                ez.append(e[2])
            offsets.append(len(coef))
        kinds = [o[0] for o in self.ops]
        arg_a = [o[1] for o in self.ops]
        arg_b = [o[2] for o in self.ops]
        lc_poly = [pq[0] for pq in self.lincomb]
        lc_state = [pq[1] for pq in self.lincomb]
        return coef, ex, ey, ez, offsets, kinds, arg_a, arg_b, lc_poly, lc_state

    def run(self, y0, t_end, opts: IntegratorOpts, direction=1, stops=(), backend=None, use_box=True):
        fn = _kernels.resolve(backend)
        box = opts.chart_box if use_box else None
        lo = hi = None
        if box is not None:
            lo = [float(b[0]) for b in box]
            hi = [float(b[1]) for b in box]
        return fn(*self.arrays(), [float(v) for v in y0], 0.0, float(t_end), float(direction),
                  opts.rel_tol, opts.abs_tol, opts.h_init, opts.h_max, opts.max_steps,
                  opts.stop_speed, list(self.proj), opts.projection_tol, self.proj_deg,
                  opts.projection_max_iter, lo, hi, sorted(float(s) for s in stops))


def surface_divergence(md_or_field, p, h: Poly | None = None, tol: float = 1e-9) -> float:
    """Divergence along {h = 0} of the characteristic field (or of any tangent field).

    Call as surface_divergence(md, p) or surface_divergence(Z, p, h=h).
    """
    if isinstance(md_or_field, MartinetData):
        sd = md_or_field.surface
    else:
        sd = SurfaceDivergence(md_or_field, h)
    if abs(sd.h.evaluate(p)) > tol * surface_scale(sd.h, p):
        raise OffSurfaceError(f"h(p) = {sd.h.evaluate(p):.3e} is not zero at {tuple(p)}")
    return sd(p)


@dataclass
class OrbitTrace:
    times: list
    points: list
    cum_length: list
    cum_div: list
    termination: Termination
    direction: int = 1
    h: Poly | None = field(default=None, repr=False)
    field: VecField | None = field(default=None, repr=False)

    @property
    def samples(self):
        return list(zip(self.times, self.points))

    @property
    def arc_length(self) -> float:
        return self.cum_length[-1]

    @property
    def div_integral(self) -> float:
        return self.cum_div[-1]

    @property
    def end(self):
        return self.points[-1]

    def rows(self):
        for t, p, L, D in zip(self.times, self.points, self.cum_length, self.cum_div):
            speed = math.sqrt(sum(v * v for v in self.field(p))) if self.field is not None else math.nan
            hres = self.h.evaluate(p) if self.h is not None else math.nan
            yield (t, p[0], p[1], p[2], speed, hres, L, D)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "z", "speed", "h_residual", "cum_length", "cum_div"])
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _orbit_program(F: VecField, sd: SurfaceDivergence | None, h: Poly | None, planar_length=False):
    prog = Program()
    for c in F.comps:
        prog.poly(c)
    for i in range(3):
        prog.op_poly(i)
    prog.op_norm(0, 3)
    if planar_length:
        prog.op_norm(0, 2)
    if sd is not None:
        num, den = sd.numerator_denominator()
        prog.op_ratio(prog.poly(num), prog.poly(den))
    if h is not None:
        prog.project_onto(h)
    return prog


def _run_checked(prog, y0, t_end, opts, direction, stops=(), backend=None):
    ts, ys, status, _ = prog.run(y0, t_end, opts, direction, stops, backend)
    if status == 5:
        raise ProjectionError(f"projection onto the surface diverged near t = {ts[-1]:.6g}")
    return ts, ys, _STATUS[status]


def integrate_orbit(md: MartinetData, p0, opts: IntegratorOpts | None = None, direction: int = 1,
                    stops=(), backend=None) -> OrbitTrace:
    """Orbit of direction*Z from p0 on the Martinet surface."""
    opts = opts or IntegratorOpts()
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if classify_point(md, p0, max(opts.projection_tol, 1e-9)) is Stratum.OffSurface:
        raise OffSurfaceError(f"start point {tuple(p0)} is not on the Martinet surface")
    prog = _orbit_program(md.Z, md.surface, md.h)
    ts, ys, term = _run_checked(prog, list(p0) + [0.0, 0.0], opts.max_time, opts, direction, stops, backend)
    return OrbitTrace(ts, [tuple(y[:3]) for y in ys], [y[3] for y in ys], [y[4] for y in ys],
                      term, direction, md.h, md.Z)


def integrate_field(F: VecField, p0, opts: IntegratorOpts | None = None, direction: int = 1,
                    t_end: float | None = None, stops=(), h: Poly | None = None, backend=None):
    """Orbit of an arbitrary polynomial field with 3D and planar arc length.

    Returns (times, points, cum_len3d, cum_len_xy, termination). When h is
    given the position is projected onto {h = 0} after every step.
    """
    opts = opts or IntegratorOpts()
    prog = _orbit_program(F, None, h, planar_length=True)
    t_end = opts.max_time if t_end is None else t_end
    ts, ys, term = _run_checked(prog, list(p0) + [0.0, 0.0], t_end, opts, direction, stops, backend)
    return ts, [tuple(y[:3]) for y in ys], [y[3] for y in ys], [y[4] for y in ys], term


@dataclass(frozen=True)
class VolumeReport:
    t_grid: list
    vol_formula: list
    vol_jacobian: list
    max_rel_err: float

    def to_dict(self) -> dict:
        return {"t_grid": list(self.t_grid), "vol_formula": list(self.vol_formula),
                "vol_jacobian": list(self.vol_jacobian), "max_rel_err": self.max_rel_err}


def _planar_check(V: VecField):
    if not V.comps[2].is_zero() or any(c.degree_in(3) > 0 for c in V.comps if not c.is_zero()):
        raise ValueError("planar field must have zero third component and not depend on z")


def liouville_check(V: VecField, S0, t_grid, opts: IntegratorOpts | None = None,
                    cell_area: float = 1.0, escape_radius: float = 1e8, backend=None) -> VolumeReport:
    """Compare two estimates of the area transported by a planar flow.

    The exp-integral estimate uses exp(int_0^t div V) along each orbit, the
    Jacobian estimate the determinant of the variational equation J' = DV J.
    Both are averaged over S0 and multiplied by the cell area.
    """
    _planar_check(V)
    if not S0:
        raise ValueError("S0 must be nonempty")
    pts = [tuple(float(v) for v in p[:2]) for p in S0]
    if len(set(pts)) != len(pts):
        raise ValueError("points of S0 must be pairwise distinct")
    t_grid = [float(t) for t in t_grid]
    if any(t < 0 for t in t_grid):
        raise ValueError("times must be nonnegative")
    opts = opts or IntegratorOpts()
    opts = IntegratorOpts(rel_tol=opts.rel_tol, abs_tol=opts.abs_tol, max_time=max(t_grid + [0.0]),
                          max_steps=opts.max_steps, stop_speed=0.0,
                          chart_box=[(-escape_radius, escape_radius)] * 3)
    J = jacobian(V)
    prog = Program()
    for c in V.comps:
        prog.poly(c)
    a, b = prog.poly(J[0][0]), prog.poly(J[0][1])
    c, d = prog.poly(J[1][0]), prog.poly(J[1][1])
    div = prog.poly(J[0][0] + J[1][1])
    for i in range(3):
        prog.op_poly(i)
    # state: x, y, z, J11, J12, J21, J22, int div
    prog.op_lincomb([(a, 3), (b, 5)])
    prog.op_lincomb([(a, 4), (b, 6)])
    prog.op_lincomb([(c, 3), (d, 5)])
    prog.op_lincomb([(c, 4), (d, 6)])
    prog.op_poly(div)
    t_max = max(t_grid + [0.0])
    exp_sum = [0.0] * len(t_grid)
    det_sum = [0.0] * len(t_grid)
    for p in pts:
        y0 = [p[0], p[1], 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]
        ts, ys, status, _ = prog.run(y0, t_max, opts, 1, t_grid, backend)
        if status == 2:
            raise OrbitEscapeError(f"orbit from {p} escaped before t = {t_max}")
        if status != 0:
            raise RuntimeError(f"integration from {p} stopped early ({_STATUS.get(status, status)})")
        at = dict(zip(ts, ys))
        for k, t in enumerate(t_grid):
            y = at[t]
            exp_sum[k] += math.exp(y[7])
            det_sum[k] += y[3] * y[6] - y[4] * y[5]
    n = len(pts)
    vf = [cell_area * s / n for s in exp_sum]
    vj = [cell_area * s / n for s in det_sum]
    err = max(abs(f - j) / abs(j) for f, j in zip(vf, vj)) if t_grid else 0.0
    return VolumeReport(t_grid, vf, vj, err)


@dataclass
class Reparametrization:
    samples: list          # (t, r) pairs
    points: list           # positions of the rescaled orbit
    spot_checks: list      # (t, r(t), position error)

    @property
    def max_spot_error(self) -> float:
        return max((e for _, _, e in self.spot_checks), default=0.0)


def reparametrize(f, md: MartinetData, p0, t_end: float, opts: IntegratorOpts | None = None,
                  check_times=(0.5, 1.0), backend=None) -> Reparametrization:
    """Relate the flow of f*Z to the flow of Z by the clock r' = f, r(0) = 0.

    At each check time the Z-orbit is re-integrated for time r(t) from p0
    and compared with the position reached by the rescaled orbit.
    """
    opts = opts or IntegratorOpts()
    if not isinstance(f, Poly):
        f = Poly.const(Fraction(f))     # floats convert exactly
    if f.evaluate(p0) <= 0:
        raise NonPositiveRateError(f"rate f = {f.evaluate(p0)} is not positive at the start point")
    V = md.Z.scale(f)
    prog = Program()
    for c in V.comps:
        prog.poly(c)
    fi = prog.poly(f)
    for i in range(3):
        prog.op_poly(i)
    prog.op_poly(fi)
    prog.project_onto(md.h)
    checks = [float(t) for t in check_times if 0 < t <= t_end]
    run_opts = IntegratorOpts(rel_tol=opts.rel_tol, abs_tol=opts.abs_tol, max_time=t_end,
                              max_steps=opts.max_steps, projection_tol=opts.projection_tol,
                              projection_max_iter=opts.projection_max_iter, stop_speed=0.0)
    ts, ys, term = _run_checked(prog, list(p0) + [0.0], t_end, run_opts, 1, checks, backend)
    for t, y in zip(ts, ys):
        if f.evaluate(y[:3]) <= 0:
            raise NonPositiveRateError(f"rate f became nonpositive at t = {t:.6g}")
    if term is not Termination.MaxTime:
        raise RuntimeError(f"rescaled orbit stopped early: {term.value}")
    at = dict(zip(ts, ys))
    zprog = _orbit_program(md.Z, None, md.h)
    spots = []
    for t in checks:
        y = at[t]
        r = y[3]
        zts, zys, zterm = _run_checked(zprog, list(p0) + [0.0], r, run_opts, 1, (), backend)
        if zterm is not Termination.MaxTime:
            raise RuntimeError(f"re-integration of Z stopped early: {zterm.value}")
        err = math.sqrt(sum((zys[-1][i] - y[i]) ** 2 for i in range(3)))
        spots.append((t, r, err))
    return Reparametrization([(t, y[3]) for t, y in zip(ts, ys)], [tuple(y[:3]) for y in ys], spots)
