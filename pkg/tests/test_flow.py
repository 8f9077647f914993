import math

import numpy as np
import pytest

from martinetkit import blowup as bl
from martinetkit.examples import builtin
from martinetkit.flow import (IntegratorOpts, NonPositiveRateError, OffSurfaceError, Termination,
                              integrate_field, integrate_orbit, liouville_check, reparametrize,
                              surface_divergence)
from martinetkit.martinet import MartinetData, divergence_ratio_scan, surface_scale
from martinetkit.poly import Poly, parse
from martinetkit.surface import NotTangentError, SurfaceDivergence
from martinetkit.vfield import VecField

LOOP = MartinetData.from_distribution(builtin("loop"))
FLAT = MartinetData.from_distribution(builtin("martinet_flat"))
PLANAR_LOOP = VecField.parse(["-2*x*y", "-(3*x^3 + 2*y^2)", "0"])


def test_flat_orbit_is_a_line():
    tr = integrate_orbit(FLAT, (0.0, 0.3, 0.0), IntegratorOpts(max_time=2.0))
    assert tr.termination is Termination.MaxTime
    assert tr.times[-1] == 2.0
    assert abs(tr.arc_length - 2.0) <= 1e-10
    for t, p in tr.samples:
        assert abs(p[0]) <= 1e-12 and abs(p[2]) <= 1e-12
        assert abs(abs(p[1] - 0.3) - t) <= 1e-9


def test_loop_orbit_monotone():
    tr = integrate_orbit(LOOP, (-0.3, 0.0, 0.3), IntegratorOpts(max_time=1e4))
    assert tr.termination is Termination.SpeedFloor
    pts = tr.points
    for a, b in zip(pts, pts[1:]):
        assert b[0] >= a[0] and b[2] <= a[2]
    assert all(p[0] <= 0 for p in pts)
    assert all(b > a for a, b in zip(tr.times, tr.times[1:]))


def test_projection_keeps_samples_on_surface():
    opts = IntegratorOpts(max_time=20.0)
    tr = integrate_orbit(LOOP, (-0.3, 0.0, 0.3), opts)
    for p in tr.points:
        assert abs(LOOP.h.evaluate(p)) <= opts.projection_tol * surface_scale(LOOP.h, p)


def test_speed_floor_at_start():
    tr = integrate_orbit(FLAT, (0.0, 0.3, 0.0), IntegratorOpts(stop_speed=10.0))
    assert tr.termination is Termination.SpeedFloor
    assert len(tr.samples) == 1


def test_off_surface_start_rejected():
    with pytest.raises(OffSurfaceError):
        integrate_orbit(LOOP, (0.5, 0.5, 0.0))
    with pytest.raises(ValueError):
        integrate_orbit(LOOP, (-0.3, 0.0, 0.3), direction=0)


def test_options_validated():
    with pytest.raises(ValueError):
        IntegratorOpts(rel_tol=0)
    with pytest.raises(ValueError):
        IntegratorOpts(max_steps=0)


def test_arc_length_additivity():
    opts = IntegratorOpts(max_time=2.0)
    full = integrate_orbit(LOOP, (-0.3, 0.0, 0.3), opts)
    first = integrate_orbit(LOOP, (-0.3, 0.0, 0.3), IntegratorOpts(max_time=1.0))
    second = integrate_orbit(LOOP, first.end, IntegratorOpts(max_time=1.0))
    tol = 2 * (opts.rel_tol * full.arc_length + opts.abs_tol)
    assert abs(first.arc_length + second.arc_length - full.arc_length) <= max(tol, 1e-9)


def test_reversibility():
    p0 = (-0.3, 0.0, 0.3)
    fwd = integrate_orbit(LOOP, p0, IntegratorOpts(max_time=1.0))
    back = integrate_orbit(LOOP, fwd.end, IntegratorOpts(max_time=1.0), direction=-1)
    assert max(abs(a - b) for a, b in zip(back.end, p0)) <= 1e-5


def test_backends_agree():
    opts = IntegratorOpts(max_time=5.0)
    a = integrate_orbit(LOOP, (-0.3, 0.0, 0.3), opts, backend="python")
    b = integrate_orbit(LOOP, (-0.3, 0.0, 0.3), opts, backend="compiled")
    assert a.times == b.times and a.points == b.points and a.cum_div == b.cum_div


def test_csv_columns():
    tr = integrate_orbit(LOOP, (-0.3, 0.0, 0.3), IntegratorOpts(max_time=1.0))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,x,y,z,speed,h_residual,cum_length,cum_div"
    assert len(lines) == len(tr.times) + 1


def test_divergence_transport_bound():
    tr = integrate_orbit(LOOP, (-0.3, 0.0, 0.3), IntegratorOpts(max_time=3.0))
    box = [(-0.35, -0.04), (-0.1, 0.1), (0.25, 0.35)]
    assert all(lo <= v <= hi for p in tr.points for v, (lo, hi) in zip(p, box))
    K = divergence_ratio_scan(LOOP, box, 500, seed=0).sup_ratio
    assert abs(tr.div_integral) <= K * tr.arc_length


def test_conical_correction_vanishes():
    D = builtin("conical_frame")
    c = bl.chart_map((1, 2, 3), 3, 1)
    h = parse("x^2 + y^2 - z^2")
    tc = bl.transformed_characteristic(D, h, c)
    sd = SurfaceDivergence(tc.Ztilde, tc.strict)
    # |grad| of the strict transform is 4 on its zero set
    for th in np.linspace(0, 2 * math.pi, 13):
        p = (math.cos(th), math.sin(th), 0.7)
        assert abs(sd.grad_sq.evaluate(p) - 4.0) <= 1e-12
        assert abs(sd.correction(p)) <= 1e-12


def test_planar_surface_divergence():
    Z = VecField.parse(["x*y", "x^2 - y", "0"])
    h = parse("z")
    for p in [(0.3, -0.2, 0.0), (1.0, 2.0, 0.0)]:
        assert surface_divergence(Z, p, h=h) == pytest.approx(p[1] - 1.0, abs=1e-14)


def test_radial_field_not_tangent_to_sphere():
    with pytest.raises(NotTangentError):
        surface_divergence(VecField.parse(["x", "y", "z"]), (1.0, 0.0, 0.0), h=parse("x^2 + y^2 + z^2 - 1"))


def test_surface_divergence_off_surface():
    with pytest.raises(OffSurfaceError):
        surface_divergence(LOOP, (0.5, 0.5, 0.0))


def test_liouville_expansion():
    rep = liouville_check(VecField.parse(["x", "y", "0"]), [(0.1, 0.2), (-0.3, 0.5), (0.7, -0.4)],
                          [0.0, 0.25, 0.5, 1.0])
    assert rep.max_rel_err <= 1e-8
    for t, a, b in zip(rep.t_grid, rep.vol_formula, rep.vol_jacobian):
        assert abs(a / math.exp(2 * t) - 1) <= 1e-8 and abs(b / math.exp(2 * t) - 1) <= 1e-8


def test_liouville_rotation():
    rep = liouville_check(VecField.parse(["y", "-x", "0"]), [(0.5, 0.0), (0.0, 1.0)], [0.5, 1.0, 3.0])
    for a, b in zip(rep.vol_formula, rep.vol_jacobian):
        assert a == pytest.approx(1.0, abs=1e-12)
        assert b == pytest.approx(1.0, abs=1e-8)


def loop_grid():
    return [(x, y) for x in np.linspace(-0.4, -0.2, 5) for y in np.linspace(0.05, 0.15, 4)]


def test_liouville_planar_loop_field():
    S0 = loop_grid()
    assert len(S0) == 20
    rep = liouville_check(PLANAR_LOOP, S0, [0.5, 1.0])
    assert rep.max_rel_err <= 1e-5
    assert all(v > 0 for v in rep.vol_formula + rep.vol_jacobian)


def test_liouville_inputs_validated():
    with pytest.raises(ValueError):
        liouville_check(PLANAR_LOOP, [], [1.0])
    with pytest.raises(ValueError):
        liouville_check(PLANAR_LOOP, [(0.1, 0.1), (0.1, 0.1)], [1.0])
    with pytest.raises(ValueError):
        liouville_check(VecField.parse(["x", "y", "z"]), [(0.1, 0.1)], [1.0])


def test_log_det_derivative_matches_divergence():
    # finite differences of log det J along the orbit against div V at the midpoint
    V = PLANAR_LOOP
    div = parse("-2*y - 4*y")
    h = 1e-3
    p = (-0.3, 0.1)
    grid = [k * h for k in range(0, 201)]
    for S in ([p],):
        rep = liouville_check(V, S, grid)
        ts, pts, *_ = integrate_field(V, (p[0], p[1], 0.0), IntegratorOpts(max_time=grid[-1], stop_speed=0.0),
                                      stops=grid)
        at = dict(zip(ts, pts))
        for k in range(1, len(grid) - 1, 20):
            fd = (math.log(rep.vol_jacobian[k + 1]) - math.log(rep.vol_jacobian[k - 1])) / (2 * h)
            assert abs(fd - div.evaluate(at[grid[k]])) <= 1e-4


def test_reparametrize_constant_rates():
    r1 = reparametrize(1, LOOP, (-0.3, 0.0, 0.3), 1.0)
    # the clock is summed with the RK weights, so r(t) = t up to a few ulps
    assert all(abs(r - t) <= 4 * math.ulp(max(t, 1.0)) for t, r in r1.samples)
    r2 = reparametrize(2, LOOP, (-0.3, 0.0, 0.3), 1.0)
    assert all(abs(r - 2 * t) <= 1e-9 for t, r in r2.samples)


def test_reparametrize_to_planar_clock():
    rep = reparametrize(parse("-x"), LOOP, (-0.3, 0.0, 0.3), 1.0, check_times=(0.5, 1.0))
    assert [t for t, _, _ in rep.spot_checks] == [0.5, 1.0]
    assert rep.max_spot_error <= 1e-6
    rs = [r for _, r in rep.samples]
    assert all(b > a for a, b in zip(rs, rs[1:]))


def test_reparametrize_rejects_nonpositive_rate():
    with pytest.raises(NonPositiveRateError):
        reparametrize(parse("x"), LOOP, (-0.3, 0.0, 0.3), 1.0)
    with pytest.raises(NonPositiveRateError):
        reparametrize(Poly.const(-1), LOOP, (-0.3, 0.0, 0.3), 1.0)
