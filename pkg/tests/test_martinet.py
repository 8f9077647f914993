import math

import numpy as np
import pytest

from martinetkit.examples import builtin
from martinetkit.flow import IntegratorOpts, integrate_orbit
from martinetkit.martinet import (DegenerateDistributionError, DegenerateSamplingError, Distribution,
                                  InvariantError, MartinetData, NoAdmissibleSamplesError, PathVerdict,
                                  Stratum, characteristic_field, check_bracket_generating,
                                  classify_point, compare_modulo, divergence_ratio_scan,
                                  is_singular_path, martinet_function, reduced_martinet, surface_scale)
from martinetkit.poly import Poly, divide_exact, parse
from martinetkit.vfield import VecField, lie_derivative

HEIS = builtin("heisenberg")
FLAT = builtin("martinet_flat")
LOOP = builtin("loop")
CONE = builtin("conical_frame")


def same_up_to_sign(p, q):
    return p == q or p == -q


def test_martinet_function_examples():
    assert martinet_function(HEIS).is_constant() and abs(martinet_function(HEIS).constant_value()) == 1
    assert same_up_to_sign(martinet_function(FLAT), parse("2*x"))
    assert same_up_to_sign(martinet_function(LOOP), parse("y^2 - x^2*(x+z)"))


def test_reduced_martinet_examples():
    assert reduced_martinet(parse("-2*x")) == parse("x")
    h = parse("y^2 - x^2*(x+z)")
    assert same_up_to_sign(reduced_martinet(h), h)
    assert same_up_to_sign(reduced_martinet(parse("x^2*(1-y)")), parse("x*(1-y)"))
    with pytest.raises(DegenerateDistributionError):
        reduced_martinet(Poly.zero())


def test_conical_frame_has_cone_as_surface():
    assert same_up_to_sign(reduced_martinet(martinet_function(CONE)), parse("z^2 - x^2 - y^2"))


def test_characteristic_field_examples():
    assert characteristic_field(HEIS, Poly.one()).is_zero()
    assert characteristic_field(FLAT, parse("x")) == VecField.parse(["0", "1", "x^2"])
    md = MartinetData.from_distribution(LOOP)
    assert md.Z.comps[0] == parse("2*y")
    assert md.Z.comps[2] == parse("2*y*(y^3/3 - x^2*y*(x+z))")


def test_loop_generator_orientation():
    md = MartinetData.from_distribution(LOOP)
    assert md.h == parse("y^2 - x^2*(x+z)")
    assert md.h == -reduced_martinet(md.h_raw)


def test_supplied_generator_must_match():
    bad = Distribution(LOOP.X, LOOP.Y, "loop", h=parse("y^2 - x^3"))
    with pytest.raises(InvariantError):
        MartinetData.from_distribution(bad)


def test_printed_characteristic_field_comparison():
    md = MartinetData.from_distribution(LOOP)
    rows = compare_modulo(LOOP.Z_reference, md.Z, md.h)
    verdict = {r["component"]: r["equal_mod_h"] for r in rows}
    assert verdict == {"x": True, "y": False, "z": True}


@pytest.mark.parametrize("D", [HEIS, FLAT, LOOP, CONE], ids=lambda d: d.name)
def test_tangency_certificate(D):
    md = MartinetData.from_distribution(D)
    divide_exact(lie_derivative(md.Z, md.h), md.h)


def test_collinear_frame_rejected():
    with pytest.raises(DegenerateDistributionError):
        Distribution(VecField.parse(["1", "x", "0"]), VecField.parse(["y", "x*y", "0"]))


def test_classify_examples():
    md = MartinetData.from_distribution(LOOP)
    assert classify_point(md, (-1, 0, 1)) is Stratum.Sigma2_tr
    assert classify_point(md, (0, 0, 1)) is Stratum.SingularLocus
    assert classify_point(md, (1, 0, 0)) is Stratum.OffSurface     # h = -1
    assert classify_point(md, (-1, 0, 1 + 1e-3)) is Stratum.OffSurface
    flat = MartinetData.from_distribution(FLAT)
    assert classify_point(flat, (0, 0.3, 0)) is Stratum.Sigma2_tr
    with pytest.raises(ValueError):
        classify_point(md, (0, 0, 0), tol=0)


def test_tangency_points_of_the_cone():
    md = MartinetData.from_distribution(CONE)
    # X.h = -2x and Y.h vanish at (0, y, +-y) only when the frame is tangent there
    p = (0.0, 0.5, 0.5)
    s = classify_point(md, p)
    z = math.sqrt(sum(v * v for v in md.Z(p)))
    if s in (Stratum.Sigma2_tan, Stratum.SingularLocus):
        assert z <= 1e-6 * surface_scale(md.h, p)


def test_bracket_generating_examples():
    assert check_bracket_generating(HEIS, (0, 0, 0), 2)
    assert not check_bracket_generating(FLAT, (0, 0, 0), 2)
    assert check_bracket_generating(FLAT, (0, 0, 0), 3)
    flat2 = Distribution(VecField.coordinate(1), VecField.coordinate(2))
    assert not check_bracket_generating(flat2, (0.3, 0.1, 0), 6)
    with pytest.raises(ValueError):
        check_bracket_generating(HEIS, (0, 0, 0), 1)


def test_swap_keeps_determinant_and_negates_z():
    # swapping flips both the column order and the bracket, so the signs cancel
    for D in (HEIS, FLAT, LOOP, CONE):
        S = D.swapped()
        assert martinet_function(S) == martinet_function(D)
        h = reduced_martinet(martinet_function(D))
        assert characteristic_field(S, h) == -characteristic_field(D, h)


@pytest.mark.parametrize("D", [FLAT, LOOP, CONE], ids=lambda d: d.name)
def test_zero_sets_agree(D):
    md = MartinetData.from_distribution(D)
    rng = np.random.default_rng(7)
    for p in rng.uniform(-1, 1, size=(200, 3)):
        a = abs(md.h_raw.evaluate(p)) <= 1e-9 * surface_scale(md.h_raw, p)
        b = abs(md.h.evaluate(p)) <= 1e-9 * surface_scale(md.h, p)
        assert a == b
    # and on points of the surface itself
    for p in [(0.0, 0.2, 0.7), (-0.5, 0.0, 0.5), (0.0, 0.0, 0.3)]:
        if abs(md.h.evaluate(p)) < 1e-12:
            assert abs(md.h_raw.evaluate(p)) < 1e-9


def test_scan_examples_and_prefix_property():
    flat = MartinetData.from_distribution(FLAT)
    r = divergence_ratio_scan(flat, [(-1, 1)] * 3, 500, seed=0)
    assert math.isfinite(r.sup_ratio) and r.samples_used == 500
    loop = MartinetData.from_distribution(LOOP)
    box = [(-1, -0.1), (-1, 1), (0.1, 1)]
    small = divergence_ratio_scan(loop, box, 200, seed=3)
    big = divergence_ratio_scan(loop, box, 500, seed=3)
    assert math.isfinite(big.sup_ratio)
    assert big.sup_ratio >= small.sup_ratio
    assert divergence_ratio_scan(loop, box, 200, seed=3) == small
    assert set(r.to_dict()) >= {"sup_ratio", "argmax", "n", "seed"}


def test_scan_without_admissible_samples():
    heis = MartinetData.from_distribution(HEIS)
    with pytest.raises(NoAdmissibleSamplesError):
        divergence_ratio_scan(heis, [(-1, 1)] * 3, 20)


def test_singular_path_examples():
    md = MartinetData.from_distribution(LOOP)
    const = [(0.0, (-1.0, 0.0, 1.0)), (1.0, (-1.0, 0.0, 1.0))]
    assert is_singular_path(md, LOOP, const) is PathVerdict.Singular
    seg = [(t, (0.2 * t - 0.5, 0.1, 0.3)) for t in np.linspace(0, 1, 11)]
    assert is_singular_path(md, LOOP, seg) is PathVerdict.NotInSigma
    tr = integrate_orbit(md, (-0.3, 0.0, 0.3), IntegratorOpts(max_time=5.0))
    path = list(zip(tr.times, tr.points))
    assert is_singular_path(md, LOOP, path, tol=1e-4) is PathVerdict.Singular


def test_horizontality_failure_on_surface():
    md = MartinetData.from_distribution(FLAT)
    # along x = 0 the frame spans d/dx and d/dy, so moving in z is not horizontal
    path = [(t, (0.0, 0.0, t)) for t in np.linspace(0, 1, 5)]
    assert is_singular_path(md, FLAT, path) is PathVerdict.NotHorizontal


def test_degenerate_sampling():
    md = MartinetData.from_distribution(LOOP)
    with pytest.raises(DegenerateSamplingError):
        is_singular_path(md, LOOP, [(0.0, (-1, 0, 1))])
    with pytest.raises(DegenerateSamplingError):
        is_singular_path(md, LOOP, [(0.0, (-1, 0, 1)), (0.0, (-1, 0, 1))])
    with pytest.raises(DegenerateSamplingError):
        is_singular_path(md, LOOP, [(0.0, (-1, 0, 1)), (1.0, (1, 0, -1))], max_step=0.5)


def test_distribution_json_roundtrip():
    d = LOOP.to_dict()
    again = Distribution.from_dict(d)
    assert again.X == LOOP.X and again.Y == LOOP.Y and again.h == LOOP.h
    with pytest.raises(KeyError):
        Distribution.from_dict({"X": ["1", "0", "0"]})
    with pytest.raises(ValueError):
        Distribution.from_dict({"X": ["1", "0"], "Y": ["0", "1", "x"]})
