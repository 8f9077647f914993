"""Invariant suite shared by `martinetkit selftest` and the acceptance tests.

Every check returns a CheckResult; randomized checks draw their cases from
a fixed seed so a rerun with the same seed repeats exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import blowup as bl
from .examples import BUILTIN_NAMES, builtin_data
from .flow import liouville_check
from .martinet import (Distribution, MartinetData, characteristic_field, divergence_ratio_scan,
                       martinet_function, reduced_martinet)
from .poly import Poly, divide_exact, parse
from .vfield import VecField, divergence_density, lie_bracket, lie_derivative

__all__ = ["CheckResult", "random_poly", "random_field", "CHECKS", "run_selftest"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "cases": self.cases, "detail": self.detail}


def random_poly(rng: np.random.Generator, max_deg: int = 3, max_terms: int = 4) -> Poly:
    terms = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        d = int(rng.integers(0, max_deg + 1))
        a = int(rng.integers(0, d + 1))
        b = int(rng.integers(0, d - a + 1))
        num, den = int(rng.integers(-5, 6)), int(rng.integers(1, 4))
        if num:
            terms[(a, b, d - a - b)] = terms.get((a, b, d - a - b), 0) + Fraction(num, den)
    return Poly(terms)


def random_field(rng: np.random.Generator, max_deg: int = 2) -> VecField:
    return VecField([random_poly(rng, max_deg, 3) for _ in range(3)])


def _rng(seed, salt):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(salt,)))


def _all_charts():
    out = []
    for center in ((1, 2), (1, 3), (2, 3), (1, 2, 3)):
        for j in center:
            for s in (1, -1):
                out.append(bl.chart_map(center, j, s))
    return out


def check_builtins(seed, cases, data=None):
    raw = builtin_data(data)
    results = []
    for name in BUILTIN_NAMES:
        try:
            rec = raw[name]
            D = Distribution.from_dict(rec)
            exp = rec.get("expected", {})
            problems = []
            h = reduced_martinet(martinet_function(D))
            if "h" in exp and h != parse(exp["h"]):
                problems.append(f"reduced determinant {h} != expected {exp['h']}")
            md = MartinetData.from_distribution(D)
            if "Z" in exp and md.Z != VecField.parse(exp["Z"]):
                problems.append(f"Z = {md.Z} differs from expected")
            if "bracket" in exp and lie_bracket(D.X, D.Y) != VecField.parse(exp["bracket"]):
                problems.append("bracket differs from expected")
            results.append(CheckResult(f"builtin:{name}", not problems, 1, "; ".join(problems)))
        except Exception as exc:  # noqa: BLE001 - any failure is a named check failure
            results.append(CheckResult(f"builtin:{name}", False, 1, f"{type(exc).__name__}: {exc}"))
        try:
            D = Distribution.from_dict(raw[name])
            md = MartinetData.from_distribution(D)
            divide_exact(lie_derivative(characteristic_field(D, md.h), md.h), md.h)
            results.append(CheckResult(f"tangency:{name}", True, 1))
        except Exception as exc:  # noqa: BLE001
            results.append(CheckResult(f"tangency:{name}", False, 1, f"{type(exc).__name__}: {exc}"))
    return results


def check_ring_axioms(seed, cases):
    rng = _rng(seed, 1)
    for i in range(cases):
        p, q, r = (random_poly(rng) for _ in range(3))
        if p + q != q + p or p * q != q * p:
            return f"commutativity fails for case {i}"
        if (p + q) + r != p + (q + r) or (p * q) * r != p * (q * r):
            return f"associativity fails for case {i}"
        if p * (q + r) != p * q + p * r:
            return f"distributivity fails for case {i}"
        if not (p - p).is_zero() or p * Poly.one() != p:
            return f"identities fail for case {i}"
        if not q.is_zero() and divide_exact(p * q, q) != p:
            return f"exact division fails for case {i}"
    return None


def check_parse_roundtrip(seed, cases):
    rng = _rng(seed, 2)
    for i in range(cases):
        p = random_poly(rng, 4, 5)
        if parse(str(p)) != p:
            return f"parse(str(p)) != p for {p}"
    return None


def check_leibniz(seed, cases):
    rng = _rng(seed, 3)
    for i in range(cases):
        p, q = random_poly(rng), random_poly(rng)
        V = random_field(rng)
        v = int(rng.integers(1, 4))
        if (p * q).diff(v) != p.diff(v) * q + p * q.diff(v):
            return f"product rule for d/dx{v} fails in case {i}"
        if lie_derivative(V, p * q) != lie_derivative(V, p) * q + p * lie_derivative(V, q):
            return f"derivation rule fails in case {i}"
        W = random_field(rng)
        if lie_bracket(V, W.scale(p)) != lie_bracket(V, W).scale(p) + W.scale(lie_derivative(V, p)):
            return f"bracket Leibniz rule fails in case {i}"
    return None


def check_jacobi(seed, cases):
    rng = _rng(seed, 4)
    for i in range(cases):
        A, B, C = (random_field(rng) for _ in range(3))
        s = lie_bracket(A, lie_bracket(B, C)) + lie_bracket(B, lie_bracket(C, A)) + lie_bracket(C, lie_bracket(A, B))
        if not s.is_zero():
            return f"Jacobi identity fails in case {i}"
        if lie_bracket(A, B) != -lie_bracket(B, A):
            return f"antisymmetry fails in case {i}"
    return None


def check_divergence_shift(seed, cases):
    """div of Z for density a*rho versus density rho, and of b*Z versus Z."""
    rng = _rng(seed, 5)
    for i in range(cases):
        Z = random_field(rng)
        e = [int(v) for v in rng.integers(0, 3, size=3)]
        alpha = Poly.monomial(e, int(rng.integers(1, 4)))
        rho = Poly.one() + random_poly(rng, 2, 3) * random_poly(rng, 2, 3)
        beta = random_poly(rng)
        p = tuple(rng.uniform(0.5, 1.5, size=3))
        if abs(rho.evaluate(p)) < 0.1:
            rho = rho + Poly.const(10)
        lhs = divergence_density(Z, alpha * rho, p)
        rhs = divergence_density(Z, rho, p) + lie_derivative(Z, alpha).evaluate(p) / alpha.evaluate(p)
        if abs(lhs - rhs) > 1e-10 * max(1.0, abs(rhs)):
            return f"density shift fails in case {i}: {lhs} vs {rhs}"
        lhs = divergence_density(Z.scale(beta), rho, p)
        rhs = beta.evaluate(p) * divergence_density(Z, rho, p) + lie_derivative(Z, beta).evaluate(p)
        if abs(lhs - rhs) > 1e-10 * max(1.0, abs(rhs)):
            return f"scaling shift fails in case {i}: {lhs} vs {rhs}"
    return None


def check_pullback_roundtrip(seed, cases):
    rng = _rng(seed, 6)
    charts = _all_charts()
    worst = 0.0
    for i in range(cases):
        c = charts[i % len(charts)]
        V = random_field(rng)
        Vs = bl.pullback_vecfield(V, c)
        for _ in range(5):
            p = list(rng.uniform(-1.0, 1.0, size=3))
            p[c.j - 1] = float(rng.uniform(0.2, 1.0))
            q, w = bl.pushforward_at(Vs, c, p)
            v = V(q)
            err = max(abs(a - b) for a, b in zip(w, v)) / max(1.0, max(abs(a) for a in v))
            worst = max(worst, err)
            if err > 1e-10:
                return f"round trip error {err:.3e} in case {i} (chart {c.to_dict()})"
    return None


def check_pullback_bracket(seed, cases):
    rng = _rng(seed, 7)
    charts = _all_charts()
    for i in range(cases):
        c = charts[i % len(charts)]
        V, W = random_field(rng), random_field(rng)
        if bl.pullback_vecfield(lie_bracket(V, W), c) != lie_bracket(bl.pullback_vecfield(V, c),
                                                                     bl.pullback_vecfield(W, c)):
            return f"pullback does not commute with the bracket in case {i} (chart {c.to_dict()})"
    return None


def check_chart_jacobians(seed, cases):
    for c in _all_charts():
        bl.volume_factor(c)
    return None


def check_conical_blowup(seed, cases, data=None):
    D = Distribution.from_dict(builtin_data(data)["conical_frame"])
    h = parse("x^2 + y^2 - z^2")
    c = bl.chart_map((1, 2, 3), 3, 1)
    tr = bl.strict_transform(h, c)
    if tr.alpha != 2 or c.beta != 2 or tr.strict != parse("x^2 + y^2 - 1"):
        return f"conical transform gives alpha={tr.alpha}, strict={tr.strict}"
    if tr.total != parse("z^2") * tr.strict:
        return "total transform does not factor"
    bl.transformed_characteristic(D, h, c)
    return None


def check_div_compat(seed, cases, data=None):
    raw = builtin_data(data)
    for name, c in (("conical_frame", bl.chart_map((1, 2, 3), 3, 1)), ("loop", bl.chart_map((1, 2), 1, 1))):
        D = Distribution.from_dict(raw[name])
        md = MartinetData.from_distribution(D)
        r = bl.verify_div_compat(D, md.h, c, n=max(cases, 200), seed=seed)
        if r.max_abs_err > 1e-6 or r.n < 200:
            return f"{name}: max error {r.max_abs_err:.3e} over {r.n} samples"
    return None


def check_liouville(seed, cases):
    V = VecField.parse(["x", "y", "0"])
    rng = _rng(seed, 8)
    S0 = [tuple(rng.uniform(-1, 1, size=2)) for _ in range(10)]
    rep = liouville_check(V, S0, [0.25, 0.5, 1.0])
    bad = [abs(v / math.exp(2 * t) - 1) for v, t in zip(rep.vol_formula + rep.vol_jacobian, rep.t_grid * 2)]
    if rep.max_rel_err > 1e-8 or max(bad) > 1e-8:
        return f"volume estimates off by {max(rep.max_rel_err, max(bad)):.3e}"
    return None


def check_scan_determinism(seed, cases, data=None):
    md = MartinetData.from_distribution(Distribution.from_dict(builtin_data(data)["martinet_flat"]))
    box = [(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)]
    a = divergence_ratio_scan(md, box, 50, seed)
    b = divergence_ratio_scan(md, box, 50, seed)
    if a != b:
        return "two scans with the same seed differ"
    return None


# (name, function, takes data override)
CHECKS = [
    ("ring_axioms", check_ring_axioms, False),
    ("parse_roundtrip", check_parse_roundtrip, False),
    ("leibniz_rules", check_leibniz, False),
    ("jacobi_identity", check_jacobi, False),
    ("divergence_shift", check_divergence_shift, False),
    ("pullback_roundtrip", check_pullback_roundtrip, False),
    ("pullback_bracket", check_pullback_bracket, False),
    ("chart_jacobians", check_chart_jacobians, False),
    ("conical_blowup", check_conical_blowup, True),
    ("div_compat", check_div_compat, True),
    ("liouville_expansion", check_liouville, False),
    ("scan_determinism", check_scan_determinism, True),
]


def run_check(name: str, seed: int = 0, cases: int = 100, data=None) -> CheckResult:
    for n, fn, takes_data in CHECKS:
        if n == name:
            try:
                msg = fn(seed, cases, data) if takes_data else fn(seed, cases)
            except Exception as exc:  # noqa: BLE001
                msg = f"{type(exc).__name__}: {exc}"
            return CheckResult(name, msg is None, cases, msg or "")
    raise KeyError(name)


def run_selftest(seed: int = 0, cases: int = 100, data=None) -> list:
    results = check_builtins(seed, cases, data)
    results += [run_check(n, seed, cases, data) for n, _, _ in CHECKS]
    return results
