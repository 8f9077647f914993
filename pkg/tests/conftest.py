from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from martinetkit.poly import Poly
from martinetkit.vfield import VecField

settings.register_profile("repo", max_examples=100, derandomize=True, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

exponents = st.tuples(*[st.integers(0, 3)] * 3)
coefficients = st.fractions(min_value=-5, max_value=5, max_denominator=4).filter(lambda c: c != 0)


@st.composite
def polys(draw, max_terms=4):
    return Poly(draw(st.dictionaries(exponents, coefficients, max_size=max_terms)))


@st.composite
def small_polys(draw):
    terms = draw(st.dictionaries(st.tuples(*[st.integers(0, 2)] * 3), coefficients, max_size=3))
    return Poly({e: c for e, c in terms.items() if sum(e) <= 2})


@st.composite
def fields(draw):
    return VecField([draw(small_polys()) for _ in range(3)])


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for mark in report.keywords:
        if mark.startswith("criterion_"):
            ACCEPTANCE.setdefault(int(mark.split("_")[1]), []).append((report.outcome, report.nodeid))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        runs = ACCEPTANCE[k]
        verdict = "PASS" if all(o == "passed" for o, _ in runs) else "FAIL"
        names = ", ".join(n.split("::")[-1] for _, n in runs)
        terminalreporter.write_line(f"criterion {k:>2}: {verdict}  {names}")


def pytest_configure(config):
    for k in range(1, 12):
        config.addinivalue_line("markers", f"criterion_{k}: acceptance criterion {k}")


@pytest.fixture
def F():
    return Fraction
