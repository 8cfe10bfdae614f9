"""Shared strategies and the acceptance summary printed after the run."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from keller_lab.poly import BivarPoly, PolyMap

settings.register_profile("lab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or rep.failed:
        prev = _ACCEPTANCE.get(number)
        passed = rep.passed and (prev is None or prev[1])
        notes = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        _ACCEPTANCE[number] = (title, passed, notes)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, notes = _ACCEPTANCE[number]
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}"
        if notes:
            line += f"  [{notes}]"
        terminalreporter.write_line(line)


# --------------------------------------------------------------------------
# hypothesis strategies
# --------------------------------------------------------------------------

small_ints = st.integers(min_value=-4, max_value=4)
small_fracs = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4))


@st.composite
def polys(draw, max_degree: int = 3, coeffs=small_ints):
    monos = [(i, d - i) for d in range(max_degree + 1) for i in range(d + 1)]
    chosen = draw(st.lists(st.sampled_from(monos), max_size=6, unique=True))
    return BivarPoly({m: draw(coeffs) for m in chosen})


@st.composite
def maps(draw, max_degree: int = 3):
    return PolyMap(draw(polys(max_degree)), draw(polys(max_degree)))


@st.composite
def shear_coeffs(draw, max_degree: int = 3):
    return draw(st.lists(small_ints, min_size=1, max_size=max_degree + 1))


points = st.tuples(small_fracs, small_fracs)
