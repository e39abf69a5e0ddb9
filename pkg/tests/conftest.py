from __future__ import annotations

import math
import os
import sys
import time
from fractions import Fraction as Q

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from abconvex import INF, NEG_INF, DomainSpec, Function, FunctionFamily  # noqa: E402

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("ci")


# --- conversion to the oracle's plain lists ---------------------------------


def plain(v):
    if v == INF:
        return math.inf
    if v == NEG_INF:
        return -math.inf
    return Q(v)


def values(f: Function) -> list:
    return [plain(v) for v in f.form]


def rows(L: FunctionFamily) -> list[list]:
    return [values(m) for m in L.members]


def from_plain(v):
    if v == math.inf:
        return INF
    if v == -math.inf:
        return NEG_INF
    return Q(v)


# --- strategies --------------------------------------------------------------

small = st.integers(-4, 4)


@st.composite
def grids(draw, min_size=3, max_size=6):
    n = draw(st.integers(min_size, max_size))
    lo = draw(st.integers(-3, 0))
    return DomainSpec.grid(lo, lo + n - 1)


@st.composite
def tables(draw, X: DomainSpec, allow_inf=False):
    n = len(X.points)
    vals = draw(st.lists(small, min_size=n, max_size=n))
    out = [Q(v) for v in vals]
    if allow_inf:
        mask = draw(st.lists(st.booleans(), min_size=n, max_size=n))
        keep = draw(st.integers(0, n - 1))
        out = [INF if m and i != keep else v for i, (v, m) in enumerate(zip(out, mask))]
    return Function(X, tuple(out))


@st.composite
def families(draw, X: DomainSpec, min_size=1, max_size=5, with_zero=False):
    k = draw(st.integers(min_size, max_size))
    fs = [draw(tables(X)) for _ in range(k)]
    if with_zero:
        fs.insert(0, Function(X, (Q(0),) * len(X.points), "0"))
    return FunctionFamily.build(X, fs)


@st.composite
def finite_instances(draw, allow_inf=True, with_zero=False):
    """(X, f, L) with f finite at some point."""
    X = draw(grids())
    f = draw(tables(X, allow_inf=allow_inf))
    L = draw(families(X, with_zero=with_zero))
    return X, f, L


@pytest.fixture
def line():
    return DomainSpec.real_line()


@pytest.fixture
def grid5():
    return DomainSpec.grid(-2, 2)


# --- whole-run time budget for the acceptance run ---------------------------------

CI_BUDGET_SECONDS = 60
_start = {}


def pytest_sessionstart(session):
    _start["t"] = time.perf_counter()


def _ran_acceptance(session) -> bool:
    return any("test_acceptance" in item.nodeid for item in session.items)


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _start.get("t", time.perf_counter())
    _start["elapsed"] = elapsed
    if _ran_acceptance(session) and elapsed > CI_BUDGET_SECONDS and exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    session = terminalreporter._session
    if session is None or not _ran_acceptance(session):
        return
    elapsed = _start.get("elapsed", time.perf_counter() - _start.get("t", 0))
    ok = elapsed <= CI_BUDGET_SECONDS
    terminalreporter.write_line(
        f"ACCEPTANCE criterion 10: {'PASS' if ok else 'FAIL'} full CI suite wall time {elapsed:.1f}s (budget {CI_BUDGET_SECONDS}s)"
    )
