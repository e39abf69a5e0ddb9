"""Acceptance criteria 1-10, one printed PASS/FAIL line each.

Random instances here come from seeded ``random.Random`` streams so that the
counts are fixed; the brute-force oracle supplies the expected sets.
"""

from __future__ import annotations

import json
import random
import subprocess
import sys
import time
from fractions import Fraction as Q

import pytest

import oracle
from abconvex import (
    EQUAL,
    HOLDS,
    INF,
    STRICT,
    DomainSpec,
    Function,
    FunctionFamily,
    SupportSet,
    co_set,
    composition_subdiff_verify,
    epi_conjugate_check,
    family_from_texts,
    family_pin,
    hull_laws_check,
    is_maximal_within,
    is_monotone,
    max_rule_verify,
    moreau_verify,
    restriction_check,
    run_scenario,
    separate_sets,
    shift_rule_check,
    subdifferential,
    subdifferential_operator,
    sum_rule_verify,
    bronsted_rockafellar_search,
    inverse_operator,
    combine_operators,
)
from conftest import rows, values


@pytest.fixture
def record(capsys):
    def emit(n: int, ok: bool, seconds: float, text: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE criterion {n:>2}: {'PASS' if ok else 'FAIL'} ({seconds:.2f}s) {text}")

    return emit


# --- seeded random instances -------------------------------------------------------


def rand_grid(rng):
    lo = rng.randint(-3, 0)
    return DomainSpec.grid(lo, lo + rng.randint(2, 5))


def rand_table(rng, X, inf_rate=0.0):
    vals = [Q(rng.randint(-8, 8), rng.choice((1, 2))) for _ in X.points]
    if inf_rate:
        keep = rng.randrange(len(vals))
        vals = [INF if i != keep and rng.random() < inf_rate else v for i, v in enumerate(vals)]
    return Function(X, tuple(vals))


def rand_family(rng, X, lo=1, hi=5):
    return FunctionFamily.build(X, [rand_table(rng, X) for _ in range(rng.randint(lo, hi))])


def rand_point(rng, *fs):
    common = sorted(set.intersection(*(set(f.domain_indices()) for f in fs)))
    return rng.choice(common) if common else None


# --- 1 and 2: the two figures -----------------------------------------------------------


def test_criterion_01_figure_one_regions(record):
    t0 = time.perf_counter()
    rep = run_scenario("fig1-separation")
    H = family_from_texts(["-abs(x-1)+2", "-abs(x+1)+2", "-abs(x)+2", "0"], DomainSpec.real_line())
    A, B = SupportSet(H, frozenset({0, 1})), SupportSet(H, frozenset({2, 3}))
    up, down = separate_sets(H, A, B), separate_sets(H, B, A)
    got = (
        [str(p.region) for _, p in up.regions],
        [str(p.region) for _, p in down.regions],
        up.point,
        down.point,
    )
    want = (["(-1/2,1/2)", "(-inf,-3) U (3,inf)"], ["(1/2,3)", "(-3,-1/2)"], None, None)
    dt = time.perf_counter() - t0
    ok = got == want and rep.status == "pass" and dt < 1
    record(1, ok, dt, "Fig. 1 strict regions exact; neither set separates from the other")
    assert ok, got


def test_criterion_02_figure_two_witness(record):
    t0 = time.perf_counter()
    rep = run_scenario("fig2-maxrule")
    line = DomainSpec.real_line()
    G = family_from_texts(["x", "-x"], line)
    L = family_from_texts(["x", "-x", "max(0,x)", "min(0,x)", "0"], line)
    direct = max_rule_verify(G, L, 1)
    w = direct.witnesses[0]
    dt = time.perf_counter() - t0
    ok = (
        rep.status == "pass"
        and direct.conclusion == STRICT
        and w["member"] == "(max(0,x)) - 1"
        and w["point"] == "-1"
        and dt < 1
    )
    record(2, ok, dt, "Fig. 2 max rule strict, u = max(0,x)-1 witnessed at y = -1")
    assert ok, direct.to_json()


# --- 3 to 8: calculus ------------------------------------------------------------------


def test_criterion_03_moreau(record):
    t0 = time.perf_counter()
    rng = random.Random(3)
    checked = bad = 0
    while checked < 150:
        X = rand_grid(rng)
        f, L = rand_table(rng, X, 0.3), rand_family(rng, X)
        i = rand_point(rng, f)
        rep = moreau_verify(f, L, X.points[i])
        sub = oracle.subdifferential(values(f), rows(L), i)
        for k, l in enumerate(rows(L)):
            eq = oracle.conjugate(values(f), l) + values(f)[i] == l[i]
            bad += eq != (k in sub)
        bad += rep.conclusion != EQUAL
        checked += 1
    dt = time.perf_counter() - t0
    ok = bad == 0 and checked >= 100 and dt < 10
    record(3, ok, dt, f"Moreau equivalence on {checked} random instances, {bad} violations")
    assert ok


def test_criterion_04_hull_laws(record):
    t0 = time.perf_counter()
    rng = random.Random(4)
    bad = 0
    for _ in range(80):
        X = rand_grid(rng)
        H = rand_family(rng, X, 2, 6)
        sets = [frozenset(k for k in range(len(H)) if rng.random() < 0.5) for _ in range(3)]
        psets = [frozenset(j for j in range(len(X)) if rng.random() < 0.5) for _ in range(3)]
        f = rand_table(rng, X)
        rep = hull_laws_check(H, sets + [sets[0] | sets[1]], psets + [psets[0] | psets[1]], f, [0, 1, 2])
        bad += rep.conclusion != EQUAL
        # independent check of the set hull on the first set
        if sets[0]:
            bad += co_set(H, SupportSet(H, sets[0])).indices != oracle.co_set(rows(H), sets[0])
    fig = hull_laws_check(
        family_from_texts(["-abs(x-1)+2", "-abs(x+1)+2", "-abs(x)+2", "0"], DomainSpec.real_line()),
        [{0, 1}, {2, 3}, {0}, set()],
    )
    bad += fig.conclusion != EQUAL
    dt = time.perf_counter() - t0
    record(4, bad == 0, dt, f"hull laws on 80 random families plus Fig. 1, {bad} violations")
    assert bad == 0


def test_criterion_05_epigraph_conjugate(record):
    t0 = time.perf_counter()
    rng = random.Random(5)
    bad = boundary = 0
    for _ in range(80):
        X = rand_grid(rng)
        f, L = rand_table(rng, X, 0.3), rand_family(rng, X)
        samples = [(rng.randrange(len(L)), Q(rng.randint(-10, 10))) for _ in range(4)]
        bad += epi_conjugate_check(f, L, samples).conclusion != EQUAL
        for l in rows(L):
            c = oracle.conjugate(values(f), l)
            for cc, expected in ((c, True), (c - 1, False)):
                below = all(v - cc <= w for v, w in zip(l, values(f)))
                bad += below != expected
                boundary += 1
    dt = time.perf_counter() - t0
    record(5, bad == 0, dt, f"epi f* = supp over shifted family, {boundary} boundary pairs, {bad} violations")
    assert bad == 0


def test_criterion_06_sum_rule(record):
    t0 = time.perf_counter()
    X = DomainSpec.grid(-2, 2)
    L = family_from_texts(["0", "x", "-x"], X)
    fx = lambda t: family_from_texts([t], X)[0]  # noqa: E731
    good = sum_rule_verify(fx("abs(x)"), L, fx("abs(x-1)"), L, 0)
    fail = sum_rule_verify(fx("max(0,x)"), L, fx("max(x,-2*x)"), L, 0)
    fixtures_ok = (
        good.hypothesis == HOLDS and good.conclusion == EQUAL
        and fail.hypothesis != HOLDS and fail.conclusion == STRICT and fail.status == "pass"
    )
    rng = random.Random(6)
    bad = held = runs = 0
    while runs < 120:
        Y = rand_grid(rng)
        f1, f2 = rand_table(rng, Y, 0.2), rand_table(rng, Y, 0.2)
        L1, L2 = rand_family(rng, Y, 1, 4), rand_family(rng, Y, 1, 4)
        i = rand_point(rng, f1, f2)
        if i is None:
            continue
        runs += 1
        left, right = oracle.sum_rule_sets(values(f1), rows(L1), values(f2), rows(L2), i)
        exact = oracle.inf_convolution_exact(values(f1), rows(L1), values(f2), rows(L2))
        rep = sum_rule_verify(f1, L1, f2, L2, Y.points[i])
        held += exact
        bad += not right <= left
        bad += exact and left != right
        bad += (rep.hypothesis == HOLDS) != exact or rep.status != "pass"
    dt = time.perf_counter() - t0
    ok = fixtures_ok and bad == 0
    record(6, ok, dt, f"sum rule fixtures pass/fail as designed; {runs} random runs ({held} under the hypothesis), {bad} violations")
    assert ok


def test_criterion_07_composition(record):
    t0 = time.perf_counter()
    rng = random.Random(7)
    bad = onto_runs = runs = 0
    while runs < 120:
        X = rand_grid(rng)
        f, L = rand_table(rng, X, 0.3), rand_family(rng, X)
        Y = rand_grid(rng)
        if rng.random() < 0.5:
            idx = [rng.randrange(len(X)) for _ in Y.points]
        else:  # surjective onto X whenever Y is at least as large
            idx = [j % len(X) for j in range(len(Y.points))]
        ys = [k for k, j in enumerate(idx) if values(f)[j] != oracle.INF]
        if not ys:
            continue
        runs += 1
        y = rng.choice(ys)
        left, right = oracle.composition_sets(values(f), rows(L), idx, y)
        rep = composition_subdiff_verify(f, L, [X.points[j] for j in idx], Y, Y.points[y])
        onto = set(oracle.dom(values(f))) <= set(idx)
        onto_runs += onto
        bad += not left <= right
        bad += onto and (left != right or rep.conclusion != EQUAL)
        bad += rep.status != "pass"
    dt = time.perf_counter() - t0
    record(7, bad == 0, dt, f"composition inclusion on {runs} runs, equality on all {onto_runs} onto runs, {bad} violations")
    assert bad == 0


def test_criterion_08_restriction_and_shifts(record):
    t0 = time.perf_counter()
    rng = random.Random(8)
    bad = 0
    for _ in range(80):
        X = rand_grid(rng)
        f, L2 = rand_table(rng, X, 0.3), rand_family(rng, X, 2, 5)
        L1 = FunctionFamily.build(X, [m for m in L2.members if rng.random() < 0.6] or [L2[0]])
        i = rand_point(rng, f)
        y = rng.randrange(len(X))
        bad += restriction_check(f, L1, L2, X.points[i]).conclusion != EQUAL
        bad += shift_rule_check(f, L2, rand_table(rng, X), X.points[y], X.points[i]).conclusion != EQUAL
        want = {tuple(v - rows(L2)[k][y] for v in rows(L2)[k]) for k in oracle.subdifferential(values(f), rows(L2), i)}
        bad += subdifferential(f, family_pin(L2, X.points[y]), X.points[i]).forms() != want
    dt = time.perf_counter() - t0
    record(8, bad == 0, dt, f"restriction, vertical, pinning and horizontal shift rules on 80 instances, {bad} violations")
    assert bad == 0


# --- 9: monotone operators -----------------------------------------------------------------


def test_criterion_09_monotone(record):
    t0 = time.perf_counter()
    notes = []
    ok = True
    for name in ("monotone-algebra", "maximality", "bronsted-rockafellar", "zero-subgradient"):
        rep = run_scenario(name)
        ok &= rep.status == "pass"
    rng = random.Random(9)
    for _ in range(60):
        X = rand_grid(rng)
        f, L = rand_table(rng, X, 0.3), rand_family(rng, X)
        T = subdifferential_operator(f, L)
        ok &= is_monotone(T).conclusion == EQUAL and is_monotone(inverse_operator(T)).conclusion == EQUAL
        g, L2 = rand_table(rng, X), rand_family(rng, X, 1, 3)
        ok &= is_monotone(combine_operators(1, T, Q(1, 2), subdifferential_operator(g, L2))).conclusion == EQUAL
    # maximality on the assumption-passing fixtures: flat f, and |x| on a grid
    X = DomainSpec.grid(-2, 2)
    L = family_from_texts(["0", "x", "-x"], X)
    ok &= is_maximal_within(subdifferential_operator(family_from_texts(["abs(x)"], X)[0], L)).conclusion == EQUAL
    maxi = run_scenario("maximality").entries[0]
    ok &= maxi.hypothesis == HOLDS and maxi.conclusion == EQUAL
    notes.append("maximal under the assumption")
    # Bronsted-Rockafellar witness and the zero-slack case (y, v, 0)
    line = DomainSpec.real_line()
    Ll = family_from_texts(["0", "x", "-x"], line)
    f = family_from_texts(["abs(x)"], line)[0]
    w = bronsted_rockafellar_search(f, Ll, Ll, 1, Ll[0], 1, 1)
    ok &= (w.z, w.p) == (1, 1) and w.w.form == Ll[1].form
    z = bronsted_rockafellar_search(f, Ll, Ll, 0, Ll[0], 1, 1)
    ok &= (z.z, z.p) == (0, 0) and z.w.form == Ll[0].form
    notes.append("BR witness z=1, w=x, p=1; zero slack gives (0, 0, 0)")
    dt = time.perf_counter() - t0
    ok &= dt < 30
    record(9, ok, dt, "monotone suite; " + "; ".join(notes))
    assert ok


# --- 10: determinism ----------------------------------------------------------------------


def test_criterion_10_suite_is_byte_identical(record):
    t0 = time.perf_counter()
    cmd = [sys.executable, "-m", "abconvex", "suite", "--seed", "0", "--count", "100", "--format", "json"]
    procs = [subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE) for _ in range(2)]
    outs = [p.communicate() for p in procs]
    codes = [p.returncode for p in procs]
    a, b = outs[0][0], outs[1][0]
    dt = time.perf_counter() - t0
    data = json.loads(a) if a else {}
    failures = sum(c["details"]["failures"] for c in data.get("checks", []))
    ok = a == b and codes == [0, 0] and data.get("status") == "pass"
    record(10, ok, dt, f"suite --seed 0 --count 100 byte-identical over two processes, {failures} failures; total CI time is checked at session end")
    assert ok, outs[0][1].decode()
