from __future__ import annotations

from fractions import Fraction as Q

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracle
from abconvex import (
    EQUAL,
    FAILS,
    FAIL,
    HOLDS,
    INF,
    NEG_INF,
    STRICT,
    VIOLATED,
    DomainError,
    DomainSpec,
    Function,
    FunctionFamily,
    PointSet,
    SupportSet,
    composition_subdiff_verify,
    conjugate,
    conjugate_sum_check,
    convolution_exact,
    envelope_conjugate_check,
    epi_conjugate_check,
    family_from_texts,
    family_pin,
    family_sum,
    function_from_text,
    indicator,
    inf_convolution,
    is_l_convex,
    max_rule_verify,
    moreau_verify,
    normal_set,
    normal_subdiff_check,
    normal_sum_check,
    pinned_normal_hull_check,
    restriction_check,
    shift_rule_check,
    subdifferential,
    subdifferential_all,
    subdifferential_hull_check,
    sum_convexity_check,
    sum_rule_verify,
    support_function,
    support_sum_hull_check,
    vertical_hull,
)
from conftest import families, finite_instances, grids, plain, rows, tables, values

LIN = ["0", "x", "-x"]


def fn(text, X):
    return function_from_text(text, X)


def forms(X, texts):
    return {fn(t, X).form for t in texts}


def finite_point(draw, *fs):
    common = set.intersection(*(set(f.domain_indices()) for f in fs))
    assume(common)
    return draw(st.sampled_from(sorted(common)))


# --- conjugates and subdifferentials -----------------------------------------


class TestConjugate:
    def test_real_line_values(self, line):
        L = family_from_texts(["max(0,x)", "2*x", "1/2*x"], line)
        t = conjugate(fn("abs(x)", line), L)
        assert t.values == (0, INF, 0)

    def test_empty_domain_gives_neg_inf(self, grid5):
        f = Function(grid5, (INF,) * 5)
        assert conjugate(f, family_from_texts(LIN, grid5)).values == (NEG_INF,) * 3

    def test_sum_of_abs_at_twice_identity(self, grid5):
        L = family_from_texts(LIN, grid5)
        f = fn("abs(x)", grid5)
        twice = FunctionFamily.build(grid5, [fn("2*x", grid5)])
        assert conjugate(f + f, twice)[0] == 0
        assert conjugate(f, L).value_of(fn("x", grid5)) == 0

    @given(finite_instances())
    def test_matches_oracle(self, inst):
        X, f, L = inst
        t = conjugate(f, L)
        for k, l in enumerate(rows(L)):
            assert plain(t[k]) == oracle.conjugate(values(f), l)
            if t.witnesses[k] is not None:
                i = X.index(t.witnesses[k])
                assert l[i] - values(f)[i] == plain(t[k])


class TestSubdifferential:
    def test_figure_two_subgradient(self, line):
        L = family_from_texts(["x", "-x", "max(0,x)", "min(0,x)", "0"], line)
        sub = subdifferential(fn("abs(x)", line), L, 1)
        assert fn("max(0,x)", line) in sub
        assert fn("x", line) in sub and fn("-x", line) not in sub

    def test_abs_on_grid(self, grid5):
        L = family_from_texts(LIN, grid5)
        f = fn("abs(x)", grid5)
        assert subdifferential(f, L, 0).forms() == forms(grid5, LIN)
        assert subdifferential(f, L, 1).forms() == forms(grid5, ["x"])

    def test_point_outside_domain(self, grid5):
        f = Function(grid5, (INF, Q(0), Q(0), Q(0), Q(0)))
        with pytest.raises(DomainError):
            subdifferential(f, family_from_texts(LIN, grid5), -2)

    @given(st.data())
    def test_matches_oracle(self, data):
        X, f, L = data.draw(finite_instances())
        i = finite_point(data.draw, f)
        assert subdifferential(f, L, X.points[i]).indices == oracle.subdifferential(values(f), rows(L), i)
        table = subdifferential_all(f, L)
        assert table == {j: frozenset(oracle.subdifferential(values(f), rows(L), j)) for j in f.domain_indices()}


class TestMoreau:
    def test_abs_at_one(self, grid5):
        L = family_from_texts(["-x", "0", "x"], grid5)
        f = fn("abs(x)", grid5)
        t = conjugate(f, L)
        hits = [L[k].label() for k in range(3) if t[k] + f((1,)) == L[k]((1,))]
        assert hits == ["x"]
        assert moreau_verify(f, L, 1).conclusion == EQUAL

    def test_real_line(self, line):
        L = family_from_texts(["x", "-x", "max(0,x)", "min(0,x)", "0"], line)
        assert moreau_verify(fn("abs(x)", line), L, 1).conclusion == EQUAL

    @settings(max_examples=120)
    @given(st.data())
    def test_equivalence_on_random_instances(self, data):
        X, f, L = data.draw(finite_instances())
        i = finite_point(data.draw, f)
        rep = moreau_verify(f, L, X.points[i])
        assert rep.conclusion == EQUAL, rep.witnesses
        fv = values(f)
        for k, l in enumerate(rows(L)):
            c = oracle.conjugate(fv, l)
            assert c + fv[i] >= l[i]
            assert (c + fv[i] == l[i]) == (k in oracle.subdifferential(fv, rows(L), i))


class TestEpigraph:
    def test_boundary_and_below(self, grid5):
        L = family_from_texts(LIN, grid5)
        f = fn("abs(x)", grid5)
        t = conjugate(f, L)
        for k, l in enumerate(L.members):
            for c, expected in ((t[k], True), (t[k] - 1, False), (t[k] + 1, True)):
                assert all(a <= b for a, b in zip(l.minus_constant(c).form, f.form)) == expected
        assert epi_conjugate_check(f, L).conclusion == EQUAL

    @given(st.data())
    def test_agreement_on_random_pairs(self, data):
        X, f, L = data.draw(finite_instances())
        samples = [(data.draw(st.integers(0, len(L) - 1)), Q(data.draw(st.integers(-8, 8)))) for _ in range(4)]
        rep = epi_conjugate_check(f, L, samples)
        assert rep.conclusion == EQUAL
        for k, c in samples:
            l = rows(L)[k]
            below = all(v - c <= w for v, w in zip(l, values(f)))
            assert (c >= oracle.conjugate(values(f), l)) == below

    def test_real_line(self, line):
        L = family_from_texts(["x", "max(0,x)", "0"], line)
        assert epi_conjugate_check(fn("abs(x)", line), L, [(0, Q(5)), (1, Q(-1))]).conclusion == EQUAL


class TestNormalSets:
    def test_interval_end_point(self, grid5):
        L = family_from_texts(LIN, grid5)
        C = PointSet.of_points(grid5, [-1, 0, 1])
        assert {m.form for m in normal_set(L, 1, C).functions()} == forms(grid5, ["0", "x"])
        assert not normal_set(L, 2, C).indices

    @given(st.data())
    def test_support_function_is_indicator_conjugate(self, data):
        X = data.draw(grids())
        L = data.draw(families(X))
        C = frozenset(data.draw(st.sets(st.integers(0, len(X) - 1))))
        t = support_function(PointSet(X, C), L)
        ind = oracle.indicator(C, len(X))
        assert [plain(v) for v in t.values] == [oracle.conjugate(ind, l) for l in rows(L)]
        x = data.draw(st.integers(0, len(X) - 1))
        assert normal_set(L, X.points[x], PointSet(X, C)).indices == oracle.normal_set(rows(L), x, C)
        if x in C:
            assert normal_set(L, X.points[x], PointSet(X, C)).indices == oracle.subdifferential(ind, rows(L), x)

    @given(st.data())
    def test_normal_cone_of_epigraph(self, data):
        X, f, L = data.draw(finite_instances())
        i = finite_point(data.draw, f)
        assert normal_subdiff_check(f, L, X.points[i], [1, 2]).conclusion == EQUAL

    def test_normal_sum_at_boundary(self, grid5):
        L = family_from_texts(LIN, grid5)
        C = PointSet.of_points(grid5, [-1, 0, 1])
        rep = normal_sum_check(C, L, C, L, 1)
        assert rep.hypothesis == HOLDS and rep.conclusion == EQUAL

    @given(st.data())
    def test_normal_sum_inclusion(self, data):
        X = data.draw(grids())
        L1 = data.draw(families(X))
        L2 = data.draw(families(X))
        C = frozenset(data.draw(st.sets(st.integers(0, len(X) - 1), min_size=1)))
        D = frozenset(data.draw(st.sets(st.integers(0, len(X) - 1), min_size=1)))
        x = data.draw(st.integers(0, len(X) - 1))
        rep = normal_sum_check(PointSet(X, C), L1, PointSet(X, D), L2, X.points[x])
        assert rep.status != FAIL, rep.witnesses
        if rep.hypothesis == HOLDS:
            assert rep.conclusion == EQUAL


# --- restriction and shifts ----------------------------------------------------


class TestRestrictionAndShifts:
    @given(st.data())
    def test_restriction(self, data):
        X, f, L2 = data.draw(finite_instances())
        keep = data.draw(st.sets(st.integers(0, len(L2) - 1), min_size=1))
        L1 = FunctionFamily.build(X, [L2[k] for k in sorted(keep)])
        i = finite_point(data.draw, f)
        rep = restriction_check(f, L1, L2, X.points[i])
        assert rep.conclusion == EQUAL
        big = oracle.subdifferential(values(f), rows(L2), i)
        small = oracle.subdifferential(values(f), rows(L1), i)
        assert {tuple(rows(L2)[k]) for k in big} & {tuple(r) for r in rows(L1)} == {tuple(rows(L1)[k]) for k in small}

    def test_restriction_needs_inclusion(self, grid5):
        with pytest.raises(DomainError):
            restriction_check(fn("abs(x)", grid5), family_from_texts(["x"], grid5), family_from_texts(["-x"], grid5), 0)

    @given(st.data())
    def test_shift_rules(self, data):
        X, f, L = data.draw(finite_instances())
        u = data.draw(tables(X))
        i = finite_point(data.draw, f)
        y = data.draw(st.integers(0, len(X) - 1))
        rep = shift_rule_check(f, L, u, X.points[y], X.points[i])
        assert rep.conclusion == EQUAL, rep.witnesses
        pinned = oracle.pin(rows(L), y)
        got = subdifferential(f, family_pin(L, X.points[y]), X.points[i])
        want = {tuple(v - rows(L)[k][y] for v in rows(L)[k]) for k in oracle.subdifferential(values(f), rows(L), i)}
        assert {tuple(pinned[k]) for k in oracle.subdifferential(values(f), pinned, i)} == want
        assert got.forms() == want

    def test_shift_rules_on_the_line(self, line):
        L = family_from_texts(["x", "-x", "max(0,x)", "0"], line)
        rep = shift_rule_check(fn("abs(x)", line), L, fn("1/2*x", line), 1, 1)
        assert rep.conclusion == EQUAL and rep.details["f_is_L_convex"]


# --- max rule and composition ------------------------------------------------


class TestMaxRule:
    def test_figure_two(self, line):
        G = family_from_texts(["x", "-x"], line)
        L = family_from_texts(["x", "-x", "max(0,x)", "min(0,x)", "0", "max(0,-x)", "min(0,-x)"], line)
        rep = max_rule_verify(G, L, 1)
        assert rep.conclusion == STRICT
        assert rep.details["hull"] == ["(x) - 1"]
        w = rep.witnesses[0]
        assert w["member"] == "(max(0,x)) - 1" and w["point"] == "-1"
        # the member rises above the pinned active envelope there: 0 - 1 > -1 - 1
        assert w["member_value"] == "-1" and w["active_envelope_value"] == "-2"

    def test_classical_pinned_equality(self, grid5):
        G = family_from_texts(["x", "-x"], grid5)
        L = family_from_texts(["-x", "0", "x"], grid5)
        rep = max_rule_verify(G, L, 0)
        assert rep.conclusion == EQUAL

    def test_needs_g_inside_l(self, line):
        with pytest.raises(DomainError):
            max_rule_verify(family_from_texts(["x"], line), family_from_texts(["-x"], line), 0)


class TestComposition:
    def test_reflection_is_onto(self):
        X = DomainSpec.grid(-2, 2)
        L = family_from_texts(LIN, X)
        refl = [(-p[0],) for p in X.points]
        for y in X.points:
            rep = composition_subdiff_verify(fn("abs(x)", X), L, refl, X, y)
            assert rep.hypothesis == HOLDS and rep.conclusion == EQUAL

    def test_constant_map_is_strict(self):
        X = DomainSpec.grid(-2, 2)
        Y = DomainSpec.grid(-1, 1)
        L = family_from_texts(LIN, X)
        rep = composition_subdiff_verify(fn("abs(x)", X), L, [(1,)] * 3, Y, 0)
        # left {constant 1}; right every constant in L o u: {0, 1, -1}
        assert rep.hypothesis == FAILS and rep.conclusion == STRICT and rep.status == "pass"
        assert len(rep.witnesses) == 2

    @given(st.data())
    def test_inclusion_and_onto_equality(self, data):
        X, f, L = data.draw(finite_instances())
        Y = data.draw(grids(min_size=2, max_size=5))
        idx = data.draw(st.lists(st.integers(0, len(X) - 1), min_size=len(Y), max_size=len(Y)))
        fu = [values(f)[j] for j in idx]
        ys = [k for k, v in enumerate(fu) if v != oracle.INF]
        assume(ys)
        y = data.draw(st.sampled_from(ys))
        rep = composition_subdiff_verify(f, L, [X.points[j] for j in idx], Y, Y.points[y])
        left, right = oracle.composition_sets(values(f), rows(L), idx, y)
        assert left <= right
        assert rep.status == "pass" and rep.conclusion != VIOLATED
        onto = set(oracle.dom(values(f))) <= set(idx)
        assert (rep.hypothesis == HOLDS) == onto
        if onto:
            assert left == right and rep.conclusion == EQUAL
        assert (rep.conclusion == EQUAL) == (left == right)


# --- sums ------------------------------------------------------------------------


class TestSumRule:
    @pytest.fixture
    def lin(self, grid5):
        return family_from_texts(LIN, grid5)

    def test_passing_fixture(self, grid5, lin):
        f1, f2 = fn("abs(x)", grid5), fn("abs(x-1)", grid5)
        assert convolution_exact(f1, lin, f2, lin)
        rep = sum_rule_verify(f1, lin, f2, lin, 0)
        assert rep.hypothesis == HOLDS and rep.conclusion == EQUAL
        Lsum = family_sum(lin, lin)
        got = subdifferential(f1 + f2, Lsum, 0).forms()
        assert got == forms(grid5, ["0", "-x", "-2*x"])
        assert subdifferential(f1 + f2, Lsum, 1).forms() == forms(grid5, ["0", "x", "2*x"])
        for x in (-2, -1, 2):
            assert sum_rule_verify(f1, lin, f2, lin, x).conclusion == EQUAL

    def test_failing_fixture(self, grid5, lin):
        g1, g2 = fn("max(0,x)", grid5), fn("max(x,-2*x)", grid5)
        assert not convolution_exact(g1, lin, g2, lin)
        rep = sum_rule_verify(g1, lin, g2, lin, 0)
        assert rep.hypothesis == FAILS and rep.conclusion == STRICT and rep.status == "pass"
        extra = set(rep.witnesses[0]["only_left"])
        Lsum = family_sum(lin, lin)
        assert {m.form for m in Lsum.members if m.label() in extra} == forms(grid5, ["-2*x"])
        for x, conclusion in ((-2, STRICT), (-1, STRICT), (1, EQUAL), (2, EQUAL)):
            assert sum_rule_verify(g1, lin, g2, lin, x).conclusion == conclusion

    def test_conjugate_of_sum(self, grid5, lin):
        f = fn("abs(x)", grid5)
        Lsum = family_sum(lin, lin)
        conv = inf_convolution(conjugate(f, lin), conjugate(f, lin), Lsum)
        twice = Lsum.index_of(fn("2*x", grid5))
        assert conv[twice] == 0 == conjugate(f + f, Lsum)[twice]
        zero = Lsum.index_of(fn("0", grid5))
        assert len(Lsum.decompositions[zero]) == 3 and conv[zero] == 0
        rep = conjugate_sum_check(f, lin, f, lin)
        assert rep.hypothesis == HOLDS and rep.conclusion == EQUAL

    def test_conjugate_sum_gap_is_reported(self, grid5, lin):
        rep = conjugate_sum_check(fn("max(0,x)", grid5), lin, fn("max(x,-2*x)", grid5), lin)
        assert rep.hypothesis == FAILS and rep.status == "pass"
        assert any(w["kind"] == "convolution-gap" for w in rep.witnesses)

    def test_min_over_two_decompositions(self, grid5):
        L = family_from_texts(["x", "-x"], grid5)
        f1 = Function(grid5, tuple(Q(v) for v in (0, 0, 0, 0, 5)))
        f2 = fn("abs(x)", grid5)
        Lsum = family_sum(L, L)
        zero = Lsum.index_of(fn("0", grid5))
        t1, t2 = conjugate(f1, L), conjugate(f2, L)
        conv = inf_convolution(t1, t2, Lsum)
        assert conv[zero] == min(t1[i] + t2[j] for i, j in Lsum.decompositions[zero])
        assert conv[zero] == 1

    @settings(max_examples=80)
    @given(st.data())
    def test_inclusion_always_equality_under_hypothesis(self, data):
        X = data.draw(grids())
        f1 = data.draw(tables(X, allow_inf=True))
        f2 = data.draw(tables(X, allow_inf=True))
        L1 = data.draw(families(X, max_size=4))
        L2 = data.draw(families(X, max_size=4))
        i = finite_point(data.draw, f1, f2)
        left, right = oracle.sum_rule_sets(values(f1), rows(L1), values(f2), rows(L2), i)
        exact = oracle.inf_convolution_exact(values(f1), rows(L1), values(f2), rows(L2))
        assert right <= left
        if exact:
            assert left == right
        rep = sum_rule_verify(f1, L1, f2, L2, X.points[i])
        assert (rep.hypothesis == HOLDS) == exact
        assert rep.status == "pass"
        assert (rep.conclusion == EQUAL) == (left == right)
        assert conjugate_sum_check(f1, L1, f2, L2).status == "pass"


# --- further invariants ----------------------------------------------------------------


@given(st.data())
def test_vertical_hull_matches_oracle(data):
    X, f, L = data.draw(finite_instances())
    h = vertical_hull(f, L)
    assert values(h) == oracle.vertical_hull(rows(L), values(f))
    assert is_l_convex(h, L) or all(v == INF for v in h.form)


@given(st.data())
def test_structural_invariants(data):
    X, f, L = data.draw(finite_instances(with_zero=True))
    i = finite_point(data.draw, f)
    x = X.points[i]
    assert subdifferential_hull_check(f, L, x).conclusion == EQUAL
    C = PointSet(X, frozenset(data.draw(st.sets(st.integers(0, len(X) - 1), min_size=1))))
    assert pinned_normal_hull_check(L, x, C).conclusion == EQUAL
    U = SupportSet(L, frozenset(data.draw(st.sets(st.integers(0, len(L) - 1), min_size=1))))
    assert envelope_conjugate_check(U).conclusion == EQUAL
    g = data.draw(tables(X))
    L2 = data.draw(families(X))
    assert sum_convexity_check(f, L, g, L2).status == "pass"
    assert support_sum_hull_check(f, L, g, L2).status == "pass"


def test_sum_of_convex_functions_is_convex(grid5):
    L = family_from_texts(LIN, grid5)
    rep = sum_convexity_check(fn("abs(x)", grid5), L, fn("abs(x-1)", grid5), L)
    assert rep.hypothesis == HOLDS and rep.conclusion == EQUAL


def test_indicator_needs_finite_domain(line):
    with pytest.raises(DomainError):
        indicator(PointSet.everything(line))
