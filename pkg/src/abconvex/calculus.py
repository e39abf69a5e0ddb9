"""Conjugates, subdifferentials, normal sets and checks of the calculus rules.

Every check returns a :class:`~abconvex.reports.RuleReport`.  Sets of
functions are compared extensionally, by backend form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .families import (
    FINITE_POINTS,
    REAL_LINE,
    DomainError,
    DomainSpec,
    Function,
    FunctionFamily,
    compose_function,
    compose_indices,
    envelope,
    family_pin,
    family_sum,
    format_point,
    linear_combination,
)
from .hulls import (
    PointSet,
    SupportSet,
    co_set,
    dominates,
    is_abstract_convex,
    point_witness,
    strict_region,
)
from .numerics import (
    INF,
    NEG_INF,
    ExtReal,
    PLFunction,
    canonical_witness,
    format_ext,
    identity_memo,
    is_finite,
    pl_dominates,
    pl_sup_on,
    pl_supremum,
)
from .reports import EQUAL, FAILS, HOLDS, NOT_CHECKED, STRICT, VIOLATED, RuleReport

__all__ = [
    "ConjugateTable",
    "SubdifferentialSet",
    "NormalSet",
    "conjugate",
    "subdifferential",
    "subdifferential_all",
    "moreau_verify",
    "normal_set",
    "indicator",
    "epi_conjugate_check",
    "normal_subdiff_check",
    "restriction_check",
    "shift_rule_check",
    "max_rule_verify",
    "composition_subdiff_verify",
    "inf_convolution",
    "conjugate_sum_check",
    "convolution_exact",
    "support_function",
    "normal_sum_check",
    "sum_rule_verify",
    "subdifferential_hull_check",
    "sum_convexity_check",
    "support_sum_hull_check",
    "envelope_conjugate_check",
    "pinned_normal_hull_check",
    "vertical_hull",
    "is_l_convex",
]


def _pt(p):
    return format_point(p)


def _forms(fs: Iterable[Function]) -> set:
    return {f.form for f in fs}


# ---------------------------------------------------------------------------
# Conjugate and subdifferential
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConjugateTable:
    """Values ``f*(l)`` for each member l, with a maximiser when attained."""

    family: FunctionFamily
    values: tuple[ExtReal, ...]
    witnesses: tuple[object, ...]

    def __getitem__(self, i: int) -> ExtReal:
        return self.values[i]

    def value_of(self, l: Function) -> ExtReal:
        i = self.family.index_of(l)
        if i is None:
            raise DomainError(f"{l.label()!r} is not in the family")
        return self.values[i]

    def to_json(self) -> dict:
        return {m.label(): format_ext(v) for m, v in zip(self.family.members, self.values)}


def _finite_argmax(domain: DomainSpec, scores: Sequence[tuple[int, ExtReal]]):
    best = max(v for _, v in scores)
    pts = [domain.points[i] for i, v in scores if v == best]
    where = min(pts, key=lambda p: (sum(c * c for c in p), p))
    return best, where


@identity_memo(64)
def conjugate(f: Function, L: FunctionFamily) -> ConjugateTable:
    """``f*(l) = sup_x l(x) - f(x)`` for every member l of L."""
    if f.domain != L.domain:
        raise DomainError("domain mismatch")
    values, witnesses = [], []
    if f.domain.kind == REAL_LINE:
        for l in L.members:
            if f.form is None:
                values.append(INF)
                witnesses.append(None)
                continue
            v, where = pl_supremum(l.form - f.form)
            values.append(v)
            witnesses.append(where)
    else:
        dom = f.domain_indices()
        for l in L.members:
            if not dom:
                values.append(NEG_INF)
                witnesses.append(None)
                continue
            v, where = _finite_argmax(f.domain, [(i, l.form[i] - f.form[i]) for i in dom])
            values.append(v)
            witnesses.append(where if is_finite(v) else None)
    return ConjugateTable(L, tuple(values), tuple(witnesses))


@dataclass(frozen=True)
class SubdifferentialSet:
    family: FunctionFamily
    indices: frozenset[int]
    at: object

    def functions(self) -> list[Function]:
        return [self.family.members[i] for i in sorted(self.indices)]

    def forms(self) -> set:
        return _forms(self.functions())

    def labels(self) -> list[str]:
        return self.family.labels(self.indices)

    def __contains__(self, f: Function) -> bool:
        i = self.family.index_of(f)
        return i is not None and i in self.indices

    def __len__(self) -> int:
        return len(self.indices)


def _finite_value_at(f: Function, x):
    x = f.domain.point(x)
    v = f(x)
    if not is_finite(v):
        raise DomainError(f"point {_pt(x)} is outside the domain of f (value {v})")
    return x, v


def subdifferential(f: Function, L: FunctionFamily, x) -> SubdifferentialSet:
    """Members l with ``f(y) >= f(x) + l(y) - l(x)`` for every y."""
    if f.domain != L.domain:
        raise DomainError("domain mismatch")
    x, fx = _finite_value_at(f, x)
    keep = []
    if f.domain.kind == REAL_LINE:
        for k, l in enumerate(L.members):
            floor = PLFunction.constant(fx - l(x))
            if pl_dominates(f.form - l.form, floor):
                keep.append(k)
    else:
        xi = f.domain.index(x)
        for k, l in enumerate(L.members):
            gap = fx - l.form[xi]
            if all(fv - lv >= gap for fv, lv in zip(f.form, l.form)):
                keep.append(k)
    return SubdifferentialSet(L, frozenset(keep), x)


def subdifferential_all(f: Function, L: FunctionFamily) -> dict[int, frozenset[int]]:
    """Finite backend: point index -> subdifferential indices, over dom f."""
    if not f.domain.is_finite:
        raise DomainError("needs a finite domain")
    dom = [i for i, v in enumerate(f.form) if is_finite(v)]
    out = {i: set() for i in dom}
    for k, l in enumerate(L.members):
        diffs = [fv - lv for fv, lv in zip(f.form, l.form)]
        low = min(diffs)
        for i in dom:
            if diffs[i] == low:
                out[i].add(k)
    return {i: frozenset(s) for i, s in out.items()}


def moreau_verify(f: Function, L: FunctionFamily, x) -> RuleReport:
    """``f*(u) + f(x) = u(x)`` exactly when u is a subgradient at x."""
    x, fx = _finite_value_at(f, x)
    table = conjugate(f, L)
    sub = subdifferential(f, L, x)
    witnesses = []
    for k, u in enumerate(L.members):
        fs = table[k]
        if is_finite(fs) and fs + fx - u(x) < 0:
            witnesses.append({"kind": "moreau-inequality", "u": u.to_json(), "x": _pt(x)})
        equality = is_finite(fs) and fs + fx == u(x)
        if equality != (k in sub.indices):
            witnesses.append(
                {
                    "kind": "moreau-equivalence",
                    "u": u.to_json(),
                    "x": _pt(x),
                    "conjugate": format_ext(fs),
                    "in_subdifferential": k in sub.indices,
                }
            )
    return RuleReport(
        "moreau",
        HOLDS,
        VIOLATED if witnesses else EQUAL,
        witnesses,
        {"x": _pt(x), "subdifferential": sub.labels(), "members": len(L)},
    )


# ---------------------------------------------------------------------------
# Normal sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalSet:
    family: FunctionFamily
    indices: frozenset[int]
    at: object
    set: PointSet

    def functions(self) -> list[Function]:
        return [self.family.members[i] for i in sorted(self.indices)]

    def labels(self) -> list[str]:
        return self.family.labels(self.indices)


def normal_set(L: FunctionFamily, x, C: PointSet) -> NormalSet:
    """Members maximised over C at x; empty when x is not in C."""
    x = L.domain.point(x)
    if x not in C:
        return NormalSet(L, frozenset(), x, C)
    keep = []
    if L.domain.kind == REAL_LINE:
        for k, l in enumerate(L.members):
            top, _ = pl_sup_on(l.form, C.region)
            if top <= l(x):
                keep.append(k)
    else:
        for k, l in enumerate(L.members):
            lx = l(x)
            if all(l.form[i] <= lx for i in C.indices):
                keep.append(k)
    return NormalSet(L, frozenset(keep), x, C)


def indicator(C: PointSet) -> Function:
    """0 on C and +inf elsewhere (finite backend)."""
    if not C.domain.is_finite:
        raise DomainError("indicator functions need a finite domain")
    vals = tuple(Fraction(0) if i in C.indices else INF for i in range(len(C.domain.points)))
    return Function(C.domain, vals, "")


def support_function(C: PointSet, L: FunctionFamily) -> ConjugateTable:
    """``sigma_C(l) = sup_{x in C} l(x)``, cross-checked against the
    conjugate of the indicator of C on finite domains."""
    values, witnesses = [], []
    if L.domain.kind == REAL_LINE:
        for l in L.members:
            v, where = pl_sup_on(l.form, C.region)
            values.append(v)
            witnesses.append(where)
        return ConjugateTable(L, tuple(values), tuple(witnesses))
    for l in L.members:
        if not C.indices:
            values.append(NEG_INF)
            witnesses.append(None)
            continue
        v, where = _finite_argmax(L.domain, [(i, l.form[i]) for i in sorted(C.indices)])
        values.append(v)
        witnesses.append(where)
    table = ConjugateTable(L, tuple(values), tuple(witnesses))
    other = conjugate(indicator(C), L)
    if other.values != table.values:
        raise AssertionError("support function disagrees with the conjugate of the indicator")
    return table


# ---------------------------------------------------------------------------
# Epigraph identities
# ---------------------------------------------------------------------------


def epi_conjugate_check(
    f: Function, L: FunctionFamily, samples: Iterable[tuple[int, Fraction]] = ()
) -> RuleReport:
    """``c >= f*(l)`` iff ``l - c <= f`` everywhere, on sampled pairs plus the
    boundary ``c = f*(l)`` and ``f*(l) +- 1`` for every member."""
    table = conjugate(f, L)
    pairs = [(k, Fraction(c)) for k, c in samples]
    for k, v in enumerate(table.values):
        if is_finite(v):
            pairs += [(k, v), (k, v - 1), (k, v + 1)]
    witnesses = []
    for k, c in pairs:
        l = L.members[k]
        in_epi = is_finite(table[k]) and c >= table[k] or table[k] == NEG_INF
        in_supp = dominates(f, l.minus_constant(c))
        if in_epi != in_supp:
            witnesses.append(
                {"kind": "epi-conjugate", "l": l.to_json(), "c": format_ext(c), "conjugate": format_ext(table[k])}
            )
    return RuleReport(
        "epi-conjugate",
        HOLDS,
        VIOLATED if witnesses else EQUAL,
        witnesses,
        {"samples": len(pairs)},
    )


def _epigraph_samples(f: Function, l: Function, x, offsets: Sequence[Fraction]):
    """Points y at which the epigraph constraint is sampled."""
    if f.domain.kind == FINITE_POINTS:
        return [f.domain.points[i] for i in f.domain_indices()]
    ys = set(f.form.knots()) | set(l.form.knots()) | {x}
    # the violation region of the subgradient inequality, if any, gets a probe
    level = f.form - l.form
    gap = f(x) - l(x)
    bad = strict_region(
        Function(f.domain, PLFunction.constant(gap)), Function(f.domain, level)
    )
    w = point_witness(bad)
    if w is not None:
        ys.add(w)
    return sorted(ys)


def normal_subdiff_check(
    f: Function, L: FunctionFamily, x, c_samples: Sequence = (1,)
) -> RuleReport:
    """Subgradients are exactly the l with (l, -1) normal to epi f at (x, f(x))."""
    x, fx = _finite_value_at(f, x)
    offsets = [Fraction(0)] + [Fraction(c) for c in c_samples if Fraction(c) > 0]
    sub = subdifferential(f, L, x)
    witnesses, normals = [], []
    for k, l in enumerate(L.members):
        violation = None
        for y in _epigraph_samples(f, l, x, offsets):
            fy = f(y)
            for d in offsets:
                lam = fy + d
                if l(y) - l(x) - (lam - fx) > 0:
                    violation = (y, lam)
                    break
            if violation:
                break
        is_normal = violation is None
        if is_normal:
            normals.append(k)
        if is_normal != (k in sub.indices):
            witnesses.append(
                {
                    "kind": "normal-subdifferential",
                    "l": l.to_json(),
                    "x": _pt(x),
                    "epigraph_point": None if violation is None else [_pt(violation[0]), format_ext(violation[1])],
                    "in_subdifferential": k in sub.indices,
                }
            )
    return RuleReport(
        "normal-subdifferential",
        HOLDS,
        VIOLATED if witnesses else EQUAL,
        witnesses,
        {"x": _pt(x), "subdifferential": sub.labels(), "normal": L.labels(normals)},
    )


# ---------------------------------------------------------------------------
# Restriction, shifts
# ---------------------------------------------------------------------------


def _set_report(rule, left: set, right: set, labels: dict, hypothesis=HOLDS, details=None) -> RuleReport:
    """Compare two extensional sets; ``labels`` maps forms to printable text."""
    only_left = [labels[f] for f in left - right]
    only_right = [labels[f] for f in right - left]
    witnesses = []
    if only_left or only_right:
        witnesses.append({"kind": "set-difference", "only_left": sorted(only_left), "only_right": sorted(only_right)})
    return RuleReport(rule, hypothesis, VIOLATED if witnesses else EQUAL, witnesses, details or {})


def restriction_check(f: Function, L1: FunctionFamily, L2: FunctionFamily, x) -> RuleReport:
    """``subdiff_{L2} f(x) & L1 == subdiff_{L1} f(x)`` for L1 inside L2."""
    if not L1.is_subfamily_of(L2):
        raise DomainError("the first family is not contained in the second")
    big = subdifferential(f, L2, x)
    small = subdifferential(f, L1, x)
    left = {m.form for m in big.functions() if m in L1}
    right = small.forms()
    labels = {m.form: m.label() for m in L2.members}
    return _set_report(
        "restriction", left, right, labels, details={"x": _pt(small.at), "subdifferential": small.labels()}
    )


def _translate(f: Function, t, domain: DomainSpec) -> Function:
    """``z -> f(z + t)`` on the translated domain."""
    if f.domain.kind == REAL_LINE:
        form = None if f.form is None else f.form.shift(Fraction(t))
        return Function(domain, form, f"({f.label()})(x + {format_ext(Fraction(t))})")
    return Function(domain, f.form, f"({f.label()})(x + t)")


def shift_rule_check(f: Function, L: FunctionFamily, u: Function, y, x) -> RuleReport:
    """Vertical shift, pinning at y and horizontal shift by y, at the point x."""
    x = f.domain.point(x)
    y = f.domain.point(y)
    base = subdifferential(f, L, x)
    witnesses = []
    details = {"x": _pt(x), "y": _pt(y), "subdifferential": base.labels()}

    def compare(name, left, right, labels):
        if left != right:
            witnesses.append(
                {
                    "kind": "set-difference",
                    "rule": name,
                    "only_left": sorted(labels.get(k, "?") for k in left - right),
                    "only_right": sorted(labels.get(k, "?") for k in right - left),
                }
            )

    # vertical: subdiff_{L-u}(f-u)(x) == subdiff_L f(x) - u
    Lu = FunctionFamily.build(L.domain, [l - u for l in L.members])
    fu = linear_combination([(1, f), (-1, u)], 0, f"({f.label()}) - ({u.label()})")
    left = subdifferential(fu, Lu, x).forms()
    right = {(l - u).form for l in base.functions()}
    compare("vertical", left, right, {m.form: m.label() for m in Lu.members})
    conv = is_l_convex(f, L)
    if conv != is_l_convex(fu, Lu):
        witnesses.append({"kind": "convexity-mismatch", "rule": "vertical"})

    # pinning: subdiff_{L_y} f(x) == {l - l(y) : l in subdiff_L f(x)}
    Ly = family_pin(L, y)
    left = subdifferential(f, Ly, x).forms()
    right = {l.minus_constant(l(y)).form for l in base.functions()}
    compare("pinning", left, right, {m.form: m.label() for m in Ly.members})

    # horizontal: on X - y, subdiff_{L^y} f^y(x - y) == {l(. + y) : l in subdiff_L f(x)}
    Xy = f.domain.translate(y)
    fy = _translate(f, y, Xy)
    Lyh = FunctionFamily.build(Xy, [_translate(l, y, Xy) for l in L.members])
    xs = x - y if f.domain.kind == REAL_LINE else tuple(a - b for a, b in zip(x, y))
    left = subdifferential(fy, Lyh, xs).forms()
    right = {_translate(l, y, Xy).form for l in base.functions()}
    compare("horizontal", left, right, {m.form: m.label() for m in Lyh.members})
    if conv != is_l_convex(fy, Lyh):
        witnesses.append({"kind": "convexity-mismatch", "rule": "horizontal"})
    details["f_is_L_convex"] = conv
    return RuleReport("shift-rules", HOLDS, VIOLATED if witnesses else EQUAL, witnesses, details)


# ---------------------------------------------------------------------------
# Max rule and composition
# ---------------------------------------------------------------------------


def max_rule_verify(G: FunctionFamily, L: FunctionFamily, x) -> RuleReport:
    """``subdiff_{L_x} f(x)`` contains ``co_{L_x}`` of the pinned active set,
    for ``f = max G``; members beyond the hull are reported with a point
    where they rise above the pinned active envelope."""
    if not G.is_subfamily_of(L):
        raise DomainError("G is not contained in L")
    if not len(G):
        raise DomainError("G must be nonempty")
    x = L.domain.point(x)
    f = envelope(G.members)
    fx = f(x)
    active = [g for g in G.members if g(x) == fx]
    Lx = family_pin(L, x)
    pinned = [g.minus_constant(g(x)) for g in active]
    A = SupportSet.of(Lx, pinned)
    hull = co_set(Lx, A)
    sub = subdifferential(f, Lx, x)
    missing = hull.indices - sub.indices
    extra = sub.indices - hull.indices
    h = envelope(pinned)
    witnesses = []
    for k in sorted(missing):
        witnesses.append({"kind": "max-rule-inclusion", "member": Lx[k].to_json(), "x": _pt(x)})
    for k in sorted(extra):
        w = Lx[k]
        y = point_witness(strict_region(w, h))
        witnesses.append(
            {
                "kind": "strict-member",
                "member": w.to_json(),
                "point": _pt(y),
                "member_value": format_ext(w(y)),
                "active_envelope_value": format_ext(h(y)),
            }
        )
    conclusion = VIOLATED if missing else (STRICT if extra else EQUAL)
    return RuleReport(
        "max-rule",
        HOLDS,
        conclusion,
        witnesses,
        {
            "x": _pt(x),
            "f_at_x": format_ext(fx),
            "active": [g.label() for g in active],
            "hull": Lx.labels(hull.indices),
            "subdifferential": sub.labels(),
        },
    )


def composition_subdiff_verify(
    f: Function, L: FunctionFamily, u_map: Sequence, Y: DomainSpec, x
) -> RuleReport:
    """``subdiff_L f(u(x)) o u`` is inside ``subdiff_{L o u}(f o u)(x)``, with
    equality when u maps onto the domain of f."""
    X = f.domain
    idx = compose_indices(X, u_map, Y)
    x = Y.point(x)
    ux = X.points[idx[Y.index(x)]]
    Lu = FunctionFamily.build(Y, [compose_function(m, idx, Y) for m in L.members])
    fu = compose_function(f, idx, Y)
    left = {compose_function(v, idx, Y).form for v in subdifferential(f, L, ux).functions()}
    right = subdifferential(fu, Lu, x).forms()
    onto = set(f.domain_indices()) <= set(idx)
    labels = {m.form: m.label() for m in Lu.members}
    witnesses = []
    if not left <= right:
        witnesses.append({"kind": "composition-inclusion", "only_left": sorted(labels[k] for k in left - right)})
        conclusion = VIOLATED
    elif left == right:
        conclusion = EQUAL
    else:
        conclusion = STRICT
        for k in sorted(right - left, key=lambda k: labels[k]):
            witnesses.append({"kind": "strict-member", "member": labels[k], "x": _pt(x)})
        if onto:
            conclusion = VIOLATED
    return RuleReport(
        "composition",
        HOLDS if onto else FAILS,
        conclusion,
        witnesses,
        {"x": _pt(x), "u_x": _pt(ux), "onto_domain_of_f": onto},
        status="fail" if conclusion == VIOLATED else "pass",
    )


# ---------------------------------------------------------------------------
# Sums
# ---------------------------------------------------------------------------


def shift_classes(Lsum: FunctionFamily) -> list[list[tuple[int, Fraction]]]:
    """For each member k, the pairs (k', d) with ``Lsum[k'] = Lsum[k] + d``.

    A sum of admissible families can contain members differing by a nonzero
    constant (on a grid, a cone centred at an endpoint is affine); such
    families break the elementary-family axiom, and reports flag them."""
    # members differ by a constant exactly when they share a shape key
    groups: dict = {}
    for k, m in enumerate(Lsum.members):
        groups.setdefault(_shape(m), []).append(k)
    out: list[list[tuple[int, Fraction]]] = [[] for _ in range(len(Lsum))]
    for ks in groups.values():
        for k in ks:
            out[k] = [(k2, _level(Lsum[k2]) - _level(Lsum[k])) for k2 in ks]
    return out


def _shape(m: Function):
    if m.domain.kind == REAL_LINE:
        return (m.form.breakpoints, m.form.slopes)
    return tuple(v - m.form[0] for v in m.form)


def _level(m: Function) -> Fraction:
    return m.form(0) if m.domain.kind == REAL_LINE else m.form[0]


def inf_convolution(t1: ConjugateTable, t2: ConjugateTable, Lsum: FunctionFamily) -> ConjugateTable:
    """``min_{l1 + l2 = l} t1(l1) + t2(l2)`` over recorded decompositions;
    the witness is the first attaining pair ``(i, j)``."""
    if Lsum.decompositions is None:
        raise ValueError("the sum family carries no decomposition index")
    values, witnesses = [], []
    for decomps in Lsum.decompositions:
        best: ExtReal = INF
        arg = None
        for i, j in decomps:
            v = t1[i] + t2[j]
            if arg is None or v < best:
                best, arg = v, (i, j)
        values.append(best)
        witnesses.append(arg)
    return ConjugateTable(Lsum, tuple(values), tuple(witnesses))


def _h_hull(f: Function, L: FunctionFamily, table: ConjugateTable) -> Function:
    """``sup_l l - f*(l)``: the hull of f w.r.t. the vertical closure of L."""
    if any(v == NEG_INF for v in table.values):
        # empty domain: every shift lies below f
        if f.domain.kind == REAL_LINE:
            raise DomainError("the +inf function has no real-line form")
        return Function(f.domain, (INF,) * len(f.domain.points), "inf")
    parts = [l.minus_constant(v) for l, v in zip(L.members, table.values) if is_finite(v)]
    return envelope(parts, f.domain)


def vertical_hull(f: Function, L: FunctionFamily) -> Function:
    """Hull of f for the abstract affine functions ``{l - c}``."""
    return _h_hull(f, L, conjugate(f, L))


def is_l_convex(f: Function, L: FunctionFamily) -> bool:
    """f is a supremum of vertical shifts of members of L."""
    return vertical_hull(f, L).form == f.form


@dataclass(frozen=True)
class _SumData:
    Lsum: FunctionFamily
    direct: ConjugateTable
    convolution: ConjugateTable
    hypothesis_holds: bool
    gaps: tuple[int, ...]


@identity_memo(8)
def _sum_data(f1, L1, f2, L2) -> _SumData:
    return _compute_sum_data(f1, L1, f2, L2)


def _compute_sum_data(f1, L1, f2, L2) -> _SumData:
    Lsum = family_sum(L1, L2)
    f = linear_combination([(1, f1), (1, f2)])
    direct = conjugate(f, Lsum)
    conv = inf_convolution(conjugate(f1, L1), conjugate(f2, L2), Lsum)
    gaps = tuple(k for k in range(len(Lsum)) if direct[k] != conv[k])
    return _SumData(Lsum, direct, conv, not gaps, gaps)


def convolution_exact(f1: Function, L1: FunctionFamily, f2: Function, L2: FunctionFamily) -> bool:
    """``(f1+f2)* == f1* (+) f2*`` on every member of L1+L2."""
    return _sum_data(f1, L1, f2, L2).hypothesis_holds


def conjugate_sum_check(f1: Function, L1: FunctionFamily, f2: Function, L2: FunctionFamily) -> RuleReport:
    """Conjugate of a sum against the infimal convolution of conjugates.

    The hypothesis is exactness: ``(f1+f2)* == f1* (+) f2*`` on L1+L2 (the
    convolution is always attained over finite decompositions).  The
    conclusions checked are the inequality ``(f1+f2)* <= f1* (+) f2*``, the
    hull identity ``(f1+f2)* == co(f1* (+) f2*)`` when f1 and f2 equal their
    vertical-closure hulls, and agreement of the epigraph-sum formulation
    with the hypothesis on sampled pairs.
    """
    if f1.domain != f2.domain:
        raise DomainError("domain mismatch")
    data = _sum_data(f1, L1, f2, L2)
    Lsum, direct, conv = data.Lsum, data.direct, data.convolution
    t1, t2 = conjugate(f1, L1), conjugate(f2, L2)
    witnesses = []
    for k in range(len(Lsum)):
        if direct[k] > conv[k]:
            witnesses.append({"kind": "sum-conjugate-inequality", "l": Lsum[k].to_json()})

    # hull of the convolution: sup_x l(x) - phi*(x), phi*(x) = sup_k l_k(x) - phi(l_k)
    hulls_ok = _h_hull(f1, L1, t1).form == f1.form and _h_hull(f2, L2, t2).form == f2.form
    if hulls_ok:
        phi_star = envelope(
            [m.minus_constant(v) for m, v in zip(Lsum.members, conv.values) if is_finite(v)], f1.domain
        )
        co_phi = conjugate(phi_star, Lsum)
        for k in range(len(Lsum)):
            if co_phi[k] != direct[k]:
                witnesses.append({"kind": "sum-conjugate-hull", "l": Lsum[k].to_json()})

    # epi f1* + epi f2* against epi (f1+f2)* at c in {(f1+f2)*(l), phi(l), +-1}
    epi_agrees = True
    for k, decomps in enumerate(Lsum.decompositions):
        cs = {v for v in (direct[k], conv[k]) if is_finite(v)}
        cs |= {c + d for c in list(cs) for d in (-1, 1)}
        for c in cs:
            in_sum = any(t1[i] <= c - t2[j] for i, j in decomps if is_finite(t2[j]) or t2[j] == NEG_INF)
            in_direct = c >= direct[k]
            if in_sum != in_direct:
                epi_agrees = False
    if epi_agrees != data.hypothesis_holds:
        witnesses.append({"kind": "equivalence-mismatch"})

    gap_witnesses = [
        {
            "kind": "convolution-gap",
            "l": Lsum[k].to_json(),
            "sum_conjugate": format_ext(direct[k]),
            "convolution": format_ext(conv[k]),
        }
        for k in data.gaps
    ]
    return RuleReport(
        "conjugate-sum",
        HOLDS if data.hypothesis_holds else FAILS,
        VIOLATED if witnesses else EQUAL,
        witnesses + gap_witnesses[:10],
        {
            "sum_family_size": len(Lsum),
            "shift_duplicates": sum(1 for c in shift_classes(Lsum) if len(c) > 1),
            "hull_identity_checked": hulls_ok,
            "gap_members": len(data.gaps),
        },
        status="fail" if witnesses else "pass",
    )


def _minkowski(Lsum: FunctionFamily, S1: Iterable[int], S2: Iterable[int]) -> set:
    """Forms of ``{l1 + l2}`` over the given operand indices."""
    S2 = set(S2)
    wanted = {(i, j) for i in S1 for j in S2}
    return {Lsum[k].form for k, d in enumerate(Lsum.decompositions) if wanted.intersection(d)}


def sum_rule_verify(f1: Function, L1: FunctionFamily, f2: Function, L2: FunctionFamily, x) -> RuleReport:
    """``subdiff_{L1+L2}(f1+f2)(x) == subdiff_{L1} f1(x) + subdiff_{L2} f2(x)``.

    The inclusion of the right side in the left is checked always, equality
    only when the exactness hypothesis holds.
    """
    x, _ = _finite_value_at(f1, x)
    _finite_value_at(f2, x)
    data = _sum_data(f1, L1, f2, L2)
    Lsum = data.Lsum
    f = linear_combination([(1, f1), (1, f2)], 0, f"({f1.label()}) + ({f2.label()})")
    left = subdifferential(f, Lsum, x).forms()
    s1 = subdifferential(f1, L1, x)
    s2 = subdifferential(f2, L2, x)
    right = _minkowski(Lsum, s1.indices, s2.indices)
    labels = {m.form: m.label() for m in Lsum.members}
    witnesses = []
    if not right <= left:
        witnesses.append({"kind": "sum-rule-inclusion", "only_right": sorted(labels[k] for k in right - left)})
        conclusion = VIOLATED
    elif right == left:
        conclusion = EQUAL
    else:
        conclusion = STRICT
        extra = sorted(labels[k] for k in left - right)
        if data.hypothesis_holds:
            conclusion = VIOLATED
        witnesses.append({"kind": "strict-members", "only_left": extra})
    return RuleReport(
        "sum-rule",
        HOLDS if data.hypothesis_holds else FAILS,
        conclusion,
        witnesses,
        {
            "x": _pt(x),
            "subdifferential_sum_family": sorted(labels[k] for k in left),
            "subdifferential_1": s1.labels(),
            "subdifferential_2": s2.labels(),
            "gap_members": len(data.gaps),
        },
        status="fail" if conclusion == VIOLATED else "pass",
    )


def normal_sum_check(C: PointSet, L1: FunctionFamily, D: PointSet, L2: FunctionFamily, x) -> RuleReport:
    """``N_{L1+L2}(x, C & D) == N_{L1}(x, C) + N_{L2}(x, D)`` under exactness
    of the support-function convolution; inclusion of the right side always."""
    if not C.domain.is_finite:
        raise DomainError("normal-set sums are checked on finite domains")
    data = _sum_data(indicator(C), L1, indicator(D), L2)
    Lsum = data.Lsum
    x = C.domain.point(x)
    left = {Lsum[k].form for k in normal_set(Lsum, x, C & D).indices}
    n1 = normal_set(L1, x, C)
    n2 = normal_set(L2, x, D)
    right = _minkowski(Lsum, n1.indices, n2.indices)
    labels = {m.form: m.label() for m in Lsum.members}
    inside = x in (C & D)
    witnesses = []
    if not inside and (left or right):
        witnesses.append({"kind": "outside-not-empty"})
        conclusion = VIOLATED
    elif not right <= left:
        witnesses.append({"kind": "normal-sum-inclusion", "only_right": sorted(labels[k] for k in right - left)})
        conclusion = VIOLATED
    elif right == left:
        conclusion = EQUAL
    else:
        conclusion = VIOLATED if data.hypothesis_holds else STRICT
        witnesses.append({"kind": "strict-members", "only_left": sorted(labels[k] for k in left - right)})
    return RuleReport(
        "normal-sum",
        HOLDS if data.hypothesis_holds else FAILS,
        conclusion,
        witnesses,
        {"x": _pt(x), "x_in_intersection": inside, "normal_sum_family": sorted(labels[k] for k in left)},
        status="fail" if conclusion == VIOLATED else "pass",
    )


# ---------------------------------------------------------------------------
# Further invariants
# ---------------------------------------------------------------------------


def subdifferential_hull_check(f: Function, L: FunctionFamily, x) -> RuleReport:
    """The pinned subdifferential ``subdiff_{L_x} f(x)`` is L_x-convex."""
    Lx = family_pin(L, x)
    sub = subdifferential(f, Lx, x)
    S = SupportSet(Lx, sub.indices)
    hull = co_set(Lx, S)
    extra = hull.indices - S.indices
    witnesses = [{"kind": "hull-not-closed", "members": Lx.labels(extra)}] if extra else []
    return RuleReport("subdifferential-hull", HOLDS, VIOLATED if extra else EQUAL, witnesses, {"x": _pt(sub.at)})


def sum_convexity_check(f1: Function, L1: FunctionFamily, f2: Function, L2: FunctionFamily) -> RuleReport:
    """Sums of L1- and L2-convex functions are (L1+L2)-convex."""
    hyp = is_l_convex(f1, L1) and is_l_convex(f2, L2)
    Lsum = family_sum(L1, L2)
    total = linear_combination([(1, f1), (1, f2)])
    hull = vertical_hull(total, Lsum)
    ok = hull.form == total.form
    if not hyp:
        return RuleReport("sum-convexity", FAILS, EQUAL if ok else STRICT, [], {})
    w = [] if ok else [{"kind": "not-convex", "sum": total.to_json(), "hull": hull.to_json()}]
    return RuleReport("sum-convexity", HOLDS, EQUAL if ok else VIOLATED, w, {})


def support_sum_hull_check(f1: Function, L1: FunctionFamily, f2: Function, L2: FunctionFamily) -> RuleReport:
    """``supp(f1+f2) == co(supp f1 + supp f2)`` over L1+L2 for convex f1, f2.

    Here each family plays the role of H itself (no vertical shifts), so the
    hypothesis is that f1 and f2 are suprema of members of L1 and L2."""
    from .hulls import support_set

    hyp = is_abstract_convex(L1, f1) and is_abstract_convex(L2, f2)
    Lsum = family_sum(L1, L2)
    s1 = support_set(L1, f1).indices
    s2 = support_set(L2, f2).indices
    sums = frozenset(k for k, d in enumerate(Lsum.decompositions) if any(i in s1 and j in s2 for i, j in d))
    hull = co_set(Lsum, SupportSet(Lsum, sums)).indices
    direct = support_set(Lsum, linear_combination([(1, f1), (1, f2)])).indices
    ok = hull == direct
    conclusion = EQUAL if ok else (VIOLATED if hyp else STRICT)
    witnesses = [] if ok else [{"kind": "set-difference", "hull": Lsum.labels(hull), "support": Lsum.labels(direct)}]
    return RuleReport("support-sum-hull", HOLDS if hyp else FAILS, conclusion, witnesses, {})


def envelope_conjugate_check(U: SupportSet) -> RuleReport:
    """The conjugate of ``max U`` is at most 0 on every member of U."""
    L = U.family
    top = envelope(U.functions(), L.domain)
    table = conjugate(top, L)
    bad = [k for k in U.indices if table[k] > 0]
    witnesses = [{"kind": "positive-conjugate", "member": L[k].to_json()} for k in sorted(bad)]
    return RuleReport("envelope-conjugate", HOLDS, VIOLATED if bad else EQUAL, witnesses, {})


def pinned_normal_hull_check(L: FunctionFamily, x, C: PointSet) -> RuleReport:
    """The pinned normal set ``{l - l(x) : l in N_L(x, C)}`` is L_x-convex."""
    N = normal_set(L, x, C)
    Lx = family_pin(L, x)
    pinned = SupportSet.of(Lx, [l.minus_constant(l(N.at)) for l in N.functions()])
    hull = co_set(Lx, pinned)
    ok = hull.indices == pinned.indices
    witnesses = [] if ok else [{"kind": "hull-not-closed", "members": Lx.labels(hull.indices - pinned.indices)}]
    return RuleReport("pinned-normal-hull", HOLDS, EQUAL if ok else VIOLATED, witnesses, {"x": _pt(N.at)})
