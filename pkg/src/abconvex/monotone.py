"""Finite abstract monotone operators.

An operator is a finite relation between domain points and family members.
The monotonicity expression ``u(x) - u(y) + v(y) - v(x)`` is symmetric in
the roles of points and functions, so the inverse operator is stored as the
same pairs with a flag and every check applies to it unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .calculus import conjugate, convolution_exact, subdifferential, subdifferential_all
from .families import (
    REAL_LINE,
    DomainError,
    DomainSpec,
    Function,
    FunctionFamily,
    family_scale,
    family_sum,
    format_point,
    linear_combination,
)
from .numerics import (
    PLFunction,
    as_rational,
    format_ext,
    is_finite,
    pl_infimum,
)
from .reports import EQUAL, FAILS, HOLDS, NOT_CHECKED, VIOLATED, RuleReport

__all__ = [
    "OperatorGraph",
    "full_grid",
    "is_monotone",
    "is_maximal_within",
    "inverse_operator",
    "combine_operators",
    "subdifferential_operator",
    "cone",
    "cone_sample",
    "assumption_check",
    "SlackError",
    "AssumptionError",
    "BRWitness",
    "bronsted_rockafellar_search",
    "bronsted_rockafellar_check",
    "zero_subgradient_check",
]


@dataclass(frozen=True)
class OperatorGraph:
    """``T(x) = {l : (x, l) in pairs}`` over a finite domain.

    ``pairs`` holds (point index, member index).  With ``inverted`` set the
    graph is read as ``T^-1 : L => X``.
    """

    domain: DomainSpec
    family: FunctionFamily
    pairs: frozenset[tuple[int, int]]
    inverted: bool = False

    def __post_init__(self):
        if not self.domain.is_finite:
            raise DomainError("operators live on finite domains")
        if self.family.domain != self.domain:
            raise DomainError("family and operator domains differ")
        pairs = frozenset(self.pairs)
        n, m = len(self.domain.points), len(self.family)
        if any(not (0 <= i < n and 0 <= k < m) for i, k in pairs):
            raise IndexError("operator pair out of range")
        object.__setattr__(self, "pairs", pairs)

    def image(self, x) -> list[Function]:
        i = self.domain.index(x)
        return [self.family[k] for j, k in sorted(self.pairs) if j == i]

    def preimage(self, l: Function) -> list:
        k = self.family.index_of(l)
        return [self.domain.points[i] for i, j in sorted(self.pairs) if j == k]

    def __len__(self) -> int:
        return len(self.pairs)

    def to_json(self) -> list:
        out = []
        for i, k in sorted(self.pairs):
            item = [format_point(self.domain.points[i]), self.family[k].to_json()]
            out.append(item[::-1] if self.inverted else item)
        return out


def full_grid(T: OperatorGraph) -> frozenset[tuple[int, int]]:
    return frozenset(
        (i, k) for i in range(len(T.domain.points)) for k in range(len(T.family))
    )


def _gap(T: OperatorGraph, a: tuple[int, int], b: tuple[int, int]) -> Fraction:
    (x, u), (y, v) = a, b
    fu, fv = T.family[u].form, T.family[v].form
    return fu[x] - fu[y] + fv[y] - fv[x]


def _pair_json(T: OperatorGraph, p: tuple[int, int]) -> dict:
    return {"point": format_point(T.domain.points[p[0]]), "function": T.family[p[1]].to_json()}


def is_monotone(T: OperatorGraph) -> RuleReport:
    """``u(x) - u(y) + v(y) - v(x) >= 0`` for all graph pairs."""
    pairs = sorted(T.pairs)
    for a_i, a in enumerate(pairs):
        for b in pairs[a_i + 1:]:
            g = _gap(T, a, b)
            if g < 0:
                w = {"kind": "monotone-quadruple", "first": _pair_json(T, a), "second": _pair_json(T, b), "value": format_ext(g)}
                return RuleReport("monotone", HOLDS, VIOLATED, [w], {"pairs": len(pairs), "inverted": T.inverted})
    return RuleReport("monotone", HOLDS, EQUAL, [], {"pairs": len(pairs), "inverted": T.inverted})


def is_maximal_within(T: OperatorGraph, S: Iterable[tuple[int, int]] | None = None) -> RuleReport:
    """No candidate pair outside T is monotonically related to all of T."""
    S = full_grid(T) if S is None else frozenset(S)
    if not T.pairs <= S:
        raise ValueError("candidate set must contain the operator's pairs")
    pairs = sorted(T.pairs)
    addable = []
    for c in sorted(S - T.pairs):
        if all(_gap(T, p, c) >= 0 for p in pairs):
            addable.append(c)
    witnesses = [dict(_pair_json(T, c), kind="addable-pair") for c in addable[:10]]
    details = {
        "candidates": len(S),
        "candidate_set": "full-grid" if S == full_grid(T) else "declared",
        "addable": len(addable),
        "inverted": T.inverted,
    }
    return RuleReport("maximal", HOLDS, VIOLATED if addable else EQUAL, witnesses, details)


def inverse_operator(T: OperatorGraph) -> OperatorGraph:
    return OperatorGraph(T.domain, T.family, T.pairs, not T.inverted)


def combine_operators(lam1, T1: OperatorGraph, lam2, T2: OperatorGraph) -> OperatorGraph:
    """``lam1 T1 + lam2 T2`` on the family ``lam1 L1 + lam2 L2``."""
    lam1, lam2 = as_rational(lam1), as_rational(lam2)
    if lam1 < 0 or lam2 < 0:
        raise ValueError("coefficients must be nonnegative")
    if T1.domain != T2.domain:
        raise DomainError("operators on different domains")
    if T1.inverted or T2.inverted:
        raise ValueError("combine forward operators only")
    S1, S2 = family_scale(T1.family, lam1), family_scale(T2.family, lam2)
    # scaling by zero collapses a family to {0}; map old indices to new ones
    map1 = [S1.index_of(linear_combination([(lam1, m)])) for m in T1.family]
    map2 = [S2.index_of(linear_combination([(lam2, m)])) for m in T2.family]
    Lsum = family_sum(S1, S2)
    where = {}
    for k, decomps in enumerate(Lsum.decompositions):
        for ij in decomps:
            where[ij] = k
    pairs = set()
    for x in range(len(T1.domain.points)):
        us = [map1[k] for i, k in T1.pairs if i == x]
        vs = [map2[k] for i, k in T2.pairs if i == x]
        for a in us:
            for b in vs:
                pairs.add((x, where[(a, b)]))
    return OperatorGraph(T1.domain, Lsum, frozenset(pairs))


def subdifferential_operator(f: Function, L: FunctionFamily) -> OperatorGraph:
    """The graph ``{(x, l) : l in subdiff_L f(x)}`` over dom f."""
    table = subdifferential_all(f, L)
    return OperatorGraph(L.domain, L, frozenset((i, k) for i, ks in table.items() for k in ks))


# ---------------------------------------------------------------------------
# Assumption and the search-based theorems
# ---------------------------------------------------------------------------


def cone(domain: DomainSpec, a, center) -> Function:
    """``a * |z - center|`` on a one-dimensional domain."""
    a = as_rational(a)
    if domain.dimension != 1:
        raise DomainError("norm cones are supported on one-dimensional domains")
    c = domain.point(center)
    c0 = c if domain.kind == REAL_LINE else c[0]
    text = f"{format_ext(a)}*abs(x - {format_ext(c0)})" if c0 >= 0 else f"{format_ext(a)}*abs(x + {format_ext(-c0)})"
    if domain.kind == REAL_LINE:
        form = PLFunction((c0,), Fraction(0), (-a, a))
        return Function(domain, form, text)
    return Function(domain, tuple(a * abs(p[0] - c0) for p in domain.points), text)


def _bounded_below(g: Function) -> bool:
    if g.domain.kind == REAL_LINE:
        return g.form is not None and is_finite(pl_infimum(g.form)[0])
    # a finite table has a finite minimum over dom g
    return any(is_finite(v) for v in g.form)


def _is_cone(m: Function, scale: Fraction) -> bool:
    dom = m.domain
    if dom.kind == REAL_LINE:
        form = m.form
        return (
            form is not None
            and len(form.breakpoints) == 1
            and form.slopes == (-scale, scale)
            and form(form.breakpoints[0]) == 0
        )
    if dom.dimension != 1:
        return False
    xs = [q[0] for q in dom.points]
    return any(all(v == scale * abs(x - c) for v, x in zip(m.form, xs)) for c in xs)


def cone_sample(Lin: FunctionFamily, a, x, a_values: Sequence = ()) -> FunctionFamily:
    """The sample used for one scale a: Lin without cones of the other
    declared scales, plus the a-cones centred at every domain point (at x
    only on the real line)."""
    a = as_rational(a)
    others = [as_rational(b) for b in a_values if as_rational(b) != a]
    dom = Lin.domain
    keep = [m for m in Lin.members if not any(_is_cone(m, b) for b in others)]
    centres = [x] if dom.kind == REAL_LINE else list(dom.points)
    return FunctionFamily.build(dom, keep + [cone(dom, a, c) for c in centres])


def assumption_check(
    f: Function,
    L: FunctionFamily,
    Lin: FunctionFamily,
    x,
    a_values: Sequence = (1,),
) -> RuleReport:
    """For each declared a: ``f + a|. - x|`` is bounded below on dom f, and
    the support sets of f and of the cone add up exactly (checked as
    exactness of the conjugate convolution over L + sample, the sample being
    :func:`cone_sample` for that a)."""
    x = f.domain.point(x)
    bounded, exact, added = {}, {}, []
    for a in a_values:
        key = format_ext(as_rational(a))
        g = cone(f.domain, a, x)
        if g not in Lin:
            added.append(key)
        sample = cone_sample(Lin, a, x, a_values)
        bounded[key] = _bounded_below(linear_combination([(1, f), (1, g)]))
        exact[key] = convolution_exact(f, L, g, sample)
    zero_ok = Function(f.domain, _zero_form(f.domain)) in Lin
    ok = all(bounded.values()) and all(exact.values())
    return RuleReport(
        "assumption",
        HOLDS if ok else FAILS,
        NOT_CHECKED,
        [],
        {
            "x": format_point(x),
            "a": [format_ext(as_rational(a)) for a in a_values],
            "bounded_below": bounded,
            "support_sum_exact": exact,
            "cones_added_to_sample": added,
            "zero_in_sample": zero_ok,
            "sample": [m.label() for m in Lin.members],
        },
        status="pass",
    )


def _zero_form(domain: DomainSpec):
    if domain.kind == REAL_LINE:
        return PLFunction.constant(0)
    return (Fraction(0),) * len(domain.points)


class SlackError(ValueError):
    """``f(y) + f*(v) <= v(y) + lambda * mu`` does not hold."""


class AssumptionError(ValueError):
    """The boundedness/support-sum assumption fails at the base point."""


@dataclass(frozen=True)
class BRWitness:
    z: object
    w: Function
    p: Fraction

    def to_json(self) -> dict:
        return {"z": format_point(self.z), "w": self.w.to_json(), "p": format_ext(self.p)}


def _linear_slope(d: Function) -> Fraction | None:
    """The p with ``d(z) = p * z`` everywhere, if d is linear."""
    if d.domain.kind == REAL_LINE:
        if d.form.breakpoints or d.form(0) != 0:
            return None
        return d.form.left_slope
    p = None
    for pt, v in zip(d.domain.points, d.form):
        z = pt[0]
        if z == 0:
            if v != 0:
                return None
            continue
        q = v / z
        if p is None:
            p = q
        elif q != p:
            return None
    return Fraction(0) if p is None else p


def _candidates(f: Function, Lsum: FunctionFamily, y, lam: Fraction) -> list:
    if f.domain.kind == REAL_LINE:
        pts = {y, y - lam, y + lam}
        if f.form is not None:
            pts |= set(f.form.breakpoints)
        for m in Lsum.members:
            pts |= set(m.form.breakpoints)
        return [p for p in pts if abs(p - y) <= lam]
    return [p for p in f.domain.points if sum((a - b) ** 2 for a, b in zip(p, y)) <= lam * lam]


def bronsted_rockafellar_search(
    f: Function,
    L: FunctionFamily,
    Lin: FunctionFamily,
    y,
    v: Function,
    lam,
    mu,
    a_values: Sequence | None = None,
) -> BRWitness | None:
    """Exhaustive search for z near y and w in the (L+Lin)-subdifferential
    at z with ``w - v`` linear of slope at most mu.

    Witnesses are ordered by distance to y, then |p|, then z, then family
    order.  Raises SlackError or AssumptionError on failed preconditions.
    """
    lam, mu = as_rational(lam), as_rational(mu)
    if lam < 0 or mu < 0:
        raise ValueError("lambda and mu must be nonnegative")
    if f.domain.dimension != 1:
        raise DomainError("the search is implemented on one-dimensional domains")
    y = f.domain.point(y)
    fy = f(y)
    if not is_finite(fy):
        raise DomainError("y is outside the domain of f")
    if v not in L:
        raise DomainError("v must be a member of L")
    fstar = conjugate(f, L).value_of(v)
    slack = fy + fstar - v(y)
    if not is_finite(fstar) or slack > lam * mu:
        raise SlackError(f"slack {format_ext(slack)} exceeds lambda*mu = {format_ext(lam * mu)}")
    rep = assumption_check(f, L, Lin, y, a_values or (1,))
    if rep.hypothesis != HOLDS:
        raise AssumptionError(f"assumption fails at y: {rep.details}")
    Lsum = family_sum(L, Lin)
    found = []
    for z in _candidates(f, Lsum, y, lam):
        if not is_finite(f(z)):
            continue
        dist = (z - y) ** 2 if f.domain.kind == REAL_LINE else sum((a - b) ** 2 for a, b in zip(z, y))
        for k in sorted(subdifferential(f, Lsum, z).indices):
            w = Lsum[k]
            p = _linear_slope(linear_combination([(1, w), (-1, v)]))
            if p is not None and abs(p) <= mu:
                found.append(((dist, abs(p), z, k), BRWitness(z, w, p)))
    if not found:
        return None
    return min(found, key=lambda t: t[0])[1]


def bronsted_rockafellar_check(f, L, Lin, y, v, lam, mu, a_values=None) -> RuleReport:
    lam_q, mu_q = as_rational(lam), as_rational(mu)
    details = {"y": format_point(f.domain.point(y)), "v": v.to_json(), "lambda": format_ext(lam_q), "mu": format_ext(mu_q)}
    try:
        w = bronsted_rockafellar_search(f, L, Lin, y, v, lam, mu, a_values)
    except SlackError as exc:
        return RuleReport("bronsted-rockafellar", FAILS, NOT_CHECKED, [], dict(details, error=str(exc)))
    except AssumptionError as exc:
        return RuleReport("bronsted-rockafellar", FAILS, NOT_CHECKED, [], dict(details, error="assumption fails"))
    if w is None:
        return RuleReport("bronsted-rockafellar", HOLDS, VIOLATED, [{"kind": "no-witness"}], details)
    details["witness"] = w.to_json()
    return RuleReport("bronsted-rockafellar", HOLDS, EQUAL, [dict(w.to_json(), kind="witness")], details)


def zero_subgradient_check(
    f: Function, L: FunctionFamily, Lin: FunctionFamily, a_values: Sequence = (1,)
) -> RuleReport:
    """If every subgradient u at every x has ``u(x) >= 0``, then the zero
    function is a subgradient at 0 (under the assumption at every point)."""
    dom = f.domain
    if not dom.is_finite:
        raise DomainError("the hypothesis is enumerated on finite domains")
    origin = (Fraction(0),) * dom.dimension
    if not dom.contains(origin):
        raise DomainError("0 is not a domain point")
    zero = Function(dom, _zero_form(dom), "0")
    if zero not in L:
        raise DomainError("the zero function must be a member of L")
    table = subdifferential_all(f, L)
    bad = None
    for i in sorted(table):
        for k in sorted(table[i]):
            if L[k].form[i] < 0:
                bad = (i, k)
                break
        if bad:
            break
    details = {"variational_inequality": bad is None}
    if bad is not None:
        i, k = bad
        w = {"kind": "hypothesis-witness", "point": format_point(dom.points[i]), "u": L[k].to_json()}
        return RuleReport("zero-subgradient", FAILS, NOT_CHECKED, [w], details)
    # the assumption is the other half of the hypothesis; without it the
    # conclusion is recorded but not asserted
    assumption = all(
        assumption_check(f, L, Lin, dom.points[i], a_values).hypothesis == HOLDS for i in f.domain_indices()
    )
    details["assumption"] = assumption
    concl = is_finite(f(origin)) and zero in _sub_members(f, L, origin)
    details["zero_in_subdifferential_at_0"] = concl
    if concl:
        return RuleReport("zero-subgradient", HOLDS, EQUAL, [], details)
    if not assumption:
        return RuleReport("zero-subgradient", HOLDS, NOT_CHECKED, [], details)
    return RuleReport("zero-subgradient", HOLDS, VIOLATED, [{"kind": "zero-not-subgradient", "point": format_point(origin)}], details)


def _sub_members(f, L, x) -> list[Function]:
    return subdifferential(f, L, x).functions()
