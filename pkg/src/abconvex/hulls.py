"""Support sets, abstract convex hulls and separation."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .families import (
    REAL_LINE,
    DomainError,
    DomainSpec,
    Function,
    FunctionFamily,
    envelope,
    format_point,
)
from .numerics import (
    IntervalSet,
    pl_dominates,
    pl_strict_above_region,
)
from .reports import EQUAL, FAILS, HOLDS, VIOLATED, RuleReport

__all__ = [
    "SupportSet",
    "PointSet",
    "NotSeparableError",
    "SeparationResult",
    "dominates",
    "strict_region",
    "support_set",
    "co_function",
    "is_abstract_convex",
    "co_set",
    "point_set_hull",
    "is_hull_closed",
    "separate_point_from_set",
    "separate_sets",
    "sublevel_set",
    "hull_laws_check",
    "separation_witness_check",
]


@dataclass(frozen=True)
class SupportSet:
    """A subset of a family, given by member indices."""

    family: FunctionFamily
    indices: frozenset[int]

    def __post_init__(self):
        idx = frozenset(self.indices)
        if any(not 0 <= i < len(self.family) for i in idx):
            raise IndexError("support set index out of range")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, family: FunctionFamily, functions: Iterable[Function]) -> "SupportSet":
        return cls(family, family.subset_indices(functions))

    def functions(self) -> list[Function]:
        return [self.family.members[i] for i in sorted(self.indices)]

    def labels(self) -> list[str]:
        return self.family.labels(self.indices)

    def __contains__(self, f: Function) -> bool:
        i = self.family.index_of(f)
        return i is not None and i in self.indices

    def __len__(self) -> int:
        return len(self.indices)

    def __le__(self, other: "SupportSet") -> bool:
        return self.indices <= other.indices

    def __and__(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(self.family, self.indices & other.indices)

    def __or__(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(self.family, self.indices | other.indices)


@dataclass(frozen=True)
class PointSet:
    """A subset of the domain: point indices (finite) or an interval set."""

    domain: DomainSpec
    indices: frozenset[int] = frozenset()
    region: IntervalSet | None = None

    def __post_init__(self):
        if self.domain.kind == REAL_LINE:
            if self.region is None:
                object.__setattr__(self, "region", IntervalSet.empty())
        else:
            object.__setattr__(self, "indices", frozenset(self.indices))

    @classmethod
    def of_points(cls, domain: DomainSpec, points: Iterable) -> "PointSet":
        return cls(domain, frozenset(domain.index(p) for p in points))

    @classmethod
    def everything(cls, domain: DomainSpec) -> "PointSet":
        if domain.kind == REAL_LINE:
            return cls(domain, region=IntervalSet.real_line())
        return cls(domain, frozenset(range(len(domain.points))))

    def __contains__(self, p) -> bool:
        if self.domain.kind == REAL_LINE:
            return self.domain.point(p) in self.region
        return self.domain.contains(p) and self.domain.index(p) in self.indices

    def is_empty(self) -> bool:
        if self.domain.kind == REAL_LINE:
            return self.region.is_empty()
        return not self.indices

    def points(self) -> list:
        return [self.domain.points[i] for i in sorted(self.indices)]

    def __and__(self, other: "PointSet") -> "PointSet":
        if self.domain.kind == REAL_LINE:
            return PointSet(self.domain, region=self.region.intersection(other.region))
        return PointSet(self.domain, self.indices & other.indices)

    def __le__(self, other: "PointSet") -> bool:
        if self.domain.kind == REAL_LINE:
            return self.region.intersection(other.region) == self.region
        return self.indices <= other.indices

    def to_json(self):
        if self.domain.kind == REAL_LINE:
            return str(self.region)
        return [format_point(p) for p in self.points()]


class NotSeparableError(ValueError):
    """No point separates the function from the set (it lies in the hull)."""


# ---------------------------------------------------------------------------
# Backend-dispatching primitives
# ---------------------------------------------------------------------------


def _check_domain(a: DomainSpec, b: DomainSpec) -> None:
    if a != b:
        raise DomainError("domain mismatch")


def dominates(f: Function, g: Function) -> bool:
    """``f(x) >= g(x)`` everywhere."""
    _check_domain(f.domain, g.domain)
    if f.domain.kind == REAL_LINE:
        if g.form is None:
            return True
        if f.form is None:
            return False
        return pl_dominates(f.form, g.form)
    return all(a >= b for a, b in zip(f.form, g.form))


def strict_region(f: Function, g: Function) -> PointSet:
    """Where ``f(x) > g(x)``: an interval set on the line, a point set otherwise."""
    _check_domain(f.domain, g.domain)
    dom = f.domain
    if dom.kind == REAL_LINE:
        if f.form is None:
            return PointSet(dom, region=IntervalSet.empty())
        if g.form is None:
            return PointSet.everything(dom)
        return PointSet(dom, region=pl_strict_above_region(f.form, g.form))
    return PointSet(dom, frozenset(i for i, (a, b) in enumerate(zip(f.form, g.form)) if a > b))


def point_witness(ps: PointSet):
    """Reproducible element of a point set: smallest norm, then smallest point."""
    if ps.domain.kind == REAL_LINE:
        return ps.region.witness()
    if not ps.indices:
        return None
    pts = [ps.domain.points[i] for i in ps.indices]
    return min(pts, key=lambda p: (sum(c * c for c in p), p))


# ---------------------------------------------------------------------------
# Hulls
# ---------------------------------------------------------------------------


def support_set(H: FunctionFamily, f: Function) -> SupportSet:
    """Members of H lying below f everywhere."""
    _check_domain(H.domain, f.domain)
    return SupportSet(H, frozenset(i for i, h in enumerate(H.members) if dominates(f, h)))


def co_function(H: FunctionFamily, f: Function) -> Function:
    """The H-convex hull of f: supremum of its support set (-inf if empty)."""
    supp = support_set(H, f)
    return envelope(supp.functions(), H.domain, source="")


def is_abstract_convex(H: FunctionFamily, f: Function) -> bool:
    return co_function(H, f).form == f.form


def co_set(H: FunctionFamily, C: SupportSet) -> SupportSet:
    """Smallest H-convex set containing C: the support set of C's envelope."""
    if C.family is not H and C.family != H:
        raise DomainError("the set does not index into this family")
    top = envelope(C.functions(), H.domain)
    return support_set(H, top)


def sublevel_set(f: Function, c) -> PointSet:
    """``{x : f(x) <= c}`` on a finite domain."""
    if not f.domain.is_finite:
        raise DomainError("sublevel sets are computed on finite domains")
    c = Fraction(c)
    return PointSet(f.domain, frozenset(i for i, v in enumerate(f.form) if v <= c))


def point_set_hull(L: FunctionFamily, Y: PointSet) -> PointSet:
    """Points y with ``l(y) <= sup_{x in Y} l(x)`` for every l in L."""
    dom = L.domain
    if not dom.is_finite:
        raise DomainError("point-set hulls are computed on finite domains")
    if not Y.indices:
        return PointSet(dom, frozenset())
    tops = [max(m.form[i] for i in Y.indices) for m in L.members]
    keep = frozenset(
        j
        for j in range(len(dom.points))
        if all(m.form[j] <= t for m, t in zip(L.members, tops))
    )
    return PointSet(dom, keep)


def is_hull_closed(H: FunctionFamily, C: SupportSet) -> bool:
    return co_set(H, C).indices == C.indices


# ---------------------------------------------------------------------------
# Separation
# ---------------------------------------------------------------------------


def separate_point_from_set(H: FunctionFamily, U: SupportSet, l: Function):
    """A point x with ``l(x) > u(x)`` for every u in U.

    Raises ``NotSeparableError`` when l lies in the hull of U, and
    ``ValueError`` when U is not hull-closed.
    """
    if not is_hull_closed(H, U):
        raise ValueError("the set is not H-convex")
    if l not in H:
        raise DomainError("the function is not a member of H")
    top = envelope(U.functions(), H.domain)
    region = strict_region(l, top)
    x = point_witness(region)
    if x is None:
        raise NotSeparableError(f"{l.label()!r} cannot be separated from the set")
    return x


@dataclass(frozen=True)
class SeparationResult:
    """Outcome of a set-from-set separation attempt.

    ``regions`` maps each member of the upper set to the region where it
    strictly exceeds the envelope of the lower set; ``point`` lies in all of
    them, or is None when their intersection is empty.
    """

    point: object
    regions: tuple[tuple[str, PointSet], ...]
    common: PointSet
    problems: tuple[str, ...] = ()

    @property
    def separated(self) -> bool:
        return self.point is not None


def separate_sets(H: FunctionFamily, A: SupportSet, B: SupportSet) -> SeparationResult:
    """Look for a point where every member of B strictly exceeds every
    member of A.  Precondition violations are reported, not raised."""
    problems = []
    if not is_hull_closed(H, A):
        problems.append("lower set is not H-convex")
    if not is_hull_closed(H, B):
        problems.append("upper set is not H-convex")
    if A.indices & B.indices:
        problems.append("sets are not disjoint")
    top = envelope(A.functions(), H.domain)
    regions = []
    common = PointSet.everything(H.domain)
    for b in B.functions():
        r = strict_region(b, top)
        regions.append((b.label(), r))
        common = common & r
    return SeparationResult(point_witness(common), tuple(regions), common, tuple(problems))


# ---------------------------------------------------------------------------
# Law checks
# ---------------------------------------------------------------------------


def hull_laws_check(
    H: FunctionFamily,
    sets: Iterable[frozenset[int]] = (),
    point_sets: Iterable[frozenset[int]] = (),
    f: Function | None = None,
    c_values: Iterable = (),
) -> RuleReport:
    """Closure-operator laws on every listed set and pair of sets.

    For co_set and point_set_hull: extensive, monotone (on nested pairs),
    idempotent.  Intersections of hull-closed sets are hull-closed.  The hull
    of f is H-convex and lies below f; sublevel sets of an f that is convex
    for the vertical shifts of H are closed under point_set_hull.
    """
    witnesses: list[dict] = []
    sets = [frozenset(s) for s in sets]
    point_sets = [frozenset(s) for s in point_sets]

    def law(name: str, ok: bool, **info) -> None:
        if not ok:
            witnesses.append({"kind": "hull-law", "law": name, **info})

    hulls = [co_set(H, SupportSet(H, s)).indices for s in sets]
    for s, h in zip(sets, hulls):
        law("co_set-extensive", s <= h, members=H.labels(s))
        law("co_set-idempotent", co_set(H, SupportSet(H, h)).indices == h, members=H.labels(s))
    for i, (s, h) in enumerate(zip(sets, hulls)):
        for t, g in zip(sets[i + 1:], hulls[i + 1:]):
            if s <= t:
                law("co_set-monotone", h <= g, members=H.labels(s), larger=H.labels(t))
            if t <= s:
                law("co_set-monotone", g <= h, members=H.labels(t), larger=H.labels(s))
            both = h & g
            law("intersection-closed", co_set(H, SupportSet(H, both)).indices == both, members=H.labels(both))

    dom = H.domain
    if dom.is_finite:

        def pts(ix):
            return [format_point(dom.points[j]) for j in sorted(ix)]

        phulls = [point_set_hull(H, PointSet(dom, s)).indices for s in point_sets]
        for s, h in zip(point_sets, phulls):
            law("point-hull-extensive", s <= h, points=pts(s))
            law("point-hull-idempotent", point_set_hull(H, PointSet(dom, h)).indices == h, points=pts(s))
        for i, (s, h) in enumerate(zip(point_sets, phulls)):
            for t, g in zip(point_sets[i + 1:], phulls[i + 1:]):
                if s <= t:
                    law("point-hull-monotone", h <= g, points=pts(s), larger=pts(t))
                if t <= s:
                    law("point-hull-monotone", g <= h, points=pts(t), larger=pts(s))
                both = h & g
                law("point-intersection-closed", point_set_hull(H, PointSet(dom, both)).indices == both, points=pts(both))

    hyp = HOLDS
    if f is not None:
        cof = co_function(H, f)
        law("co_function-convex", is_abstract_convex(H, cof), function=f.to_json())
        law("co_function-below", dominates(f, cof), function=f.to_json())
        if dom.is_finite and c_values:
            from .calculus import is_l_convex

            if is_l_convex(f, H):
                for c in c_values:
                    S = sublevel_set(f, c)
                    law("sublevel-closed", point_set_hull(H, S).indices == S.indices, function=f.to_json(), c=str(c))
            else:
                hyp = FAILS
    details = {"sets": len(sets), "point_sets": len(point_sets), "members": len(H)}
    return RuleReport("hull-laws", hyp, VIOLATED if witnesses else EQUAL, witnesses, details)


def separation_witness_check(H: FunctionFamily, A: SupportSet, B: SupportSet) -> RuleReport:
    """A reported separating point really puts every member of B strictly
    above every member of A; when none is reported, the strict regions have
    an empty intersection."""
    res = separate_sets(H, A, B)
    witnesses = []
    if res.point is not None:
        for b in B.functions():
            for a in A.functions():
                if not b(res.point) > a(res.point):
                    witnesses.append(
                        {
                            "kind": "bad-separating-point",
                            "point": format_point(res.point),
                            "lower": a.to_json(),
                            "upper": b.to_json(),
                        }
                    )
    elif not res.common.is_empty():
        witnesses.append({"kind": "missed-separating-point", "common": res.common.to_json()})
    hyp = FAILS if res.problems else HOLDS
    details = {"separated": res.separated, "problems": list(res.problems)}
    return RuleReport("separation-witness", hyp, VIOLATED if witnesses else EQUAL, witnesses, details)
