"""Domains, elementary functions and finite function families.

Two backends carry every function:

* ``real_line``: the function is a :class:`~abconvex.numerics.PLFunction`
  (or ``None``, the function that is identically minus infinity);
* ``finite_points``: the function is a tuple of extended reals, one per
  domain point.

Function identity is extensional: two functions are equal when their
backend forms are equal, whatever expressions produced them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import expr as ex
from .numerics import (
    INF,
    NEG_INF,
    ExtReal,
    PLFunction,
    as_rational,
    format_ext,
    identity_memo,
    is_finite,
    pl_combine,
    pl_eval,
    pl_upper_envelope,
)

__all__ = [
    "REAL_LINE",
    "FINITE_POINTS",
    "DomainSpec",
    "DomainError",
    "Function",
    "FunctionFamily",
    "lower",
    "function_from_text",
    "family_from_texts",
    "family_pin",
    "family_sum",
    "family_compose",
    "family_scale",
    "vertical_element",
    "envelope",
]

REAL_LINE = "real_line"
FINITE_POINTS = "finite_points"

Point = tuple  # coordinates of a finite-domain point


class DomainError(ValueError):
    """A point, map or function does not fit the domain it is used with."""


def _as_point(p) -> tuple[Fraction, ...]:
    if isinstance(p, (tuple, list)):
        return tuple(as_rational(c) for c in p)
    return (as_rational(p),)


@dataclass(frozen=True)
class DomainSpec:
    """The set X: either the whole real line or finitely many rational points."""

    kind: str
    points: tuple[tuple[Fraction, ...], ...] = ()
    dimension: int = 1
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.kind == REAL_LINE:
            if self.dimension != 1 or self.points:
                raise DomainError("the real line backend is one-dimensional and has no point list")
        elif self.kind == FINITE_POINTS:
            pts = tuple(_as_point(p) for p in self.points)
            if not pts:
                raise DomainError("a finite domain needs at least one point")
            dims = {len(p) for p in pts}
            if len(dims) != 1:
                raise DomainError("all points must have the same dimension")
            index = {p: i for i, p in enumerate(pts)}
            if len(index) != len(pts):
                raise DomainError("domain points must be pairwise distinct")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "dimension", dims.pop())
            object.__setattr__(self, "_index", index)
        else:
            raise DomainError(f"unknown backend {self.kind!r}")

    @classmethod
    def real_line(cls) -> "DomainSpec":
        return cls(REAL_LINE)

    @classmethod
    def finite(cls, points: Iterable) -> "DomainSpec":
        return cls(FINITE_POINTS, tuple(points))

    @classmethod
    def grid(cls, lo, hi, step=1) -> "DomainSpec":
        """One-dimensional grid lo, lo+step, ..., up to hi inclusive."""
        lo, hi, step = as_rational(lo), as_rational(hi), as_rational(step)
        if step <= 0:
            raise DomainError("grid step must be positive")
        pts = []
        x = lo
        while x <= hi:
            pts.append((x,))
            x += step
        return cls.finite(pts)

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE_POINTS

    def __len__(self) -> int:
        return len(self.points)

    def point(self, p):
        """Normalise a user point: a Fraction on the real line, a tuple otherwise."""
        if self.kind == REAL_LINE:
            if isinstance(p, (tuple, list)):
                if len(p) != 1:
                    raise DomainError("real-line points are scalars")
                p = p[0]
            return as_rational(p)
        pt = _as_point(p)
        if pt not in self._index:
            raise DomainError(f"point {format_point(pt)} is not in the domain")
        return pt

    def index(self, p) -> int:
        if self.kind == REAL_LINE:
            raise DomainError("real-line points have no index")
        return self._index[self.point(p)]

    def contains(self, p) -> bool:
        if self.kind == REAL_LINE:
            return True
        try:
            return _as_point(p) in self._index
        except (TypeError, ValueError):
            return False

    def translate(self, t) -> "DomainSpec":
        """The domain X - t."""
        if self.kind == REAL_LINE:
            return self
        shift = _as_point(t)
        if len(shift) != self.dimension:
            raise DomainError("translation has the wrong dimension")
        return DomainSpec.finite(tuple(a - b for a, b in zip(p, shift)) for p in self.points)


def format_point(p) -> str | list[str]:
    if isinstance(p, tuple):
        if len(p) == 1:
            return format_ext(p[0])
        return [format_ext(c) for c in p]
    return format_ext(p)


@dataclass(frozen=True)
class Function:
    """A function on a domain with its exact backend form.

    ``form`` is a PLFunction (or None for the constant -inf) on the real line,
    and a tuple of extended reals on a finite domain.  ``source`` is the text
    used for reporting and does not take part in equality.
    """

    domain: DomainSpec
    form: object
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if self.domain.kind == REAL_LINE:
            if self.form is not None and not isinstance(self.form, PLFunction):
                raise DomainError("real-line functions must be PL functions")
        else:
            form = tuple(self.form)
            if len(form) != len(self.domain.points):
                raise DomainError("value table length does not match the domain")
            object.__setattr__(self, "form", form)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, p) -> ExtReal:
        if self.domain.kind == REAL_LINE:
            if self.form is None:
                return NEG_INF
            return pl_eval(self.form, self.domain.point(p))
        return self.form[self.domain.index(p)]

    def at_index(self, i: int) -> ExtReal:
        return self.form[i]

    @property
    def is_neg_inf(self) -> bool:
        if self.domain.kind == REAL_LINE:
            return self.form is None
        return all(v == NEG_INF for v in self.form)

    @property
    def is_elementary(self) -> bool:
        """Finite everywhere (members of H and L must be)."""
        if self.domain.kind == REAL_LINE:
            return self.form is not None
        return all(is_finite(v) for v in self.form)

    def domain_indices(self) -> list[int]:
        """Indices of points where the value is below +inf (``dom f``)."""
        return [i for i, v in enumerate(self.form) if v != INF]

    def label(self) -> str:
        return self.source or self.describe()

    def describe(self) -> str:
        if self.domain.kind == REAL_LINE:
            if self.form is None:
                return "-inf"
            return _pl_text(self.form)
        return "[" + ", ".join(format_ext(v) for v in self.form) + "]"

    def to_json(self):
        """Expression text when exact, else the value table."""
        if self.domain.kind == REAL_LINE:
            return self.source or self.describe()
        if self.source and _source_matches(self):
            return self.source
        return {"table": [format_ext(v) for v in self.form]}

    # -- algebra (extensional) ---------------------------------------------

    def combine(self, terms: Sequence[tuple[Fraction, "Function"]], offset=0, source: str = ""):
        """Linear combination ``self + sum(c * g)`` plus an offset."""
        return linear_combination([(Fraction(1), self), *terms], offset, source)

    def __add__(self, other: "Function") -> "Function":
        return linear_combination([(1, self), (1, other)], 0, _join(self, "+", other))

    def __sub__(self, other: "Function") -> "Function":
        return linear_combination([(1, self), (-1, other)], 0, _join(self, "-", other))

    def minus_constant(self, c) -> "Function":
        c = Fraction(c)
        return linear_combination([(1, self)], -c, _shift_text(self.label(), c))


def _source_matches(f: Function) -> bool:
    try:
        return lower(ex.parse_expr(f.source), f.domain).form == f.form
    except (ex.ExprSyntaxError, DomainError, ValueError):
        return False


def _pl_text(f: PLFunction) -> str:
    """An expression equal to f: affine part plus weighted kinks |x - b|."""
    # f(x) = a*x + c + sum_i k_i/2 * |x - b_i| with k_i the slope jumps
    jumps = [f.slopes[i + 1] - f.slopes[i] for i in range(len(f.breakpoints))]
    a = (f.left_slope + f.right_slope) / 2
    c = f(0) - sum((k / 2 * abs(b) for k, b in zip(jumps, f.breakpoints)), Fraction(0))
    parts = []
    if a != 0:
        parts.append(f"{format_ext(a)}*x")
    for k, b in zip(jumps, f.breakpoints):
        inner = "x" if b == 0 else (f"x - {format_ext(b)}" if b > 0 else f"x + {format_ext(-b)}")
        parts.append(f"{format_ext(k / 2)}*abs({inner})")
    if c != 0 or not parts:
        parts.append(format_ext(c))
    text = " + ".join(parts)
    return text.replace("+ -", "- ")


def _join(f: Function, op: str, g: Function) -> str:
    return f"({f.label()}) {op} ({g.label()})"


def _shift_text(src: str, c: Fraction) -> str:
    if c == 0:
        return src
    if c > 0:
        return f"({src}) - {format_ext(c)}"
    return f"({src}) + {format_ext(-c)}"


def linear_combination(terms, offset=0, source: str = "") -> Function:
    terms = [(Fraction(c), g) for c, g in terms]
    domain = terms[0][1].domain
    for _, g in terms:
        if g.domain != domain:
            raise DomainError("functions live on different domains")
    offset = Fraction(offset)
    if domain.kind == REAL_LINE:
        if any(g.form is None for c, g in terms if c != 0):
            raise DomainError("cannot combine the -inf function")
        form = pl_combine([(c, g.form) for c, g in terms if c != 0], offset)
        return Function(domain, form, source)
    rows = [g.form if c == 1 else tuple(c * v for v in g.form) for c, g in terms if c != 0]
    if not rows:
        return Function(domain, (offset,) * len(domain.points), source)
    acc = list(rows[0]) if offset == 0 else [offset + v for v in rows[0]]
    for row in rows[1:]:
        acc = [a + b for a, b in zip(acc, row)]
    return Function(domain, tuple(acc), source)


def envelope(fs: Sequence[Function], domain: DomainSpec | None = None, source: str = "") -> Function:
    """Pointwise supremum; the supremum of nothing is the -inf function."""
    fs = list(fs)
    if not fs:
        if domain is None:
            raise DomainError("domain required for an empty envelope")
        if domain.kind == REAL_LINE:
            return Function(domain, None, "-inf")
        return Function(domain, (NEG_INF,) * len(domain.points), "-inf")
    domain = fs[0].domain
    if not source:
        source = fs[0].label() if len(fs) == 1 else _nested("max", [f.label() for f in fs])
    if domain.kind == REAL_LINE:
        forms = [f.form for f in fs if f.form is not None]
        if not forms:
            return Function(domain, None, "-inf")
        return Function(domain, pl_upper_envelope(forms), source)
    vals = tuple(max(f.form[i] for f in fs) for i in range(len(domain.points)))
    return Function(domain, vals, source)


def _nested(op: str, labels: list[str]) -> str:
    text = labels[0]
    for lab in labels[1:]:
        text = f"{op}({text}, {lab})"
    return text


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------


def lower(e: ex.FunctionExpr, domain: DomainSpec, source: str | None = None) -> Function:
    """Build the backend form of an expression on a domain."""
    used = ex.variables(e)
    if used and max(used) > domain.dimension:
        raise DomainError(
            f"expression uses x{max(used)} on a {domain.dimension}-dimensional domain"
        )
    if source is None:
        source = ex.to_text(e)
    if domain.kind == REAL_LINE:
        form = ex.fold(
            e,
            {
                "lit": PLFunction.constant,
                "var": lambda i: PLFunction.affine(1, 0),
                "neg": lambda a: pl_combine([(-1, a)]),
                "add": lambda a, b: pl_combine([(1, a), (1, b)]),
                "sub": lambda a, b: pl_combine([(1, a), (-1, b)]),
                "scale": lambda c, a: pl_combine([(c, a)]),
                "abs": lambda a: pl_upper_envelope([a, pl_combine([(-1, a)])]),
                "max": lambda a, b: pl_upper_envelope([a, b]),
                "min": lambda a, b: pl_combine([(-1, pl_upper_envelope([pl_combine([(-1, a)]), pl_combine([(-1, b)])]))]),
            },
        )
        return Function(domain, form, source)
    return Function(domain, tuple(ex.evaluate(e, p) for p in domain.points), source)


def function_from_text(text: str, domain: DomainSpec) -> Function:
    return lower(ex.parse_expr(text), domain, source=text.strip())


def family_from_texts(texts: Iterable[str], domain: DomainSpec) -> "FunctionFamily":
    return FunctionFamily.build(domain, [function_from_text(t, domain) for t in texts])


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionFamily:
    """Finite ordered collection of pairwise distinct elementary functions.

    ``decompositions`` is set on families built by :func:`family_sum`: entry
    ``k`` lists every pair ``(i, j)`` of operand indices whose sum is member k.
    """

    domain: DomainSpec
    members: tuple[Function, ...]
    decompositions: tuple[tuple[tuple[int, int], ...], ...] | None = None
    _lookup: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        lookup = {}
        for i, m in enumerate(self.members):
            if m.domain != self.domain:
                raise DomainError("family member on a different domain")
            if not m.is_elementary:
                raise DomainError(f"family member {m.label()!r} is not finite everywhere")
            if m.form in lookup:
                raise DomainError("family members must be pairwise distinct; use build()")
            lookup[m.form] = i
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def build(cls, domain: DomainSpec, functions: Iterable[Function]) -> "FunctionFamily":
        """Deduplicate, keeping the first-seen member of each class."""
        seen = {}
        for f in functions:
            if f.form not in seen:
                seen[f.form] = f
        return cls(domain, tuple(seen.values()))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i: int) -> Function:
        return self.members[i]

    def index_of(self, f: Function) -> int | None:
        return self._lookup.get(f.form)

    def __contains__(self, f: Function) -> bool:
        return f.form in self._lookup

    def subset_indices(self, fs: Iterable[Function]) -> frozenset[int]:
        out = set()
        for f in fs:
            i = self.index_of(f)
            if i is None:
                raise DomainError(f"{f.label()!r} is not a member of the family")
            out.add(i)
        return frozenset(out)

    def is_subfamily_of(self, other: "FunctionFamily") -> bool:
        return all(m in other for m in self.members)

    def labels(self, indices: Iterable[int]) -> list[str]:
        return [self.members[i].label() for i in sorted(indices)]


def family_pin(L: FunctionFamily, x) -> FunctionFamily:
    """The family ``L_x = {l - l(x)}``; every member vanishes at x."""
    if L.domain.kind == FINITE_POINTS and not L.domain.contains(x):
        raise DomainError("pin point is outside the domain")
    x = L.domain.point(x)
    return FunctionFamily.build(L.domain, [m.minus_constant(m(x)) for m in L.members])


@identity_memo(32)
def family_sum(L1: FunctionFamily, L2: FunctionFamily) -> FunctionFamily:
    """All sums ``l1 + l2`` with the decomposition index kept per member."""
    if L1.domain != L2.domain:
        raise DomainError("families live on different domains")
    return _family_sum(L1, L2)


def _family_sum(L1: FunctionFamily, L2: FunctionFamily) -> FunctionFamily:
    order: dict = {}
    for i, a in enumerate(L1.members):
        for j, b in enumerate(L2.members):
            s = linear_combination([(1, a), (1, b)], 0, _sum_text(a, b))
            entry = order.get(s.form)
            if entry is None:
                order[s.form] = (s, [(i, j)])
            else:
                entry[1].append((i, j))
    members = tuple(s for s, _ in order.values())
    decomps = tuple(tuple(d) for _, d in order.values())
    return FunctionFamily(L1.domain, members, decomps)


def _sum_text(a: Function, b: Function) -> str:
    return f"{a.label()} + ({b.label()})"


def family_scale(L: FunctionFamily, c) -> FunctionFamily:
    c = Fraction(c)
    return FunctionFamily.build(
        L.domain,
        [linear_combination([(c, m)], 0, f"{format_ext(c)}*({m.label()})") for m in L.members],
    )


def family_compose(L: FunctionFamily, u_map: Sequence, source_domain: DomainSpec) -> FunctionFamily:
    """Members ``l o u`` on Y, with u given as the images of Y's points in X."""
    Y = source_domain
    if not (L.domain.is_finite and Y.is_finite):
        raise DomainError("composition needs finite backends")
    idx = compose_indices(L.domain, u_map, Y)
    return FunctionFamily.build(Y, [compose_function(m, idx, Y) for m in L.members])


def compose_indices(X: DomainSpec, u_map: Sequence, Y: DomainSpec) -> list[int]:
    if len(u_map) != len(Y.points):
        raise DomainError("the map needs one image per source point")
    out = []
    for img in u_map:
        if not X.contains(img):
            raise DomainError(f"the map sends a point to {img!r}, outside the target domain")
        out.append(X.index(img))
    return out


def compose_function(f: Function, idx: Sequence[int], Y: DomainSpec) -> Function:
    return Function(Y, tuple(f.form[i] for i in idx), f"({f.label()}) o u")


def vertical_element(l: Function, c) -> Function:
    """The abstract affine function ``l - c``."""
    return l.minus_constant(as_rational(c) if not isinstance(c, Fraction) else c)
