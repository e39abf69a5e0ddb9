"""Exact scalars, extended reals, interval sets and piecewise-linear functions.

Rationals are :class:`fractions.Fraction`.  An extended real is either a
``Fraction`` or one of the two infinity singletons :data:`INF` and
:data:`NEG_INF`, which order and add correctly against fractions.

:class:`PLFunction` is a continuous piecewise-linear function on the whole
real line with linear tails.  Every constructor returns the canonical form
(adjacent segments never share a slope), so structural equality coincides
with pointwise equality.
"""

from __future__ import annotations

import bisect
import functools
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence, Union

__all__ = [
    "Rational",
    "ExtReal",
    "Infinity",
    "INF",
    "NEG_INF",
    "as_rational",
    "is_finite",
    "format_ext",
    "parse_ext",
    "Interval",
    "IntervalSet",
    "PLFunction",
    "EmptyEnvelopeError",
    "pl_eval",
    "pl_combine",
    "pl_upper_envelope",
    "pl_dominates",
    "pl_strict_above_region",
    "pl_supremum",
    "pl_infimum",
    "pl_sup_on",
    "canonical_witness",
    "identity_memo",
]

Rational = Fraction


@total_ordering
class Infinity:
    """Signed infinity. Only two instances exist: ``INF`` and ``NEG_INF``."""

    __slots__ = ("sign",)
    _instances: dict[int, "Infinity"] = {}

    def __new__(cls, sign: int) -> "Infinity":
        sign = 1 if sign > 0 else -1
        inst = cls._instances.get(sign)
        if inst is None:
            inst = super().__new__(cls)
            object.__setattr__(inst, "sign", sign)
            cls._instances[sign] = inst
        return inst

    def __setattr__(self, name, value):
        raise AttributeError("Infinity is immutable")

    def __reduce__(self):
        return (Infinity, (self.sign,))

    def __repr__(self) -> str:
        return "INF" if self.sign > 0 else "NEG_INF"

    def __str__(self) -> str:
        return "inf" if self.sign > 0 else "-inf"

    def __hash__(self) -> int:
        return hash(("Infinity", self.sign))

    def __eq__(self, other) -> bool:
        return isinstance(other, Infinity) and other.sign == self.sign

    def __lt__(self, other) -> bool:
        if isinstance(other, Infinity):
            return self.sign < other.sign
        return self.sign < 0

    def __gt__(self, other) -> bool:
        if isinstance(other, Infinity):
            return self.sign > other.sign
        return self.sign > 0

    def __le__(self, other) -> bool:
        return self == other or self < other

    def __ge__(self, other) -> bool:
        return self == other or self > other

    def __neg__(self) -> "Infinity":
        return Infinity(-self.sign)

    def __add__(self, other) -> "Infinity":
        if isinstance(other, Infinity) and other.sign != self.sign:
            raise ArithmeticError("inf - inf is undefined")
        return self

    __radd__ = __add__

    def __sub__(self, other) -> "Infinity":
        return self + (-other)

    def __rsub__(self, other) -> "Infinity":
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Infinity):
            return Infinity(self.sign * other.sign)
        if other == 0:
            raise ArithmeticError("0 * inf is undefined")
        return Infinity(self.sign if other > 0 else -self.sign)

    __rmul__ = __mul__


INF = Infinity(1)
NEG_INF = Infinity(-1)

ExtReal = Union[Fraction, Infinity]


def as_rational(value) -> Fraction:
    """Convert ints, Fractions and exact strings ("p/q", "1.25") to Fraction.

    Floats are rejected: they would smuggle rounding into exact code.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, _, den = text.partition("/")
            try:
                n, d = int(num), int(den)
            except ValueError:
                raise ValueError(f"malformed rational {value!r}") from None
            if d == 0:
                raise ZeroDivisionError(f"zero denominator in {value!r}")
            return Fraction(n, d)
        try:
            return Fraction(text)
        except ValueError:
            raise ValueError(f"malformed rational {value!r}") from None
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def is_finite(value) -> bool:
    return not isinstance(value, Infinity)


def format_ext(value) -> str:
    """Render an extended real as ``"p/q"``, ``"n"``, ``"inf"`` or ``"-inf"``."""
    if isinstance(value, Infinity):
        return str(value)
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_ext(value) -> ExtReal:
    if isinstance(value, Infinity):
        return value
    if isinstance(value, str) and value.strip() in ("inf", "+inf", "-inf"):
        return NEG_INF if value.strip() == "-inf" else INF
    return as_rational(value)


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """A nonempty interval of the real line with optional infinite endpoints."""

    lo: ExtReal
    hi: ExtReal
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if is_finite(self.lo):
            object.__setattr__(self, "lo", Fraction(self.lo))
        if is_finite(self.hi):
            object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval: lo {self.lo} > hi {self.hi}")
        if (not is_finite(self.lo) and self.lo_closed) or (
            not is_finite(self.hi) and self.hi_closed
        ):
            raise ValueError("infinite endpoints must be open")
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise ValueError("a degenerate interval must be a closed point")

    @classmethod
    def open(cls, lo, hi) -> "Interval":
        return cls(lo, hi, False, False)

    @classmethod
    def closed(cls, lo, hi) -> "Interval":
        return cls(lo, hi, True, True)

    @classmethod
    def point(cls, x) -> "Interval":
        return cls(x, x, True, True)

    @property
    def bounded(self) -> bool:
        return is_finite(self.lo) and is_finite(self.hi)

    def __contains__(self, x) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    def representative(self) -> Fraction:
        """A fixed interior point: 0 if contained, else the midpoint, else one
        unit inside the finite end of a half-line."""
        if 0 in self:
            return Fraction(0)
        if self.bounded:
            return (self.lo + self.hi) / 2
        if is_finite(self.hi):
            return self.hi - 1
        return self.lo + 1

    def __str__(self) -> str:
        if self.lo == self.hi:
            return "{" + format_ext(self.lo) + "}"
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{format_ext(self.lo)},{format_ext(self.hi)}{right}"


def _touch_or_overlap(a: Interval, b: Interval) -> bool:
    """True if a and b (a.lo <= b.lo) can be merged into one interval."""
    if b.lo < a.hi:
        return True
    if b.lo == a.hi:
        return a.hi_closed or b.lo_closed
    return False


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of pairwise disjoint, non-adjacent intervals, sorted."""

    parts: tuple[Interval, ...] = ()

    @classmethod
    def of(cls, intervals: Iterable[Interval]) -> "IntervalSet":
        items = sorted(intervals, key=lambda iv: (iv.lo, not iv.lo_closed))
        merged: list[Interval] = []
        for iv in items:
            if merged and _touch_or_overlap(merged[-1], iv):
                last = merged[-1]
                if iv.hi > last.hi:
                    hi, hi_closed = iv.hi, iv.hi_closed
                elif iv.hi == last.hi:
                    hi, hi_closed = last.hi, last.hi_closed or iv.hi_closed
                else:
                    hi, hi_closed = last.hi, last.hi_closed
                lo_closed = last.lo_closed or (iv.lo == last.lo and iv.lo_closed)
                merged[-1] = Interval(last.lo, hi, lo_closed, hi_closed)
            else:
                merged.append(iv)
        return cls(tuple(merged))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def real_line(cls) -> "IntervalSet":
        return cls((Interval(NEG_INF, INF),))

    def is_empty(self) -> bool:
        return not self.parts

    def __bool__(self) -> bool:
        return bool(self.parts)

    def __contains__(self, x) -> bool:
        return any(x in iv for iv in self.parts)

    def __iter__(self):
        return iter(self.parts)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.of(self.parts + other.parts)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a in self.parts:
            for b in other.parts:
                if a.lo > b.lo or (a.lo == b.lo and not a.lo_closed):
                    lo, lo_closed = a.lo, a.lo_closed
                else:
                    lo, lo_closed = b.lo, b.lo_closed
                if a.hi < b.hi or (a.hi == b.hi and not a.hi_closed):
                    hi, hi_closed = a.hi, a.hi_closed
                else:
                    hi, hi_closed = b.hi, b.hi_closed
                if lo < hi or (lo == hi and lo_closed and hi_closed):
                    out.append(Interval(lo, hi, lo_closed, hi_closed))
        return IntervalSet.of(out)

    def witness(self) -> Fraction | None:
        """Reproducible point of the set: the interval representative with the
        smallest absolute value, ties broken towards the smaller point."""
        if not self.parts:
            return None
        return canonical_witness(iv.representative() for iv in self.parts)

    def __str__(self) -> str:
        if not self.parts:
            return "{}"
        return " U ".join(str(iv) for iv in self.parts)


def canonical_witness(points: Iterable[Fraction]) -> Fraction | None:
    best = None
    for p in points:
        if best is None or (abs(p), p) < (abs(best), best):
            best = p
    return best


# ---------------------------------------------------------------------------
# Piecewise-linear functions
# ---------------------------------------------------------------------------


class EmptyEnvelopeError(ValueError):
    """Raised when the upper envelope of no functions is requested."""


@dataclass(frozen=True)
class PLFunction:
    """Continuous piecewise-linear function on the real line.

    ``anchor_value`` is the value at the first breakpoint, or at 0 when there
    are no breakpoints.  ``slopes`` holds the left tail, the inner segments and
    the right tail, so ``len(slopes) == len(breakpoints) + 1``.
    """

    breakpoints: tuple[Fraction, ...]
    anchor_value: Fraction
    slopes: tuple[Fraction, ...]

    def __post_init__(self):
        bps = tuple(Fraction(b) for b in self.breakpoints)
        slopes = tuple(Fraction(s) for s in self.slopes)
        if len(slopes) != len(bps) + 1:
            raise ValueError("need exactly one more slope than breakpoints")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        anchor = Fraction(self.anchor_value)
        # canonicalise: drop breakpoints where the slope does not change
        if any(s == t for s, t in zip(slopes, slopes[1:])):
            values = _values_at(bps, anchor, slopes)
            keep = [i for i in range(len(bps)) if slopes[i] != slopes[i + 1]]
            new_slopes = [slopes[0]] + [slopes[i + 1] for i in keep]
            new_bps = [bps[i] for i in keep]
            if new_bps:
                anchor = values[keep[0]]
            elif bps:
                # affine: re-anchor at 0
                anchor = values[0] - slopes[0] * bps[0]
            bps, slopes = tuple(new_bps), tuple(new_slopes)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "anchor_value", anchor)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c) -> "PLFunction":
        return cls((), Fraction(c), (Fraction(0),))

    @classmethod
    def affine(cls, slope, intercept) -> "PLFunction":
        return cls((), Fraction(intercept), (Fraction(slope),))

    @classmethod
    def from_knots(
        cls,
        xs: Sequence[Fraction],
        ys: Sequence[Fraction],
        left_slope: Fraction,
        right_slope: Fraction,
    ) -> "PLFunction":
        """Interpolate values ``ys`` at increasing knots ``xs`` with the given
        tail slopes.  Knots may be redundant; the result is canonical."""
        if not xs:
            if left_slope != right_slope:
                raise ValueError("a function without knots has a single slope")
            return cls.affine(left_slope, 0)
        inner = [(ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)]
        return cls(tuple(xs), ys[0], (left_slope, *inner, right_slope))

    # -- accessors --------------------------------------------------------

    @property
    def left_slope(self) -> Fraction:
        return self.slopes[0]

    @property
    def right_slope(self) -> Fraction:
        return self.slopes[-1]

    def values(self) -> tuple[Fraction, ...]:
        """Values at the breakpoints."""
        return _values_at(self.breakpoints, self.anchor_value, self.slopes)

    def __call__(self, x) -> Fraction:
        return pl_eval(self, x)

    def knots(self) -> tuple[Fraction, ...]:
        """Breakpoints, or ``(0,)`` for an affine function."""
        return self.breakpoints or (Fraction(0),)

    def shift(self, t) -> "PLFunction":
        """The function ``x -> self(x + t)``."""
        t = Fraction(t)
        if not self.breakpoints:
            return PLFunction.affine(self.slopes[0], self(t))
        return PLFunction(tuple(b - t for b in self.breakpoints), self.anchor_value, self.slopes)

    def __neg__(self) -> "PLFunction":
        return pl_combine([(-1, self)])

    def __add__(self, other: "PLFunction") -> "PLFunction":
        return pl_combine([(1, self), (1, other)])

    def __sub__(self, other: "PLFunction") -> "PLFunction":
        return pl_combine([(1, self), (-1, other)])


def _values_at(bps, anchor, slopes) -> tuple[Fraction, ...]:
    if not bps:
        return ()
    vals = [anchor]
    for i in range(1, len(bps)):
        vals.append(vals[-1] + slopes[i] * (bps[i] - bps[i - 1]))
    return tuple(vals)


def pl_eval(f: PLFunction, x) -> Fraction:
    x = Fraction(x)
    bps = f.breakpoints
    if not bps:
        return f.anchor_value + f.slopes[0] * x
    vals = f.values()
    i = bisect.bisect_right(bps, x)
    if i == 0:
        return vals[0] + f.slopes[0] * (x - bps[0])
    return vals[i - 1] + f.slopes[i] * (x - bps[i - 1])


def pl_combine(terms: Iterable[tuple], offset=0) -> PLFunction:
    """Exact ``sum(c * f for c, f in terms) + offset``."""
    terms = [(Fraction(c), f) for c, f in terms]
    offset = Fraction(offset)
    knots = sorted({b for _, f in terms for b in f.breakpoints})
    left = sum((c * f.left_slope for c, f in terms), Fraction(0))
    right = sum((c * f.right_slope for c, f in terms), Fraction(0))
    if not knots:
        intercept = offset + sum((c * f.anchor_value for c, f in terms), Fraction(0))
        return PLFunction.affine(left, intercept)
    ys = [offset + sum((c * f(x) for c, f in terms), Fraction(0)) for x in knots]
    return PLFunction.from_knots(knots, ys, left, right)


def _line_crossings(fs, x0, lo, hi, slope_index) -> set[Fraction]:
    """Crossing points of the lines ``f(x0) + s_f (x - x0)`` strictly inside
    (lo, hi); ``slope_index`` picks which segment slope of each f applies."""
    lines = {(f(x0), slope_index(f)) for f in fs}
    lines = sorted(lines)
    out = set()
    for i, (v1, s1) in enumerate(lines):
        for v2, s2 in lines[i + 1:]:
            if s1 == s2:
                continue
            x = x0 - (v1 - v2) / (s1 - s2)
            if lo < x < hi:
                out.add(x)
    return out


def _segment_slope(f: PLFunction, a: Fraction, b: Fraction) -> Fraction:
    # slope of f on the open segment (a, b), which contains no breakpoint of f
    return f.slopes[bisect.bisect_right(f.breakpoints, a)]


def pl_upper_envelope(fs: Iterable[PLFunction]) -> PLFunction:
    """Pointwise maximum of finitely many PL functions."""
    fs = list(dict.fromkeys(fs))
    if not fs:
        raise EmptyEnvelopeError("upper envelope of an empty collection")
    if len(fs) == 1:
        return fs[0]
    base = sorted({b for f in fs for b in f.breakpoints})
    if not base:
        base = [Fraction(0)]
        extra = _line_crossings(fs, base[0], NEG_INF, INF, lambda f: f.slopes[0])
    else:
        extra = set()
        extra |= _line_crossings(fs, base[0], NEG_INF, base[0], lambda f: f.left_slope)
        extra |= _line_crossings(fs, base[-1], base[-1], INF, lambda f: f.right_slope)
        for a, b in zip(base, base[1:]):
            extra |= _line_crossings(fs, a, a, b, lambda f, a=a, b=b: _segment_slope(f, a, b))
    knots = sorted(set(base) | extra)
    ys = [max(f(x) for f in fs) for x in knots]
    first, last = knots[0], knots[-1]
    # beyond the outermost knot no two lines cross, so the tail belongs to the
    # function that is maximal there, preferring the steeper-outward one on ties
    left = min((-f(first), f.left_slope) for f in fs)[1]
    right = max((f(last), f.right_slope) for f in fs)[1]
    return PLFunction.from_knots(knots, ys, left, right)


def pl_dominates(f: PLFunction, g: PLFunction) -> bool:
    """True iff ``f(x) >= g(x)`` for every real x."""
    d = f - g
    if d.left_slope > 0 or d.right_slope < 0:
        return False
    if not d.breakpoints:
        return d.anchor_value >= 0
    return min(d.values()) >= 0


def _roots_and_knots(d: PLFunction) -> list[Fraction]:
    knots = list(d.knots())
    vals = [d(x) for x in knots]
    pts = set(knots)
    for (a, va), (b, vb) in zip(zip(knots, vals), zip(knots[1:], vals[1:])):
        if (va < 0 < vb) or (vb < 0 < va):
            pts.add(a + (b - a) * va / (va - vb))
    k0, k1 = knots[0], knots[-1]
    if d.left_slope != 0:
        r = k0 - vals[0] / d.left_slope
        if r < k0:
            pts.add(r)
    if d.right_slope != 0:
        r = k1 - vals[-1] / d.right_slope
        if r > k1:
            pts.add(r)
    return sorted(pts)


def pl_strict_above_region(f: PLFunction, g: PLFunction) -> IntervalSet:
    """Exact ``{x : f(x) > g(x)}`` as a canonical interval set."""
    d = f - g
    crit = _roots_and_knots(d)
    parts = []
    # open gaps between consecutive critical points have constant sign
    bounds = [NEG_INF, *crit, INF]
    for a, b in zip(bounds, bounds[1:]):
        if not is_finite(a):
            probe = b - 1
        elif not is_finite(b):
            probe = a + 1
        else:
            probe = (a + b) / 2
        if d(probe) > 0:
            parts.append(Interval(a, b))
    for c in crit:
        if d(c) > 0:
            parts.append(Interval.point(c))
    return IntervalSet.of(parts)


def pl_supremum(f: PLFunction) -> tuple[ExtReal, Fraction | None]:
    """Supremum over the real line and a maximising breakpoint when finite."""
    if f.left_slope < 0 or f.right_slope > 0:
        return INF, None
    if not f.breakpoints:
        return f.anchor_value, Fraction(0)
    vals = f.values()
    top = max(vals)
    where = canonical_witness(b for b, v in zip(f.breakpoints, vals) if v == top)
    return top, where


def pl_infimum(f: PLFunction) -> tuple[ExtReal, Fraction | None]:
    value, where = pl_supremum(-f)
    return -value, where


def pl_sup_on(f: PLFunction, region: IntervalSet) -> tuple[ExtReal, Fraction | None]:
    """Supremum of f over a region; the witness is None when the supremum is
    only approached (open endpoint or infinite)."""
    if region.is_empty():
        return NEG_INF, None
    best: ExtReal = NEG_INF
    where = None
    attained = False
    for iv in region:
        if not is_finite(iv.lo) and f.left_slope < 0:
            return INF, None
        if not is_finite(iv.hi) and f.right_slope > 0:
            return INF, None
        cands = [(b, True) for b in f.breakpoints if b in iv]
        if is_finite(iv.lo):
            cands.append((iv.lo, iv.lo_closed))
        if is_finite(iv.hi):
            cands.append((iv.hi, iv.hi_closed))
        # an interior point covers flat stretches reaching an open end
        cands.append((iv.representative(), True))
        for x, closed in cands:
            v = f(x)
            if v > best or (v == best and closed and not attained):
                best, where, attained = v, (x if closed else None), closed
            elif v == best and closed and attained and (abs(x), x) < (abs(where), where):
                where = x
    return best, where


def identity_memo(maxsize: int):
    """LRU memo keyed on the identity of the positional arguments.

    Meant for pure functions of immutable objects that are called again and
    again with the very same operands.  Entries hold references to their
    arguments, so an id cannot be reused while its entry is alive.
    """

    def wrap(fn):
        cache: OrderedDict = OrderedDict()

        @functools.wraps(fn)
        def inner(*args):
            key = tuple(map(id, args))
            hit = cache.get(key)
            if hit is not None:
                cache.move_to_end(key)
                return hit[1]
            out = fn(*args)
            cache[key] = (args, out)
            if len(cache) > maxsize:
                cache.popitem(last=False)
            return out

        inner.cache_clear = cache.clear
        return inner

    return wrap
