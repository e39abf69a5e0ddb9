"""Sampled function values for plotting, as CSV."""

from __future__ import annotations

import csv
import io
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence

from .families import REAL_LINE, DomainSpec, Function, function_from_text
from .instance import InstanceError, InstanceFile
from .numerics import Infinity

__all__ = ["emit_plot_data", "format_value", "resolve_columns", "sample_points"]


def format_value(v) -> str:
    """Decimal text when the rational has a terminating expansion, else ``p/q``."""
    if isinstance(v, Infinity):
        return "inf" if v.sign > 0 else "-inf"
    q = Fraction(v)
    d = q.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    with localcontext() as ctx:
        ctx.prec = len(str(q.numerator)) + 2 * q.denominator.bit_length() + 4
        text = format(Decimal(q.numerator) / Decimal(q.denominator), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def sample_points(lo: Fraction, hi: Fraction, step: Fraction) -> list[Fraction]:
    lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
    if step <= 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError("empty range")
    return [lo + k * step for k in range(int((hi - lo) // step) + 1)]


def resolve_columns(inst: InstanceFile, names: Sequence[str]) -> list[tuple[str, Function]]:
    """Each name is a function, a family (all its members), or an expression."""
    line = DomainSpec.real_line()
    out = []
    for name in names:
        if name in inst.functions:
            out.append((name, inst.functions[name]))
        elif name in inst.families:
            out.extend((m.label(), m) for m in inst.families[name].members)
        else:
            try:
                out.append((name, function_from_text(name, line)))
            except ValueError as exc:
                raise InstanceError("--functions", f"{name!r} is neither a name nor an expression: {exc}") from None
    for label, f in out:
        if f.domain.kind != REAL_LINE:
            raise InstanceError("--functions", f"{label!r} is not on the real line")
    return out


def emit_plot_data(inst: InstanceFile, functions: Sequence[str], range_: tuple, step) -> str:
    """CSV with an ``x`` column and one column per function."""
    if inst.backend != REAL_LINE:
        raise InstanceError("<root>", "plot data needs the real_line backend")
    cols = resolve_columns(inst, functions)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", *(label for label, _ in cols)])
    if not cols:
        return buf.getvalue()
    for x in sample_points(range_[0], range_[1], step):
        w.writerow([format_value(x), *(format_value(f(x)) for _, f in cols)])
    return buf.getvalue()
