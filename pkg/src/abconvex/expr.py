"""Expression mini-language for elementary functions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)?
    factor := rational | var | 'abs' '(' expr ')'
            | 'max' '(' expr ',' expr ')' | 'min' '(' expr ',' expr ')'
            | '-' factor | '(' expr ')'
    rational := integer ('/' positive-integer)?
    var    := 'x' | 'x' index

``x`` and ``x1`` both denote the first coordinate.  A product needs one
variable-free side, so every expression stays piecewise linear.  The parser
folds constants (``-3/2`` is a literal, ``2*3`` is ``6``) which keeps
``parse(to_text(e)) == e`` for every tree it produces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

__all__ = [
    "Lit",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Scale",
    "Abs",
    "Max",
    "Min",
    "FunctionExpr",
    "ExprSyntaxError",
    "parse_expr",
    "to_text",
    "evaluate",
    "variables",
    "fold",
]


@dataclass(frozen=True)
class Lit:
    value: Fraction


@dataclass(frozen=True)
class Var:
    index: int  # 1-based coordinate


@dataclass(frozen=True)
class Neg:
    arg: "FunctionExpr"


@dataclass(frozen=True)
class Add:
    left: "FunctionExpr"
    right: "FunctionExpr"


@dataclass(frozen=True)
class Sub:
    left: "FunctionExpr"
    right: "FunctionExpr"


@dataclass(frozen=True)
class Scale:
    coef: Fraction
    arg: "FunctionExpr"


@dataclass(frozen=True)
class Abs:
    arg: "FunctionExpr"


@dataclass(frozen=True)
class Max:
    left: "FunctionExpr"
    right: "FunctionExpr"


@dataclass(frozen=True)
class Min:
    left: "FunctionExpr"
    right: "FunctionExpr"


FunctionExpr = Union[Lit, Var, Neg, Add, Sub, Scale, Abs, Max, Min]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos} in {text!r}")
        self.text = text
        self.pos = pos


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\s*/\s*\d+)?)|(?P<name>abs|max|min|x\d*)|(?P<op>[-+*(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, value: str | None = None) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            what = tok[1] or "end of input"
            raise ExprSyntaxError(f"expected {value!r}, found {what!r}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self) -> FunctionExpr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", self.text, pos)
        return e

    def expr(self) -> FunctionExpr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> FunctionExpr:
        pos = self.peek()[2]
        a = self.factor()
        if self.peek()[1] != "*":
            return a
        self.take("*")
        b = self.factor()
        if isinstance(a, Lit) and isinstance(b, Lit):
            return Lit(a.value * b.value)
        if isinstance(a, Lit):
            return Scale(a.value, b)
        if isinstance(b, Lit):
            return Scale(b.value, a)
        raise ExprSyntaxError("product needs a constant factor", self.text, pos)

    def factor(self) -> FunctionExpr:
        kind, val, pos = self.take()
        if kind == "num":
            num, _, den = val.partition("/")
            if den and int(den) == 0:
                raise ExprSyntaxError("division by zero in literal", self.text, pos)
            return Lit(Fraction(int(num), int(den) if den else 1))
        if kind == "name":
            if val.startswith("x"):
                index = int(val[1:]) if len(val) > 1 else 1
                if index < 1:
                    raise ExprSyntaxError("variable indices start at 1", self.text, pos)
                return Var(index)
            self.take("(")
            a = self.expr()
            if val == "abs":
                self.take(")")
                return Abs(a)
            self.take(",")
            b = self.expr()
            self.take(")")
            return Max(a, b) if val == "max" else Min(a, b)
        if val == "-":
            arg = self.factor()
            if isinstance(arg, Lit):
                return Lit(-arg.value)
            return Neg(arg)
        if val == "(":
            e = self.expr()
            self.take(")")
            return e
        what = val or "end of input"
        raise ExprSyntaxError(f"unexpected {what!r}", self.text, pos)


def parse_expr(text: str) -> FunctionExpr:
    """Parse an expression; rationals are read exactly."""
    return _Parser(text).parse()


def _lit_text(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def to_text(e: FunctionExpr) -> str:
    """Print an expression so that parsing gives back an equal tree."""
    if isinstance(e, Lit):
        return _lit_text(e.value)
    if isinstance(e, Var):
        return "x" if e.index == 1 else f"x{e.index}"
    if isinstance(e, Neg):
        return f"-({to_text(e.arg)})"
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        right = to_text(e.right)
        if isinstance(e.right, (Add, Sub)):
            right = f"({right})"
        return f"{to_text(e.left)} {op} {right}"
    if isinstance(e, Scale):
        return f"{_lit_text(e.coef)}*({to_text(e.arg)})"
    if isinstance(e, Abs):
        return f"abs({to_text(e.arg)})"
    if isinstance(e, Max):
        return f"max({to_text(e.left)}, {to_text(e.right)})"
    if isinstance(e, Min):
        return f"min({to_text(e.left)}, {to_text(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def variables(e: FunctionExpr) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Lit):
        return set()
    out: set[int] = set()
    for child in vars(e).values():
        if isinstance(child, (Lit, Var, Neg, Add, Sub, Scale, Abs, Max, Min)):
            out |= variables(child)
    return out


def fold(e: FunctionExpr, ops: dict[str, Callable]):
    """Evaluate ``e`` bottom-up with caller-supplied operations.

    ``ops`` maps ``lit``, ``var``, ``neg``, ``add``, ``sub``, ``scale``, ``abs``,
    ``max`` and ``min`` to callables; this is how both backends lower trees.
    """
    if isinstance(e, Lit):
        return ops["lit"](e.value)
    if isinstance(e, Var):
        return ops["var"](e.index)
    if isinstance(e, Neg):
        return ops["neg"](fold(e.arg, ops))
    if isinstance(e, Add):
        return ops["add"](fold(e.left, ops), fold(e.right, ops))
    if isinstance(e, Sub):
        return ops["sub"](fold(e.left, ops), fold(e.right, ops))
    if isinstance(e, Scale):
        return ops["scale"](e.coef, fold(e.arg, ops))
    if isinstance(e, Abs):
        return ops["abs"](fold(e.arg, ops))
    if isinstance(e, Max):
        return ops["max"](fold(e.left, ops), fold(e.right, ops))
    if isinstance(e, Min):
        return ops["min"](fold(e.left, ops), fold(e.right, ops))
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: FunctionExpr, point) -> Fraction:
    """Direct evaluation at a point (a scalar or a coordinate tuple)."""
    coords = point if isinstance(point, tuple) else (point,)

    def var(i):
        if i > len(coords):
            raise ValueError(f"x{i} used on a {len(coords)}-dimensional point")
        return Fraction(coords[i - 1])

    return fold(
        e,
        {
            "lit": lambda q: q,
            "var": var,
            "neg": lambda a: -a,
            "add": lambda a, b: a + b,
            "sub": lambda a, b: a - b,
            "scale": lambda c, a: c * a,
            "abs": abs,
            "max": max,
            "min": min,
        },
    )
