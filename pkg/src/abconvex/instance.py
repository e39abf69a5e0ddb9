"""JSON instance files.

An instance names a domain, families, functions, subsets of families and
point sets, plus scenario parameters and a list of checks.  Everything is
resolved and lowered at load time, so a loaded instance holds only exact
backend objects.

Schema (all rationals are integers or ``"p/q"`` strings)::

    {
      "name": "fig1",
      "backend": "real_line" | "finite_points",
      "points": [...] | "grid": {"lo": .., "hi": .., "step": ..},
      "domains": {"Y": {"points": [...]}},
      "families": {"H": ["2 - abs(x)", ...] | {"domain": "Y", "members": [...]}},
      "functions": {"f": "abs(x)"
                         | {"expr": "...", "domain": "Y"}
                         | {"table": ["1", "inf", ...]}
                         | {"envelope": "H", "members": [0, 2] | "select": ["x", ...]}},
      "subsets": {"A": {"family": "H", "members": [...] | "select": [...]}},
      "point_sets": {"C": [...points]},
      "params": {"x": "1", "lambda": "1/2", "c_samples": ["0", "1"]},
      "checks": [{"rule": "...", ...}]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import expr as ex
from .families import (
    FINITE_POINTS,
    REAL_LINE,
    DomainError,
    DomainSpec,
    Function,
    FunctionFamily,
    envelope,
    lower,
)
from .hulls import PointSet, SupportSet
from .numerics import as_rational, parse_ext

__all__ = ["InstanceError", "InstanceFile", "load_instance", "parse_instance", "parse_rational"]


class InstanceError(ValueError):
    """A malformed or unresolvable instance; the message names the location."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where
        self.message = message


@dataclass(frozen=True)
class InstanceFile:
    name: str
    backend: str
    domain: DomainSpec
    domains: dict[str, DomainSpec] = field(default_factory=dict)
    families: dict[str, FunctionFamily] = field(default_factory=dict)
    functions: dict[str, Function] = field(default_factory=dict)
    subsets: dict[str, SupportSet] = field(default_factory=dict)
    point_sets: dict[str, PointSet] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)
    checks: tuple = ()
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def family(self, name: str, where: str = "check") -> FunctionFamily:
        return _lookup(self.families, name, where, "family")

    def function(self, name: str, where: str = "check") -> Function:
        return _lookup(self.functions, name, where, "function")

    def subset(self, name: str, where: str = "check") -> SupportSet:
        return _lookup(self.subsets, name, where, "subset")

    def point_set(self, name: str, where: str = "check") -> PointSet:
        return _lookup(self.point_sets, name, where, "point set")

    def domain_named(self, name: str | None, where: str = "check") -> DomainSpec:
        if name is None:
            return self.domain
        return _lookup(self.domains, name, where, "domain")


def _lookup(table: dict, name, where: str, kind: str):
    if not isinstance(name, str) or name not in table:
        raise InstanceError(where, f"unresolved {kind} reference {name!r}")
    return table[name]


def parse_rational(value, where: str):
    """Exact rational from an int or string; floats and ``p/0`` are errors."""
    try:
        return as_rational(value)
    except ZeroDivisionError:
        raise InstanceError(where, f"malformed rational {value!r} (zero denominator)") from None
    except (TypeError, ValueError) as exc:
        raise InstanceError(where, f"malformed rational {value!r}: {exc}") from None


def _parse_params(value, where: str):
    if isinstance(value, list):
        return [_parse_params(v, f"{where}[{i}]") for i, v in enumerate(value)]
    if isinstance(value, dict):
        return {k: _parse_params(v, f"{where}.{k}") for k, v in value.items()}
    return parse_rational(value, where)


def _parse_domain(spec: dict, where: str, default_backend: str | None = None) -> DomainSpec:
    backend = spec.get("backend", default_backend or FINITE_POINTS)
    if backend == REAL_LINE:
        return DomainSpec.real_line()
    if backend != FINITE_POINTS:
        raise InstanceError(where, f"unknown backend {backend!r}")
    if "grid" in spec:
        g = spec["grid"]
        try:
            return DomainSpec.grid(
                parse_rational(g["lo"], f"{where}.grid.lo"),
                parse_rational(g["hi"], f"{where}.grid.hi"),
                parse_rational(g.get("step", 1), f"{where}.grid.step"),
            )
        except KeyError as exc:
            raise InstanceError(f"{where}.grid", f"missing key {exc}") from None
    if "points" not in spec:
        raise InstanceError(where, "a finite domain needs points or a grid")
    pts = []
    for i, p in enumerate(spec["points"]):
        loc = f"{where}.points[{i}]"
        if isinstance(p, list):
            pts.append(tuple(parse_rational(c, loc) for c in p))
        else:
            pts.append((parse_rational(p, loc),))
    if len(set(pts)) != len(pts):
        raise InstanceError(f"{where}.points", "duplicate points")
    dims = {len(p) for p in pts}
    if len(dims) > 1:
        raise InstanceError(f"{where}.points", "points have different dimensions")
    return DomainSpec.finite(pts)


def _lower_text(text, domain: DomainSpec, where: str) -> Function:
    if not isinstance(text, str):
        raise InstanceError(where, f"expected an expression string, got {text!r}")
    try:
        return lower(ex.parse_expr(text), domain, source=text.strip())
    except ex.ExprSyntaxError as exc:
        raise InstanceError(where, f"parse error at position {exc.pos}: {exc}") from None
    except (DomainError, ZeroDivisionError) as exc:
        raise InstanceError(where, str(exc)) from None


def _point(domain: DomainSpec, p, where: str):
    try:
        if isinstance(p, list):
            p = [parse_rational(c, where) for c in p]
        else:
            p = parse_rational(p, where)
        return domain.point(p)
    except DomainError as exc:
        raise InstanceError(where, str(exc)) from None


def _select(family: FunctionFamily, spec: dict, where: str) -> frozenset[int]:
    if "members" in spec:
        idx = spec["members"]
        if not all(isinstance(i, int) and 0 <= i < len(family) for i in idx):
            raise InstanceError(f"{where}.members", "member index out of range")
        return frozenset(idx)
    if "select" in spec:
        out = set()
        for i, t in enumerate(spec["select"]):
            f = _lower_text(t, family.domain, f"{where}.select[{i}]")
            k = family.index_of(f)
            if k is None:
                raise InstanceError(f"{where}.select[{i}]", f"{t!r} is not a member of the family")
            out.add(k)
        return frozenset(out)
    return frozenset(range(len(family)))


def parse_instance(data: dict, name: str = "instance") -> InstanceFile:
    if not isinstance(data, dict):
        raise InstanceError("<root>", "an instance is a JSON object")
    name = data.get("name", name)
    backend = data.get("backend", FINITE_POINTS)
    domain = _parse_domain(data, "<root>", backend)

    domains = {}
    for dname, spec in data.get("domains", {}).items():
        domains[dname] = _parse_domain(spec, f"domains.{dname}")

    def dom_of(spec, where):
        if isinstance(spec, dict) and "domain" in spec:
            return _lookup(domains, spec["domain"], where, "domain")
        return domain

    families = {}
    for fname, spec in data.get("families", {}).items():
        where = f"families.{fname}"
        dom = dom_of(spec, where)
        texts = spec["members"] if isinstance(spec, dict) else spec
        if not isinstance(texts, list):
            raise InstanceError(where, "a family is a list of expressions")
        members = [_lower_text(t, dom, f"{where}[{i}]") for i, t in enumerate(texts)]
        bad = [m.label() for m in members if not m.is_elementary]
        if bad:
            raise InstanceError(where, f"members must be finite everywhere: {bad}")
        families[fname] = FunctionFamily.build(dom, members)

    functions = {}
    for fname, spec in data.get("functions", {}).items():
        where = f"functions.{fname}"
        if isinstance(spec, str):
            functions[fname] = _lower_text(spec, domain, where)
            continue
        if not isinstance(spec, dict):
            raise InstanceError(where, "a function is an expression or an object")
        dom = dom_of(spec, where)
        if "expr" in spec:
            functions[fname] = _lower_text(spec["expr"], dom, f"{where}.expr")
        elif "table" in spec:
            if dom.kind == REAL_LINE:
                raise InstanceError(where, "tables need a finite domain")
            try:
                vals = tuple(parse_ext(v) for v in spec["table"])
            except ZeroDivisionError:
                raise InstanceError(f"{where}.table", "malformed rational (zero denominator)") from None
            except (TypeError, ValueError) as exc:
                raise InstanceError(f"{where}.table", f"malformed value: {exc}") from None
            try:
                functions[fname] = Function(dom, vals, spec.get("label", fname))
            except DomainError as exc:
                raise InstanceError(where, str(exc)) from None
        elif "envelope" in spec:
            fam = _lookup(families, spec["envelope"], f"{where}.envelope", "family")
            idx = _select(fam, spec, where)
            functions[fname] = envelope([fam[i] for i in sorted(idx)], fam.domain, spec.get("label", ""))
        else:
            raise InstanceError(where, "expected one of expr, table, envelope")

    subsets = {}
    for sname, spec in data.get("subsets", {}).items():
        where = f"subsets.{sname}"
        if not isinstance(spec, dict):
            raise InstanceError(where, "a subset is an object with a family")
        fam = _lookup(families, spec.get("family"), f"{where}.family", "family")
        subsets[sname] = SupportSet(fam, _select(fam, spec, where))

    point_sets = {}
    for pname, spec in data.get("point_sets", {}).items():
        where = f"point_sets.{pname}"
        dom = dom_of(spec, where)
        pts = spec["points"] if isinstance(spec, dict) else spec
        if dom.kind == REAL_LINE:
            raise InstanceError(where, "point sets are supported on finite domains")
        point_sets[pname] = PointSet.of_points(dom, [_point(dom, p, f"{where}[{i}]") for i, p in enumerate(pts)])

    params = {k: _parse_params(v, f"params.{k}") for k, v in data.get("params", {}).items()}
    checks = data.get("checks", [])
    if not isinstance(checks, list) or not all(isinstance(c, dict) and "rule" in c for c in checks):
        raise InstanceError("checks", "checks are objects with a rule name")
    names = [*families, *functions, *subsets, *point_sets, *domains]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise InstanceError("<root>", f"names are not unique: {sorted(dup)}")
    return InstanceFile(
        name, domain.kind, domain, domains, families, functions, subsets, point_sets, params, tuple(checks), data
    )


def load_instance(path) -> InstanceFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceError(str(path), f"cannot read: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}") from None
    return parse_instance(data, path.stem)
