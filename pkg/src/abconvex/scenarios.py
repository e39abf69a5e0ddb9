"""Scenario catalog and the check dispatch table.

A scenario is an instance file whose ``checks`` list names rules from
``CHECKS``.  Arguments are names of objects declared in the instance, or
rationals (``"$name"`` refers to an entry of ``params``).  A check may carry
``expect``: a mapping of report fields (or ``details`` keys) to values
fixed beforehand (dotted paths reach into nested fields); any mismatch turns the entry into a failure whose
witness lists expected and actual values.
"""

from __future__ import annotations

import json
import time
from importlib import resources
from pathlib import Path
from typing import Callable

from .calculus import (
    composition_subdiff_verify,
    conjugate_sum_check,
    envelope_conjugate_check,
    epi_conjugate_check,
    max_rule_verify,
    moreau_verify,
    normal_subdiff_check,
    normal_sum_check,
    pinned_normal_hull_check,
    restriction_check,
    shift_rule_check,
    subdifferential,
    subdifferential_hull_check,
    sum_convexity_check,
    sum_rule_verify,
    support_sum_hull_check,
)
from .families import FunctionFamily, format_point
from .hulls import PointSet, SupportSet, hull_laws_check, is_hull_closed, separate_sets, separation_witness_check
from .instance import InstanceError, InstanceFile, load_instance, parse_instance, parse_rational
from .monotone import (
    OperatorGraph,
    assumption_check,
    bronsted_rockafellar_check,
    combine_operators,
    inverse_operator,
    is_maximal_within,
    is_monotone,
    subdifferential_operator,
    zero_subgradient_check,
)
from .numerics import INF
from .reports import EQUAL, FAIL, FAILS, HOLDS, NOT_CHECKED, VIOLATED, Report, RuleReport

__all__ = ["CATALOG", "CHECKS", "UnknownScenarioError", "run_instance", "run_scenario", "scenario_path"]

CATALOG = (
    "fig1-separation",
    "fig2-maxrule",
    "moreau",
    "epi-conjugate",
    "restriction",
    "shift-rules",
    "sum-rule",
    "composition",
    "normal-sum",
    "monotone-algebra",
    "maximality",
    "bronsted-rockafellar",
    "zero-subgradient",
)


class UnknownScenarioError(LookupError):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _num(inst: InstanceFile, value, where: str):
    if isinstance(value, str) and value.startswith("$"):
        key = value[1:]
        if key not in inst.params:
            raise InstanceError(where, f"unresolved parameter {value!r}")
        return inst.params[key]
    return parse_rational(value, where)


def _point(inst: InstanceFile, domain, value, where: str):
    if isinstance(value, str) and value.startswith("$"):
        value = inst.params.get(value[1:], value)
    if isinstance(value, list):
        value = [parse_rational(c, where) for c in value]
    elif not isinstance(value, tuple):
        value = parse_rational(value, where)
    return domain.point(value)


def _points(inst: InstanceFile, f_or_domain, spec, where: str) -> list:
    """``"all"`` means every point of dom f (finite backends only)."""
    dom = f_or_domain.domain if hasattr(f_or_domain, "domain") else f_or_domain
    if spec == "all" or spec is None:
        if not dom.is_finite:
            raise InstanceError(where, "'all' needs a finite domain; list the points")
        if hasattr(f_or_domain, "domain_indices"):
            return [dom.points[i] for i in f_or_domain.domain_indices()]
        return list(dom.points)
    if not isinstance(spec, list):
        spec = [spec]
    return [_point(inst, dom, p, where) for p in spec]


def _each_point(rule: str, reports: list[RuleReport], details: dict | None = None) -> RuleReport:
    """Fold per-point reports: the first failing one supplies the witness."""
    bad = [r for r in reports if r.status == FAIL]
    hyps = {r.hypothesis for r in reports}
    hyp = HOLDS if hyps <= {HOLDS} else (FAILS if hyps == {FAILS} else "mixed")
    out = {
        "points": len(reports),
        "failures": len(bad),
        "per_point": [{"hypothesis": r.hypothesis, "conclusion": r.conclusion, **_short(r.details)} for r in reports],
    }
    out.update(details or {})
    if bad:
        return RuleReport(rule, bad[0].hypothesis, VIOLATED, bad[0].witnesses, out, status=FAIL)
    concl = {r.conclusion for r in reports}
    conclusion = concl.pop() if len(concl) == 1 else "mixed"
    return RuleReport(rule, hyp, conclusion, [], out, status="pass")


def _short(details: dict) -> dict:
    keep = ("x", "point", "y")
    return {k: v for k, v in details.items() if k in keep}


# ---------------------------------------------------------------------------
# handlers
# ---------------------------------------------------------------------------


def _separation(inst: InstanceFile, c: dict) -> RuleReport:
    H = inst.family(c["family"])
    A, B = inst.subset(c["lower"]), inst.subset(c["upper"])
    convex = is_hull_closed(H, A) and is_hull_closed(H, B)
    disjoint = not (A.indices & B.indices)
    directions = {}
    witnesses = []
    for name, lo, up in (("lower-below-upper", A, B), ("upper-below-lower", B, A)):
        res = separate_sets(H, lo, up)
        directions[name] = {
            "point": None if res.point is None else format_point(res.point),
            "regions": [[label, ps.to_json()] for label, ps in res.regions],
            "common": res.common.to_json(),
        }
        if res.point is not None:
            witnesses.append({"kind": "separating-point", "direction": name, "point": format_point(res.point)})
    hyp = HOLDS if convex and disjoint else FAILS
    details = {"h_convex": convex, "disjoint": disjoint, "directions": directions}
    return RuleReport("separation", hyp, EQUAL if witnesses else VIOLATED, witnesses, details, status="pass")


def _max_rule(inst: InstanceFile, c: dict) -> RuleReport:
    G, L = inst.family(c["G"]), inst.family(c["family"])
    return max_rule_verify(G, L, _point(inst, L.domain, c["x"], "x"))


def _moreau(inst: InstanceFile, c: dict) -> RuleReport:
    f, L = inst.function(c["function"]), inst.family(c["family"])
    return _each_point("moreau", [moreau_verify(f, L, x) for x in _points(inst, f, c.get("points"), "points")])


def _epi(inst: InstanceFile, c: dict) -> RuleReport:
    f, L = inst.function(c["function"]), inst.family(c["family"])
    samples = [(k, _num(inst, v, "samples")) for k in range(len(L)) for v in c.get("c_samples", [])]
    return epi_conjugate_check(f, L, samples)


def _normal_subdiff(inst: InstanceFile, c: dict) -> RuleReport:
    f, L = inst.function(c["function"]), inst.family(c["family"])
    cs = [_num(inst, v, "c_samples") for v in c.get("c_samples", [1])]
    return _each_point(
        "normal-subdifferential", [normal_subdiff_check(f, L, x, cs) for x in _points(inst, f, c.get("points"), "points")]
    )


def _restriction(inst: InstanceFile, c: dict) -> RuleReport:
    f = inst.function(c["function"])
    L1, L2 = inst.family(c["small"]), inst.family(c["large"])
    return _each_point("restriction", [restriction_check(f, L1, L2, x) for x in _points(inst, f, c.get("points"), "points")])


def _shift(inst: InstanceFile, c: dict) -> RuleReport:
    f, L, u = inst.function(c["function"]), inst.family(c["family"]), inst.function(c["u"])
    y = _point(inst, f.domain, c["y"], "y")
    return _each_point("shift-rules", [shift_rule_check(f, L, u, y, x) for x in _points(inst, f, c.get("points"), "points")])


def _sum_rule(inst: InstanceFile, c: dict) -> RuleReport:
    f1, L1 = inst.function(c["f1"]), inst.family(c["L1"])
    f2, L2 = inst.function(c["f2"]), inst.family(c["L2"])
    spec = c.get("points")
    if spec in ("all", None) and f1.domain.is_finite:
        # dom (f1 + f2)
        both = sorted(set(f1.domain_indices()) & set(f2.domain_indices()))
        pts = [f1.domain.points[i] for i in both]
    else:
        pts = _points(inst, f1.domain, spec, "points")
    return _each_point("sum-rule", [sum_rule_verify(f1, L1, f2, L2, x) for x in pts])


def _conjugate_sum(inst: InstanceFile, c: dict) -> RuleReport:
    return conjugate_sum_check(
        inst.function(c["f1"]), inst.family(c["L1"]), inst.function(c["f2"]), inst.family(c["L2"])
    )


def _composition(inst: InstanceFile, c: dict) -> RuleReport:
    f, L = inst.function(c["function"]), inst.family(c["family"])
    Y = inst.domain_named(c["source"])
    u_map = [_point(inst, f.domain, p, "map") for p in c["map"]]
    spec = c.get("points")
    if spec in ("all", None):
        # dom (f o u)
        pts = [y for y, img in zip(Y.points, u_map) if f(img) != INF]
    else:
        pts = _points(inst, Y, spec, "points")
    return _each_point("composition", [composition_subdiff_verify(f, L, u_map, Y, x) for x in pts])


def _normal_sum(inst: InstanceFile, c: dict) -> RuleReport:
    C, D = inst.point_set(c["C"]), inst.point_set(c["D"])
    L1, L2 = inst.family(c["L1"]), inst.family(c["L2"])
    pts = _points(inst, C.domain, c.get("points"), "points")
    return _each_point("normal-sum", [normal_sum_check(C, L1, D, L2, x) for x in pts])


def _monotone_algebra(inst: InstanceFile, c: dict) -> RuleReport:
    """Subdifferential operators, their inverses and nonnegative combinations
    are all monotone."""
    ops: list[tuple[str, OperatorGraph]] = []
    for i, (fname, lname) in enumerate(c["operators"]):
        T = subdifferential_operator(inst.function(fname), inst.family(lname))
        ops.append((f"subdiff({fname},{lname})", T))
        ops.append((f"inverse(subdiff({fname},{lname}))", inverse_operator(T)))
    forward = [t for name, t in ops if not t.inverted]
    for lam in c.get("coefficients", [["1", "1"]]):
        l1, l2 = (_num(inst, v, "coefficients") for v in lam)
        for a in range(len(forward)):
            for b in range(a, len(forward)):
                ops.append((f"{l1}*T{a} + {l2}*T{b}", combine_operators(l1, forward[a], l2, forward[b])))
    checked, witnesses = [], []
    for name, T in ops:
        r = is_monotone(T)
        checked.append({"operator": name, "pairs": len(T), "conclusion": r.conclusion})
        witnesses += [dict(w, operator=name) for w in r.witnesses]
    return RuleReport("monotone-algebra", HOLDS, VIOLATED if witnesses else EQUAL, witnesses, {"operators": checked})


def _union(inst: InstanceFile, a: FunctionFamily, b: FunctionFamily) -> FunctionFamily:
    return FunctionFamily.build(a.domain, [*a.members, *b.members])


def _maximality(inst: InstanceFile, c: dict) -> RuleReport:
    """The assumption at every declared base point is the hypothesis; the
    conclusion is maximality of the subdifferential operator over L (and
    over L together with the sample) within the full grid."""
    f, L, Lin = inst.function(c["function"]), inst.family(c["family"]), inst.family(c["lin"])
    a_values = [_num(inst, v, "a") for v in c.get("a", ["1"])]
    base = _points(inst, f, c.get("base_points"), "base_points")
    held = {}
    for x in _points(inst, f, "all", "points"):
        held[format_point(x)] = assumption_check(f, L, Lin, x, a_values).hypothesis == HOLDS
    hyp = all(held[format_point(x)] for x in base)
    results = {}
    witnesses = []
    for label, fam in (("L", L), ("L+sample", _union(inst, L, Lin))):
        r = is_maximal_within(subdifferential_operator(f, fam))
        results[label] = {"conclusion": r.conclusion, "addable": r.details["addable"], "candidates": r.details["candidates"]}
        witnesses += [dict(w, family=label) for w in r.witnesses]
    details = {
        "candidate_set": "full-grid",
        "base_points": [format_point(x) for x in base],
        "assumption_by_point": held,
        "sample": [m.label() for m in Lin.members],
        "maximal": results,
    }
    return RuleReport("maximality", HOLDS if hyp else FAILS, VIOLATED if witnesses else EQUAL, witnesses, details)


def _br(inst: InstanceFile, c: dict) -> RuleReport:
    f, L, Lin = inst.function(c["function"]), inst.family(c["family"]), inst.family(c["lin"])
    y = _point(inst, f.domain, c["y"], "y")
    v = inst.function(c["v"])
    lam, mu = _num(inst, c["lambda"], "lambda"), _num(inst, c["mu"], "mu")
    a_values = [_num(inst, a, "a") for a in c.get("a", ["1"])]
    return bronsted_rockafellar_check(f, L, Lin, y, v, lam, mu, a_values)


def _zero_subgradient(inst: InstanceFile, c: dict) -> RuleReport:
    f, L, Lin = inst.function(c["function"]), inst.family(c["family"]), inst.family(c["lin"])
    a_values = [_num(inst, a, "a") for a in c.get("a", ["1"])]
    return zero_subgradient_check(f, L, Lin, a_values)


def _assumption(inst: InstanceFile, c: dict) -> RuleReport:
    f, L, Lin = inst.function(c["function"]), inst.family(c["family"]), inst.family(c["lin"])
    a_values = [_num(inst, a, "a") for a in c.get("a", ["1"])]
    return _each_point("assumption", [assumption_check(f, L, Lin, x, a_values) for x in _points(inst, f, c.get("points"), "points")])


def _subdifferential(inst: InstanceFile, c: dict) -> RuleReport:
    """Plain membership listing, for instances that only ask for values."""
    f, L = inst.function(c["function"]), inst.family(c["family"])
    rows = {}
    for x in _points(inst, f, c.get("points"), "points"):
        rows[format_point(x)] = subdifferential(f, L, x).labels()
    return RuleReport("subdifferential", NOT_CHECKED, EQUAL, [], {"subdifferential": rows})


def _index_set(inst: InstanceFile, fam: FunctionFamily, spec, where: str) -> SupportSet:
    """A subset given by name, or inline as a list of member indices."""
    if isinstance(spec, str):
        return inst.subset(spec, where)
    if not isinstance(spec, list) or not all(isinstance(i, int) and 0 <= i < len(fam) for i in spec):
        raise InstanceError(where, "expected a subset name or a list of member indices")
    return SupportSet(fam, frozenset(spec))


def _hull_laws(inst: InstanceFile, c: dict) -> RuleReport:
    H = inst.family(c["family"])
    sets = [_index_set(inst, H, s, "sets").indices for s in c.get("sets", [])]
    psets = []
    for ps in c.get("point_sets", []):
        psets.append(frozenset(H.domain.index(_point(inst, H.domain, p, "point_sets")) for p in ps))
    f = inst.function(c["function"]) if "function" in c else None
    cs = [_num(inst, v, "c_samples") for v in c.get("c_samples", [])]
    return hull_laws_check(H, sets, psets, f, cs)


def _separation_witness(inst: InstanceFile, c: dict) -> RuleReport:
    H = inst.family(c["family"])
    return separation_witness_check(H, _index_set(inst, H, c["lower"], "lower"), _index_set(inst, H, c["upper"], "upper"))


def _subdiff_hull(inst: InstanceFile, c: dict) -> RuleReport:
    f, L = inst.function(c["function"]), inst.family(c["family"])
    pts = _points(inst, f, c.get("points"), "points")
    return _each_point("subdifferential-hull", [subdifferential_hull_check(f, L, x) for x in pts])


def _sum_convexity(inst: InstanceFile, c: dict) -> RuleReport:
    args = (inst.function(c["f1"]), inst.family(c["L1"]), inst.function(c["f2"]), inst.family(c["L2"]))
    return sum_convexity_check(*args)


def _support_sum_hull(inst: InstanceFile, c: dict) -> RuleReport:
    args = (inst.function(c["f1"]), inst.family(c["L1"]), inst.function(c["f2"]), inst.family(c["L2"]))
    return support_sum_hull_check(*args)


def _envelope_conjugate(inst: InstanceFile, c: dict) -> RuleReport:
    L = inst.family(c["family"])
    return envelope_conjugate_check(_index_set(inst, L, c["members"], "members"))


def _pinned_normal_hull(inst: InstanceFile, c: dict) -> RuleReport:
    L, C = inst.family(c["family"]), inst.point_set(c["C"])
    pts = _points(inst, L.domain, c.get("points"), "points")
    return _each_point("pinned-normal-hull", [pinned_normal_hull_check(L, x, C) for x in pts])


CHECKS: dict[str, Callable[[InstanceFile, dict], RuleReport]] = {
    "separation": _separation,
    "max-rule": _max_rule,
    "moreau": _moreau,
    "epi-conjugate": _epi,
    "normal-subdifferential": _normal_subdiff,
    "restriction": _restriction,
    "shift-rules": _shift,
    "sum-rule": _sum_rule,
    "conjugate-sum": _conjugate_sum,
    "composition": _composition,
    "normal-sum": _normal_sum,
    "monotone-algebra": _monotone_algebra,
    "maximality": _maximality,
    "bronsted-rockafellar": _br,
    "zero-subgradient": _zero_subgradient,
    "assumption": _assumption,
    "subdifferential": _subdifferential,
    "hull-laws": _hull_laws,
    "separation-witness": _separation_witness,
    "subdifferential-hull": _subdiff_hull,
    "sum-convexity": _sum_convexity,
    "support-sum-hull": _support_sum_hull,
    "envelope-conjugate": _envelope_conjugate,
    "pinned-normal-hull": _pinned_normal_hull,
}


# ---------------------------------------------------------------------------
# expectations and running
# ---------------------------------------------------------------------------


def _apply_expect(r: RuleReport, expect: dict) -> RuleReport:
    data = r.to_json()
    mismatches = []
    for key, want in expect.items():
        got = _dig(data, key)
        if got != want:
            mismatches.append({"kind": "expectation-mismatch", "field": key, "expected": want, "actual": got})
    if mismatches:
        r.witnesses = mismatches + r.witnesses
        r.status = FAIL
    return r


def _dig(data: dict, key: str):
    node = data
    for part in key.split("."):
        if isinstance(node, dict) and part in node:
            node = node[part]
        elif isinstance(node, list) and part.isdigit() and int(part) < len(node):
            node = node[int(part)]
        else:
            return "<missing>"
    return node


def run_instance(inst: InstanceFile) -> Report:
    start = time.perf_counter()
    entries = []
    for i, c in enumerate(inst.checks):
        rule = c["rule"]
        if rule not in CHECKS:
            raise InstanceError(f"checks[{i}]", f"unknown rule {rule!r}")
        try:
            r = CHECKS[rule](inst, c)
        except InstanceError as exc:
            if exc.where != "check":
                raise
            raise InstanceError(f"checks[{i}]", exc.message) from None
        if "label" in c:
            r.details["label"] = c["label"]
        if "expect" in c:
            r = _apply_expect(r, c["expect"])
        entries.append(r)
    info = {"backend": inst.backend}
    if inst.domain.is_finite:
        info["points"] = len(inst.domain.points)
    info["families"] = {k: len(v) for k, v in inst.families.items()}
    return Report(inst.name, entries, info, time.perf_counter() - start)


def scenario_path(name: str):
    if name not in CATALOG:
        raise UnknownScenarioError(f"unknown scenario {name!r}; built-ins: {', '.join(CATALOG)}")
    return resources.files("abconvex").joinpath("scenarios", f"{name}.json")


def load_scenario(name_or_path) -> InstanceFile:
    if isinstance(name_or_path, str) and name_or_path in CATALOG:
        data = json.loads(scenario_path(name_or_path).read_text())
        return parse_instance(data, name_or_path)
    path = Path(name_or_path)
    if not path.exists():
        raise UnknownScenarioError(f"unknown scenario {str(name_or_path)!r}; built-ins: {', '.join(CATALOG)}")
    return load_instance(path)


def run_scenario(name_or_path) -> Report:
    return run_instance(load_scenario(name_or_path))
