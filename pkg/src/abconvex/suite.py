"""Seeded random property suite.

Each random instance is an ordinary instance document (expressions, tables
and a check list), so a failing entry carries everything needed to replay
it with :func:`replay_witness` or the ``check`` command.  Instance ``i`` of
seed ``s`` draws from its own ``random.Random`` stream, which keeps a run
reproducible and lets a single instance be regenerated on its own.
"""

from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction

from .calculus import conjugate
from .families import DomainSpec, function_from_text
from .instance import parse_instance
from .numerics import format_ext
from .reports import EQUAL, FAIL, FAILS, HOLDS, VIOLATED, Report, RuleReport
from .scenarios import run_instance

__all__ = ["random_instance", "run_property_suite", "replay_witness", "LIMITS"]

# bounds the generator never exceeds
LIMITS = {"grid_points": 51, "family_members": 40, "breakpoints": 8, "coefficient": 64}

_DENOMS = (1, 2, 4)
_TINY_LIN = ["0", "x", "-x"]
_TINY_POOL = ["x", "-x", "2*x", "-2*x", "abs(x)", "max(0, x)", "1/2*x"]
_A_VALUES = ["1/2", "1", "2"]
_WITNESS_CAP = 3


def _q(rng: random.Random, lo: int, hi: int, denoms=_DENOMS) -> Fraction:
    d = rng.choice(denoms)
    return Fraction(rng.randint(lo * d, hi * d), d)


def _s(q) -> str:
    return format_ext(Fraction(q))


def _pl_text(rng: random.Random, lo: Fraction, hi: Fraction, kinks: int) -> str:
    """``c0 + c1*x + sum ci*abs(x - bi)``: any continuous PL function with at
    most ``kinks`` breakpoints has this form."""
    parts = [_s(_q(rng, -3, 3)), f"{_s(_q(rng, -2, 2, (1, 2)))}*x"]
    for _ in range(rng.randint(0, kinks)):
        c = _q(rng, -2, 2, (1, 2))
        if c == 0:
            continue
        b = Fraction(rng.randint(int(lo * 4), int(hi * 4)), 4)
        parts.append(f"{_s(c)}*abs(x - {_s(b)})" if b >= 0 else f"{_s(c)}*abs(x + {_s(-b)})")
    return " + ".join(parts)


def _family(rng: random.Random, domain: DomainSpec, base: list[str], extra: int, make) -> list[str]:
    """``base`` plus up to ``extra`` generated members, skipping duplicates
    and members that differ from an earlier one by a constant."""
    texts, tables = [], []
    for t in base + [make() for _ in range(extra)]:
        vals = function_from_text(t, domain).form
        if any(len({a - b for a, b in zip(vals, w)}) == 1 for w in tables):
            continue
        texts.append(t)
        tables.append(vals)
    return texts


def _nested_max(terms: list[str]) -> str:
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = f"max({t}, {out})"
    return out


def _convex_text(rng: random.Random, members: list[str]) -> str:
    """Supremum of vertically shifted members: convex for that family."""
    pick = rng.sample(members, rng.randint(1, min(3, len(members))))
    return _nested_max([f"({m}) - ({_s(_q(rng, -2, 2))})" for m in pick])


def _subset(rng: random.Random, n: int, lo: int = 0) -> list[int]:
    return sorted(rng.sample(range(n), rng.randint(lo, n)))


def random_instance(seed: int, index: int) -> dict:
    """The instance document for position ``index`` of a seeded run."""
    rng = random.Random(seed * 1_000_003 + index)
    step = rng.choice([Fraction(1), Fraction(1, 2)])
    n = rng.randint(4, 7)
    lo = Fraction(rng.randint(-3, 0))
    hi = lo + step * (n - 1)
    X = DomainSpec.grid(lo, hi, step)
    pts = [p[0] for p in X.points]

    L = _family(rng, X, ["0"], rng.randint(2, 4), lambda: _pl_text(rng, lo, hi, 2))
    L2 = _family(rng, X, ["0"], rng.randint(1, 3), lambda: _pl_text(rng, lo, hi, 2))
    LL = _family(rng, X, list(L), rng.randint(1, 2), lambda: _pl_text(rng, lo, hi, 3))

    def table(inf_share: float) -> list[str]:
        vals = [_s(_q(rng, -3, 3)) if rng.random() >= inf_share else "inf" for _ in pts]
        if all(v == "inf" for v in vals):
            vals[rng.randrange(n)] = "0"
        return vals

    # composition source: a surjective map half of the time
    m = rng.randint(n, n + 2)
    if rng.random() < 0.5:
        images = list(pts) + [rng.choice(pts) for _ in range(m - n)]
        rng.shuffle(images)
    else:
        images = [rng.choice(pts) for _ in range(m)]

    # tiny instance for maximality, the slack search and the zero rule
    T = sorted(rng.sample([-1, 0, 1, 2], rng.randint(2, 3)))
    TD = DomainSpec.finite([(Fraction(t),) for t in T])
    LT = _family(rng, TD, ["0"], rng.randint(1, 3), lambda: rng.choice(_TINY_POOL))
    fT = [str(rng.randint(0, 3)) for _ in T]
    y = rng.choice(T)
    v = rng.choice(LT)
    slack = _tiny_slack(TD, fT, LT, v, y)
    lam = rng.choice([Fraction(1, 2), Fraction(1), Fraction(2)])
    mu = slack / lam + rng.choice([Fraction(0), Fraction(1, 2), Fraction(1)])

    sets = [_subset(rng, len(L)) for _ in range(2)]
    sets.append(sorted(set(sets[0]) | set(_subset(rng, len(L)))))
    psets = [[_s(pts[j]) for j in _subset(rng, n, 1)] for _ in range(2)]
    psets.append(sorted(set(psets[0]) | {_s(rng.choice(pts))}, key=Fraction))

    f_text = _convex_text(rng, L)
    doc = {
        "name": f"suite-{seed}-{index}",
        "backend": "finite_points",
        "grid": {"lo": _s(lo), "hi": _s(hi), "step": _s(step)},
        "domains": {
            "Y": {"points": [str(k) for k in range(m)]},
            "T": {"points": [str(t) for t in T]},
        },
        "families": {
            "L": L,
            "L2": L2,
            "LL": LL,
            "LT": {"domain": "T", "members": LT},
            "ST": {"domain": "T", "members": _TINY_LIN},
        },
        "functions": {
            "f": f_text,
            "f2": _convex_text(rng, L2),
            "fa": {"envelope": "L", "members": _subset(rng, len(L), 1)},
            "fb": {"envelope": "L2", "members": _subset(rng, len(L2), 1)},
            "g": {"table": table(0.3), "label": "g"},
            "h": {"table": table(0.0), "label": "h"},
            "u": _pl_text(rng, lo, hi, 2),
            "fT": {"table": fT, "domain": "T", "label": "fT"},
            "v": {"expr": v, "domain": "T"},
        },
        "point_sets": {
            "C": [_s(pts[j]) for j in _subset(rng, n, 1)],
            "D": [_s(pts[j]) for j in _subset(rng, n, 1)],
        },
        "checks": [],
    }
    finite_f = [_s(c) for c in sorted({Fraction(c) for c in _values(X, f_text)})]
    checks = [
        {"rule": "hull-laws", "family": "L", "sets": sets, "point_sets": psets, "function": "f", "c_samples": finite_f},
        {"rule": "hull-laws", "family": "L", "function": "g"},
        {"rule": "separation-witness", "family": "L", "lower": _subset(rng, len(L)), "upper": _subset(rng, len(L))},
        {"rule": "moreau", "function": "f", "family": "L", "points": "all"},
        {"rule": "moreau", "function": "g", "family": "L", "points": "all"},
        {"rule": "epi-conjugate", "function": "f", "family": "L", "c_samples": [_s(_q(rng, -3, 3))]},
        {"rule": "epi-conjugate", "function": "g", "family": "L2", "c_samples": [_s(_q(rng, -3, 3))]},
        {"rule": "normal-subdifferential", "function": "g", "family": "L", "points": "all", "c_samples": ["1/2", "1"]},
        {"rule": "subdifferential-hull", "function": "g", "family": "L", "points": "all"},
        {"rule": "restriction", "function": "g", "small": "L", "large": "LL", "points": "all"},
        {"rule": "shift-rules", "function": "g", "family": "L", "u": "u", "y": _s(rng.choice(pts)), "points": "all"},
        {"rule": "sum-rule", "f1": "f", "L1": "L", "f2": "f2", "L2": "L2", "points": "all"},
        {"rule": "sum-rule", "f1": "g", "L1": "L", "f2": "h", "L2": "L2", "points": "all"},
        {"rule": "conjugate-sum", "f1": "f", "L1": "L", "f2": "f2", "L2": "L2"},
        {"rule": "sum-convexity", "f1": "f", "L1": "L", "f2": "f2", "L2": "L2"},
        {"rule": "support-sum-hull", "f1": "f", "L1": "L", "f2": "f2", "L2": "L2"},
        {"rule": "support-sum-hull", "f1": "fa", "L1": "L", "f2": "fb", "L2": "L2"},
        {"rule": "sum-convexity", "f1": "g", "L1": "L", "f2": "f2", "L2": "L2"},
        {"rule": "envelope-conjugate", "family": "L", "members": _subset(rng, len(L), 1)},
        {"rule": "composition", "function": "g", "family": "L", "source": "Y", "map": [_s(p) for p in images], "points": "all"},
        {"rule": "normal-sum", "C": "C", "L1": "L", "D": "D", "L2": "L2", "points": "all"},
        {"rule": "pinned-normal-hull", "family": "L", "C": "C", "points": "all"},
        {
            "rule": "monotone-algebra",
            "operators": [["f", "L"], ["g", "L"], ["f2", "L2"]],
            "coefficients": [[_s(_q(rng, 0, 2)), _s(_q(rng, 0, 2))]],
        },
        {"rule": "maximality", "function": "fT", "family": "LT", "lin": "ST", "a": _A_VALUES, "base_points": "all"},
        {
            "rule": "bronsted-rockafellar",
            "function": "fT", "family": "LT", "lin": "ST", "y": str(y), "v": "v",
            "lambda": _s(lam), "mu": _s(mu), "a": ["1"],
        },
    ]
    if 0 in T:
        checks.append({"rule": "zero-subgradient", "function": "fT", "family": "LT", "lin": "ST", "a": ["1"]})
    doc["checks"] = checks
    return doc


def _values(X: DomainSpec, text: str):
    return function_from_text(text, X).form


def _tiny_slack(TD: DomainSpec, fT: list[str], LT: list[str], v: str, y: int) -> Fraction:
    """``f(y) + f*(v) - v(y)`` for the tiny instance, used to pick lambda and
    mu so that the slack condition holds."""
    from .families import Function, FunctionFamily

    f = Function(TD, tuple(Fraction(c) for c in fT))
    fam = FunctionFamily.build(TD, [function_from_text(t, TD) for t in LT])
    vf = function_from_text(v, TD)
    return f((Fraction(y),)) + conjugate(f, fam).value_of(vf) - vf((Fraction(y),))


def run_property_suite(seed: int, count: int) -> Report:
    """Run ``count`` random instances and fold the results per rule."""
    if count <= 0:
        raise ValueError("count must be positive")
    runs: dict[str, list] = {}
    for i in range(count):
        doc = random_instance(seed, i)
        rep = run_instance(parse_instance(doc, doc["name"]))
        for k, entry in enumerate(rep.entries):
            runs.setdefault(entry.rule, []).append((i, k, entry, doc))
    entries = [_fold(rule, items) for rule, items in runs.items()]
    return Report("suite", entries, {"seed": seed, "count": count, "limits": LIMITS})


def _fold(rule: str, items: list) -> RuleReport:
    hyp = Counter(e.hypothesis for _, _, e, _ in items)
    concl = Counter(e.conclusion for _, _, e, _ in items)
    status = Counter(e.status for _, _, e, _ in items)
    failing = [(i, k, e, doc) for i, k, e, doc in items if e.status == FAIL]
    witnesses = [
        {"kind": "suite-failure", "instance_index": i, "check_index": k, "instance": doc, "entry": e.to_json()}
        for i, k, e, doc in failing[:_WITNESS_CAP]
    ]
    details = {
        "runs": len(items),
        "instances": len({i for i, *_ in items}),
        "failures": len(failing),
        "hypothesis": dict(sorted(hyp.items())),
        "conclusion": dict(sorted(concl.items())),
        "status": dict(sorted(status.items())),
    }
    if failing:
        return RuleReport(rule, HOLDS, VIOLATED, witnesses, details, status=FAIL)
    summary_hyp = HOLDS if set(hyp) <= {HOLDS} else (FAILS if set(hyp) == {FAILS} else "mixed")
    return RuleReport(rule, summary_hyp, EQUAL, [], details, status="pass")


def replay_witness(witness: dict) -> RuleReport:
    """Re-run the check recorded in a suite witness on its own instance."""
    doc = dict(witness["instance"])
    doc["checks"] = [doc["checks"][witness["check_index"]]]
    return run_instance(parse_instance(doc, doc.get("name", "replay"))).entries[0]
