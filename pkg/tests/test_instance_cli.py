from __future__ import annotations

import copy
import csv
import io
import json
import subprocess
import sys
from fractions import Fraction as Q

import pytest

import abconvex.suite as suite_mod
from abconvex import (
    CATALOG,
    FAIL,
    InstanceError,
    Report,
    UnknownScenarioError,
    emit_plot_data,
    load_instance,
    parse_instance,
    replay_witness,
    run_instance,
    run_property_suite,
    run_scenario,
)
from abconvex.cli import main
from abconvex.plotdata import format_value, sample_points
from abconvex.scenarios import load_scenario
from abconvex.suite import random_instance

GRID = {"backend": "finite_points", "grid": {"lo": "-2", "hi": "2"}}


def doc(**extra):
    out = dict(GRID, families={"L": ["0", "x", "-x"]}, functions={"f": "abs(x)"})
    out.update(extra)
    return out


# --- loading ---------------------------------------------------------------------


class TestLoading:
    def test_figure_one_scenario(self):
        inst = load_scenario("fig1-separation")
        assert len(inst.family("H")) == 4
        assert inst.subset("A").labels() == ["-abs(x-1)+2", "-abs(x+1)+2"]
        assert inst.subset("B").labels() == ["-abs(x)+2", "0"]

    @pytest.mark.parametrize(
        "bad,where",
        [
            ({"backend": "bogus"}, "<root>"),
            (dict(GRID, families={"L": ["x/2"]}), "families.L[0]"),
            (dict(GRID, functions={"f": {"table": ["1", "1/0", "0", "0", "0"]}}), "functions.f.table"),
            (dict(GRID, families={"L": ["x"]}, checks=[{"rule": "moreau", "function": "nope", "family": "L", "x": "0"}]), "checks[0]"),
            (dict(GRID, families={"L": ["x"]}, functions={"L": "x"}), "<root>"),
        ],
    )
    def test_errors_name_the_location(self, bad, where):
        with pytest.raises(InstanceError) as info:
            run_instance(parse_instance(bad))
        assert str(info.value).startswith(where)

    def test_file_errors(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{\n  oops")
        with pytest.raises(InstanceError, match="line 2"):
            load_instance(p)
        with pytest.raises(InstanceError, match="cannot read"):
            load_instance(tmp_path / "missing.json")

    def test_unknown_rule_and_scenario(self):
        with pytest.raises(InstanceError, match="unknown rule"):
            run_instance(parse_instance(doc(checks=[{"rule": "nope"}])))
        with pytest.raises(UnknownScenarioError):
            run_scenario("nope")

    def test_tables_and_params(self):
        inst = parse_instance(
            doc(
                functions={"g": {"table": ["inf", "1", "0", "1", "inf"]}},
                params={"x": "1"},
                checks=[{"rule": "moreau", "function": "g", "family": "L", "x": "$x"}],
            )
        )
        assert run_instance(inst).status == "pass"


# --- scenarios and reports ---------------------------------------------------------


@pytest.mark.parametrize("name", CATALOG)
def test_builtin_scenarios_pass(name):
    rep = run_scenario(name)
    assert rep.status == "pass", rep.to_text()


def test_report_round_trip():
    rep = run_scenario("sum-rule")
    text = rep.dumps()
    again = Report.loads(text)
    assert again.dumps() == text
    assert "timing_seconds" not in text
    assert "timing_seconds" in rep.dumps(include_timing=True)


def test_expectation_mismatch_fails_the_check():
    inst = parse_instance(doc(checks=[{"rule": "moreau", "function": "f", "family": "L", "x": "0", "expect": {"conclusion": "strict-inclusion"}}]))
    rep = run_instance(inst)
    assert rep.status == FAIL
    w = rep.entries[0].witnesses[0]
    assert w == {"kind": "expectation-mismatch", "field": "conclusion", "expected": "strict-inclusion", "actual": "equal"}


# --- suite -----------------------------------------------------------------------


class TestSuite:
    def test_instances_are_reproducible_and_bounded(self):
        a, b = random_instance(3, 7), random_instance(3, 7)
        assert a == b and a != random_instance(3, 8)
        inst = parse_instance(a)
        assert len(inst.domain.points) <= suite_mod.LIMITS["grid_points"]
        assert all(len(f) <= suite_mod.LIMITS["family_members"] for f in inst.families.values())

    def test_small_run_is_deterministic(self):
        one = run_property_suite(5, 6).dumps()
        assert one == run_property_suite(5, 6).dumps()
        assert json.loads(one)["status"] == "pass"

    def test_count_must_be_positive(self):
        with pytest.raises(ValueError):
            run_property_suite(0, 0)

    def test_failures_carry_replayable_witnesses(self, monkeypatch):
        real = suite_mod.random_instance

        def broken(seed, index):
            d = copy.deepcopy(real(seed, index))
            d["checks"][0]["expect"] = {"conclusion": "violated"}
            return d

        monkeypatch.setattr(suite_mod, "random_instance", broken)
        rep = run_property_suite(0, 2)
        assert rep.status == FAIL
        bad = [e for e in rep.entries if e.status == FAIL]
        assert len(bad) == 1 and bad[0].details["failures"] == 2
        w = bad[0].witnesses[0]
        assert w["kind"] == "suite-failure" and w["instance_index"] == 0 and w["check_index"] == 0
        again = replay_witness(w)
        assert again.status == FAIL and again.to_json() == w["entry"]


# --- plot data -----------------------------------------------------------------------


class TestPlotData:
    def test_format_value(self):
        assert format_value(Q(1, 4)) == "0.25"
        assert format_value(Q(1, 3)) == "1/3"
        assert format_value(Q(-3)) == "-3"
        assert format_value(Q(0)) == "0"

    def test_samples(self):
        assert sample_points(Q(-1), Q(1), Q(1, 2)) == [Q(-1), Q(-1, 2), Q(0), Q(1, 2), Q(1)]
        with pytest.raises(ValueError):
            sample_points(Q(1), Q(0), Q(1))

    def test_figure_two_columns_match_evaluation(self):
        inst = load_scenario("fig2-maxrule")
        text = emit_plot_data(inst, ["abs(x)", "max(0,x) - 1"], (Q(-2), Q(2)), Q(1, 2))
        lines = list(csv.reader(io.StringIO(text)))
        assert lines[0] == ["x", "abs(x)", "max(0,x) - 1"]
        for line in lines[1:]:
            x, a, u = (Q(v) for v in line)
            assert a == abs(x) and u == max(0, x) - 1
        assert len(lines) == 10

    def test_families_expand_and_finite_backends_refuse(self):
        inst = load_scenario("fig1-separation")
        text = emit_plot_data(inst, ["H"], (Q(-4), Q(4)), Q(1, 4))
        rows = text.strip().split("\n")
        assert len(rows) == 34 and rows[0].count(",") == 4
        with pytest.raises(InstanceError):
            emit_plot_data(load_scenario("moreau"), ["f"], (Q(0), Q(1)), Q(1))


# --- command line ---------------------------------------------------------------------


class TestCli:
    def test_scenario_text(self, capsys):
        assert main(["scenario", "fig2-maxrule"]) == 0
        assert "strict-inclusion" in capsys.readouterr().out

    def test_scenario_all_json(self, capsys):
        assert main(["--format", "json", "scenario", "all"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert [d["scenario"] for d in data] == list(CATALOG)

    def test_check_and_failure_exit(self, tmp_path, capsys):
        good = tmp_path / "good.json"
        good.write_text(json.dumps(doc(checks=[{"rule": "moreau", "function": "f", "family": "L", "x": "0"}])))
        assert main(["check", str(good), "--format", "csv"]) == 0
        assert capsys.readouterr().out.splitlines()[0] == "scenario,rule,status,hypothesis,conclusion,witnesses"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc(checks=[{"rule": "moreau", "function": "f", "family": "L", "x": "0", "expect": {"status": "fail"}}])))
        assert main(["check", str(bad)]) == 1

    def test_usage_errors(self, tmp_path, capsys):
        assert main(["scenario", "nope"]) == 2
        assert main(["suite", "--count", "0"]) == 2
        assert main(["frobnicate"]) == 2
        assert main(["plot-data", "fig2-maxrule", "--range", "2"]) == 2
        assert main(["plot-data", "moreau", "--functions", "f"]) == 2
        p = tmp_path / "x.json"
        p.write_text("[1]")
        assert main(["check", str(p)]) == 2
        assert "abconvex: error" in capsys.readouterr().err

    def test_plot_data_with_negative_range(self, tmp_path):
        out = tmp_path / "plot.json"
        code = main(["plot-data", "fig2-maxrule", "--functions", "abs(x),max(0,x)-1", "--range", "-2:2", "--step", "1", "--format", "json", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["columns"] == ["x", "abs(x)", "max(0,x)-1"]
        assert data["rows"][0] == ["-2", "2", "-1"]

    def test_suite_via_subprocess_is_byte_identical(self):
        cmd = [sys.executable, "-m", "abconvex", "suite", "--seed", "1", "--count", "5", "--format", "json"]
        a = subprocess.run(cmd, capture_output=True, check=True).stdout
        b = subprocess.run(cmd, capture_output=True, check=True).stdout
        assert a == b and json.loads(a)["status"] == "pass"
