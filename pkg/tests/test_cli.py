import csv
import io
import json
import subprocess
import sys

import pytest

from cusptaylor.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, run


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, out.getvalue()


def lines(text):
    return [json.loads(x) for x in text.splitlines() if x and not x.startswith("#")]


def test_header_records_config():
    code, text = call("certify", "--disc", "-11", "--prime", "23", "--no-timing", "--seed", "5")
    assert code == EXIT_OK
    head, cert = lines(text)
    assert head["config"]["seed"] == 5 and head["config"]["prime"] == 23
    assert cert["verdict"] == "ALL_NONZERO" and "wall_time_ms" not in cert


def test_no_timing_is_byte_identical():
    a = call("certify", "--disc", "-7", "--prime", "23", "--no-timing")
    b = call("certify", "--disc", "-7", "--prime", "23", "--no-timing")
    assert a == b


def test_expectation_exit_codes():
    assert call("certify", "--disc", "-7", "--prime", "23", "--expect", "nonzero")[0] == EXIT_OK
    code, text = call("certify", "--disc", "-4", "--prime", "7", "--expect", "nonzero")
    assert code == EXIT_FAIL
    assert lines(text)[-1]["error"] == "EXPECTATION_FAILED"
    assert call("certify", "--disc", "-4", "--prime", "7", "--expect", "tends-to-zero")[0] == EXIT_OK


def test_usage_errors():
    assert call("nonsense")[0] == EXIT_USAGE
    code, text = call("certify", "--disc", "-5", "--prime", "7")
    assert code == EXIT_USAGE and lines(text)[-1]["error"] == "USAGE"
    assert call("certify", "--disc", "-7", "--prime", "9")[0] == EXIT_USAGE
    assert call("coeff", "--m", "2")[0] == EXIT_USAGE


def test_coeff_routes_agree():
    code, text = call("coeff", "--m", "4", "--disc", "-8", "--no-timing")
    assert code == EXIT_OK
    res = lines(text)[1]
    assert set(res["routes"]) == {"theorem", "derivative", "cm"}
    assert res["max_rel_disagreement"] < 1e-8


def test_coeff_at_point():
    code, text = call("coeff", "--x", "0.1", "--y", "1.2", "--m", "3", "--route", "derivative")
    assert code == EXIT_OK and set(lines(text)[1]["routes"]) == {"derivative"}


def test_zeros_csv():
    code, text = call("zeros", "--m", "2", "--emit", "csv", "--no-timing")
    assert code == EXIT_OK
    first, *rest = text.splitlines()
    assert first.startswith("# ") and json.loads(first[2:])["config"]["emit"] == "csv"
    rows = list(csv.DictReader(rest))
    assert [r["kind"] for r in rows] == ["elliptic_forced", "line_re0", "line_rehalf"]
    assert abs(float(rows[1]["y"]) - 1.344) < 1e-3


def test_period_and_scan():
    code, text = call("period", "--disc", "-8", "--prime", "17", "--no-timing")
    assert code == EXIT_OK and lines(text)[1]["relations"]["ok"] is True
    code, text = call("scan-residue", "--disc", "-8", "--lmax", "30", "--threads", "1", "--no-timing")
    assert code == EXIT_OK
    rows = [r for r in lines(text)[1:] if "prime" in r]
    assert {r["prime"] for r in rows if not r["tends_to_zero"]} == {l for l in (11, 17, 19) if l % 8 in (1, 3)}


def test_table():
    code, text = call("table", "--precision", "12")
    assert code == EXIT_OK
    assert [r["disc"] for r in lines(text)[1:]] == [-3, -4, -7, -8, -11, -15, -19, -20, -24]


def test_selftest_budget_skips(monkeypatch):
    monkeypatch.setenv("CUSPTAYLOR_BUDGET_MS", "1")
    code, text = call("selftest", "--only", "5", "--json")
    # skipping for lack of budget is not a failure
    assert code == EXIT_OK
    assert lines(text)[1]["status"] == "SKIPPED"


def test_step_budget_exhausted():
    code, text = call("certify", "--disc", "-15", "--prime", "83", "--max-steps", "50")
    assert code == EXIT_FAIL
    err = lines(text)[-1]
    assert err["error"] == "BUDGET_EXCEEDED" and err["theoretical_bound"] == "83^167"


def test_selftest_quick_criterion():
    code, text = call("selftest", "--only", "1,2", "--no-timing")
    assert code == EXIT_OK
    assert [x.split()[0] for x in text.splitlines()[1:] if x.startswith("[")] == ["[PASS]", "[PASS]"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cusptaylor", "certify", "--disc", "-3", "--prime", "7",
                           "--no-timing"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout.splitlines()[1])["verdict"] == "ALL_NONZERO"
