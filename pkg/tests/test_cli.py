from __future__ import annotations

import csv
import io
import json

from clockauction.cli import EXIT_AUDIT, EXIT_INPUT, EXIT_OK, EXIT_TRUNCATED, main
from clockauction.formats import loads_instance, loads_trace


def generate(tmp_path, *flags):
    out = tmp_path / "inst.json"
    code = main(["generate", *flags, "--out", str(out)])
    return code, out


def test_generate_thm41_counts(tmp_path, capsys):
    code, out = generate(tmp_path, "--family", "thm41", "--k", "3", "--l", "2")
    assert code == EXIT_OK
    inst, cfg = loads_instance(out.read_text())
    assert (inst.n, inst.m) == (8, 16)
    assert "n=8 m=16 expected_welfare=10/1" in capsys.readouterr().out


def test_generate_smra(tmp_path):
    code, out = generate(tmp_path, "--family", "smra_stop", "--c", "10", "--V", "100")
    inst, _ = loads_instance(out.read_text())
    assert (inst.n, inst.m) == (3, 4)


def test_generate_unknown_family(tmp_path):
    code, _ = generate(tmp_path, "--family", "nope")
    assert code == EXIT_INPUT


def test_generate_bad_params_name_the_bound(tmp_path, capsys):
    code, _ = generate(tmp_path, "--family", "fixed_unit", "--n", "8", "--V", "100")
    assert code == EXIT_INPUT
    assert "perfect square" in capsys.readouterr().err


def test_generate_missing_param(tmp_path, capsys):
    code, _ = generate(tmp_path, "--family", "thm41", "--k", "3")
    assert code == EXIT_INPUT
    assert "--l" in capsys.readouterr().err


def test_run_thm41(tmp_path):
    _, inst = generate(tmp_path, "--family", "thm41", "--k", "3", "--l", "3")
    res, trace = tmp_path / "res.json", tmp_path / "trace.csv"
    assert main(["run", str(inst), "--out", str(res), "--trace", str(trace)]) == EXIT_OK
    assert json.loads(res.read_text())["welfare"] == "12/1"
    rows = loads_trace(trace.read_text())
    assert rows[-1]["event"] == "stop"


def test_run_pairs(tmp_path):
    _, inst = generate(tmp_path, "--family", "fixed_pairs", "--n", "8", "--V", "100")
    res = tmp_path / "res.json"
    assert main(["run", str(inst), "--out", str(res)]) == EXIT_OK
    assert json.loads(res.read_text())["welfare"] == "200/1"


def test_run_single_bidder(tmp_path):
    path = tmp_path / "one.json"
    path.write_text(json.dumps({"m": 1, "bidders": [{"kind": "unit", "values": {"0": "5/1"}}]}))
    res = tmp_path / "res.json"
    assert main(["run", str(path), "--out", str(res)]) == EXIT_OK
    doc = json.loads(res.read_text())
    assert doc["allocation"] == {"0": {"bundle": [0], "payment": "0/1"}}


def test_run_parse_failure(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    assert main(["run", str(path)]) == EXIT_INPUT
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_INPUT


def test_run_truncation(tmp_path):
    _, inst = generate(tmp_path, "--family", "smra_stop", "--c", "10", "--V", "100")
    trace = tmp_path / "t.csv"
    assert main(["run", str(inst), "--max-rounds", "5", "--trace", str(trace)]) == EXIT_TRUNCATED
    assert {r["round"] for r in loads_trace(trace.read_text())} == set(range(5))


def test_run_overrides_config(tmp_path):
    _, inst = generate(tmp_path, "--family", "smra_stop", "--c", "10", "--V", "100")
    res = tmp_path / "res.json"
    assert main(["run", str(inst), "--stop", "porter", "--out", str(res)]) == EXIT_OK
    assert json.loads(res.read_text())["welfare"] != "600/1"


def test_run_audit_violation(tmp_path, monkeypatch):
    from clockauction import cli, harness

    _, inst = generate(tmp_path, "--family", "fixed_pairs", "--n", "2", "--V", "10")

    def broken(*a):
        rep = harness.AuditReport({"monotone": harness.Check("monotone")})
        rep.checks["monotone"].fail("injected")
        return rep

    monkeypatch.setattr(cli, "audit_trace", broken)
    assert main(["run", str(inst), "--out", str(tmp_path / "r.json")]) == EXIT_AUDIT


def test_sweep_csv(tmp_path):
    out = tmp_path / "s.csv"
    grid = json.dumps({"k": [2, 3], "l": [2, 3]})
    assert main(["sweep", "--family", "thm41", "--grid", grid, "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["welfare"] for r in rows] == ["8/1", "10/1", "10/1", "12/1"]
    assert all(r["welfare"] == r["expected_welfare"] for r in rows)


def test_sweep_repeatable_and_empty(tmp_path):
    a, b, e = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "e.csv"
    grid = json.dumps({"n": [2, 3], "m": [2]})
    main(["sweep", "--family", "random_unit", "--grid", grid, "--seed", "9", "--out", str(a)])
    main(["sweep", "--family", "random_unit", "--grid", grid, "--seed", "9", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert main(["sweep", "--family", "thm41", "--grid", "[]", "--out", str(e)]) == EXIT_OK
    assert len(e.read_text().splitlines()) == 1


def test_sweep_errors(tmp_path):
    assert main(["sweep", "--family", "nope"]) == EXIT_INPUT
    assert main(["sweep", "--family", "thm41", "--grid", "{bad"]) == EXIT_INPUT
    out = tmp_path / "s.csv"
    assert main(["sweep", "--family", "thm41", "--grid", '[{"k": 1, "l": 2}]', "--out", str(out)]) == EXIT_INPUT


def test_verify_unknown_suite():
    assert main(["verify", "nope"]) == EXIT_INPUT


def _patch_suite(monkeypatch, passed):
    from clockauction import acceptance

    row = acceptance.CriterionResult("toy", passed, "detail", 0.0)
    monkeypatch.setitem(acceptance.CRITERIA, 99, lambda: [row])
    monkeypatch.setitem(acceptance.SUITES, "toy", (99,))


def test_verify_prints_rows(monkeypatch, capsys):
    _patch_suite(monkeypatch, True)
    assert main(["verify", "toy"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("PASS  toy  detail")


def test_verify_failure_exit(monkeypatch, capsys):
    _patch_suite(monkeypatch, False)
    assert main(["verify", "toy"]) == 1
    assert capsys.readouterr().out.startswith("FAIL")


def test_bad_flags():
    assert main(["run"]) == EXIT_INPUT
    assert main(["generate", "--family", "thm41", "--policy", "sometimes"]) == EXIT_INPUT
    assert main(["--help"]) == EXIT_OK
