import io
import json
import subprocess
import sys

import pytest

from flowcalc.cli import main

DB = {"tables": [{"name": "t",
                  "policy": {"tableLabel": "secret", "fresh": 1, "labelField1": "public",
                             "labelField2": {"ifEqInt": [0, {"const": "secret"}, {"const": "public"}]}},
                  "rows": [{"key": 0, "v1": "(int 0)", "v2": "(int 5)"}]}]}


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    write("db.json", json.dumps(DB))
    return write, str(tmp_path / "db.json")


def test_run_terminates(files):
    write, db = files
    code, out = run("run", write("p.lw", "(return unit)"), db, "--lattice=twopoint", "--fuel=1000")
    assert code == 0
    assert out.splitlines()[:2] == ["terminated after 1 steps", "(pg public (lio unit))"]


def test_run_fuel_exhausted(files):
    write, db = files
    code, out = run("run", write("p.lw", "(fix (lam 0 (var 0)))"), db, "--fuel=50")
    assert code == 2 and out.startswith("fuel-exhausted")


def test_run_json_and_trace(files):
    write, db = files
    prog = write("p.lw", "(bind (unlabel (labeled secret (int 7))) (lam 0 (return (var 0))))")
    code, out = run("run", prog, db, "--json", "--trace")
    doc = json.loads(out)
    assert code == 0 and doc["status"] == "terminated"
    assert doc["program"] == "(pg secret (lio (int 7)))"
    labels = [e["label"] for e in doc["trace"]]
    assert labels[0] == "public" and labels[-1] == "secret"
    assert all("db_digest" in e for e in doc["trace"])
    _, full = run("run", prog, db, "--trace=full")
    assert full.startswith('[0] (pg public (bind') and '"tables"' in full.splitlines()[0]


def test_run_reports_invalid_policy(files, capsys):
    write, _ = files
    bad = json.loads(json.dumps(DB))
    bad["tables"][0]["policy"]["labelField1"] = "secret"
    bad["tables"][0]["policy"]["tableLabel"] = "public"
    code, _ = run("run", write("p.lw", "(return unit)"), write("bad.json", json.dumps(bad)))
    assert code == 1
    assert "labelField1" in capsys.readouterr().err


def test_run_reports_parse_position(files, capsys):
    write, db = files
    prog = write("broken.lw", "(return\n  (int x))")
    assert run("run", prog, db)[0] == 1
    assert "broken.lw:2:8:" in capsys.readouterr().err


def test_run_missing_file(files, capsys):
    _, db = files
    assert run("run", "/nonexistent.lw", db)[0] == 1
    assert "error:" in capsys.readouterr().err


def test_run_mutant_flag(files):
    write, db = files
    prog = write("p.lw", '(insert "t" (labeled public (int 1)) (labeled public unit))')
    assert "(pg secret" in run("run", prog, db)[1]
    assert "(pg public" in run("run", prog, db, "--mutant=literal")[1]


def test_erase(files, tmp_path):
    write, db = files
    prog = write("p.lw", "(pg public (return (labeled secret (int 3))))")
    code, out = run("erase", prog, db, "--observer=public")
    assert code == 0
    assert out.splitlines()[0] == "(pg public (return (labeled secret hole)))"
    doc = json.loads(out.split("\n", 1)[1])
    assert doc["tables"][0]["rows"] == [] and doc["tables"][0]["policy"]["fresh"] == 0
    _, kept = run("erase", prog, db, "--observer=public", "--keep-fresh")
    assert json.loads(kept.split("\n", 1)[1])["tables"][0]["policy"]["fresh"] == 1
    # secret observer sees everything
    _, same = run("erase", prog, db, "--observer=secret")
    assert same.splitlines()[0] == "(pg public (return (labeled secret (int 3))))"
    assert json.loads(same.split("\n", 1)[1]) == DB
    hole = write("h.lw", "(pg secret (return unit))")
    assert run("erase", hole, db, "--observer=public")[1].startswith("pghole\n")


def test_erase_files_are_idempotent(files, tmp_path):
    write, db = files
    prog = write("p.lw", "(pg public (bind (return (labeled secret (int 3))) (lam 0 (return unit))))")
    p1, d1 = str(tmp_path / "e1.lw"), str(tmp_path / "e1.json")
    p2, d2 = str(tmp_path / "e2.lw"), str(tmp_path / "e2.json")
    assert run("erase", prog, db, "--observer=public", "--output-program", p1, "--output-db", d1) == (0, "")
    run("erase", p1, d1, "--observer=public", "--output-program", p2, "--output-db", d2)
    assert open(p1).read() == open(p2).read()
    assert open(d1).read() == open(d2).read()


def test_erase_bad_observer(files, capsys):
    write, db = files
    assert run("erase", write("p.lw", "unit"), db, "--observer=nosuch")[0] == 1
    assert "--observer" in capsys.readouterr().err


def test_check_laws_and_json():
    code, out = run("check", "--suite=laws", "--lattice=powerset:A,B,C")
    assert code == 0 and out.startswith("PASS laws lattice=powerset:A,B,C")
    code, out = run("check", "--suite=safety", "--trials=20", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["reports"][0]["trials"] == 20


def test_check_all_lattices():
    code, out = run("check", "--suite=idempotence", "--trials=10", "--lattice=all")
    assert code == 0
    assert [l.split()[2] for l in out.splitlines()[:-1]] == \
        ["lattice=twopoint", "lattice=powerset:A,B,C", "lattice=confinteg"]


def test_check_mutant_exits_nonzero():
    code, out = run("check", "--suite=noninterference", "--trials=3000", "--seed=1",
                    "--mutant=insert-no-l1", "--max-failures=1")
    assert code == 1
    assert "failure trial=" in out and "program1:" in out and "program2:" in out


def test_check_usage_errors(capsys):
    assert run("check", "--suite=nosuch")[0] == 1
    assert run("check", "--lattice=frob")[0] == 1
    assert run("check", "--trials=-1")[0] == 1
    assert run("check", "--observer=nosuch", "--suite=safety")[0] == 1
    assert capsys.readouterr().err.count("error:") == 4


def test_module_entry_point(files):
    write, db = files
    res = subprocess.run([sys.executable, "-m", "flowcalc", "run", write("p.lw", "(return unit)"), db],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "terminated" in res.stdout
