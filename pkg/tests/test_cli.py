import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from rdfplus.cli import EXIT_FAIL, EXIT_OK, EXIT_PARSE, EXIT_SOLVER, corpus_files, run

PROBE = "StrictUp(f) on [a,b] & f(a)=0 & f(b)=1 & a<b"


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, out.getvalue()


def two_one():
    return str(corpus_files()[[p.name for p in corpus_files()].index("two_one.rdf")])


@pytest.mark.solver
def test_two_one_valid():
    code, out = call("--mode", "check-valid", two_one())
    assert code == EXIT_OK and out.startswith("VALID")


@pytest.mark.solver
def test_contradiction_unsat():
    code, out = call("--mode", "check-sat", "x > x")
    assert code == EXIT_FAIL and out.startswith("UNSAT")


@pytest.mark.solver
def test_probe_sat_with_model():
    code, out = call("--mode", "check-sat", "--format", "json", PROBE)
    obj = json.loads(out)
    assert code == EXIT_OK and obj["verdict"] == "SAT" and obj["exact"]
    assert "_y_f_1" in obj["model"]


@pytest.mark.solver
def test_witness_probe():
    code, out = call("--mode", "witness", "--format", "json", PROBE)
    obj = json.loads(out)
    assert code == EXIT_OK
    fs = obj["witnesses"]["functions"]
    assert list(fs) == ["f"] and len(fs["f"]["breakpoints"]) == 2
    assert obj["report"]["ok"] and all(c["ok"] for c in obj["report"]["checks"])
    assert obj["report"]["worst_stitch"] < 1e-6


@pytest.mark.solver
def test_witness_text():
    code, out = call("--mode", "witness", PROBE)
    assert code == EXIT_OK and "report: pass" in out


@pytest.mark.solver
def test_witness_unsat_no_model():
    code, out = call("--mode", "witness", "--format", "json", "x > x")
    assert code == EXIT_FAIL and json.loads(out)["error"] == "no model"


@pytest.mark.solver
def test_witness_approximate_flagged():
    code, out = call("--mode", "witness", "--format", "json",
                     "f(a) = x & x * x = 2 & x > 0 & StrictUp(f) on [a,b] & f(b) = 2 & a < b")
    obj = json.loads(out)
    assert obj["report"]["approximate"]


@pytest.mark.solver
def test_corpus_with_variants_all_valid():
    code, out = call("--mode", "corpus", "--variants", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == EXIT_OK
    assert len(rows) == len(corpus_files(True)) == 13
    assert all(r["verdict"] == "VALID" for r in rows)
    assert "scop177_concave" in {r["name"] for r in rows}


@pytest.mark.solver
def test_corpus_negated_conclusion_row(tmp_path):
    for p in corpus_files():
        (tmp_path / p.name).write_text(p.read_text())
    (tmp_path / "two_one_negated.rdf").write_text("(D[f] > 0) on (a,b) -> !(StrictUp(f) on [a,b])\n")
    code, out = call("--mode", "corpus", "--format", "json", str(tmp_path))
    rows = {r["name"]: r["verdict"] for r in json.loads(out)["rows"]}
    assert code == EXIT_FAIL
    assert rows.pop("two_one_negated") == "INVALID"
    assert set(rows.values()) == {"VALID"}


def sample_rows(params, n=512):
    code, out = call("--mode", "sample", "--n", str(n), params)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x", "value", "derivative"]
    return [[float(v) for v in r] for r in rows[1:]]


def test_sample_single():
    rows = sample_rows("1,6,-12")
    assert len(rows) == 512
    best = max(rows, key=lambda r: r[1])
    assert abs(best[0] - 0.5) < 1 / 511 and abs(best[1] - 1) < 1e-4
    assert rows[0][1] == 0 and rows[0][2] == pytest.approx(6)
    assert rows[-1][2] == pytest.approx(-12)


def test_sample_single_hits_half():
    rows = sample_rows("1,6,-12", n=513)
    assert rows[256][0] == 0.5 and rows[256][1] == 1.0


def test_sample_double_middle_slope():
    rows = sample_rows("1/10,1,3", n=513)
    assert rows[256][0] == 0.5 and abs(rows[256][2] + 0.4) < 1e-12


def test_sample_null():
    rows = sample_rows("0,0,0", n=64)
    assert all(r[1] == 0 and r[2] == 0 for r in rows)


def test_sample_no_existence():
    code, out = call("--mode", "sample", "1,1,-1")
    assert code == EXIT_FAIL


def test_parse_error_exit():
    code, _ = call("--mode", "check-sat", "f(a) = ")
    assert code == EXIT_PARSE
    for bad in ("1,2", "1,x,2", "1/0,1,-1"):
        code, _ = call("--mode", "sample", bad)
        assert code == EXIT_PARSE


def test_missing_solver_exit():
    code, _ = call("--mode", "check-sat", "--solver", "/nonexistent/solver -in", PROBE)
    assert code == EXIT_SOLVER


def test_emit_smt(tmp_path):
    out = tmp_path / "smt"
    code, text = call("--mode", "emit-smt", "--out", str(out), PROBE)
    files = sorted(out.glob("*.smt2"))
    assert code == EXIT_OK and files
    assert text.split() == [str(p) for p in files]
    for p in files:
        body = p.read_text()
        assert body.startswith(";") and "(check-sat)" in body


@pytest.mark.parametrize("flag", ["--timeout", "--grid", "--branch-cap", "--n"])
def test_nonpositive_rejected(flag):
    with pytest.raises(SystemExit) as e:
        run(["--mode", "check-sat", flag, "0", "x > x"], io.StringIO())
    assert e.value.code == 2


def test_exactly_one_mode():
    with pytest.raises(SystemExit):
        run(["x > x"], io.StringIO())


@pytest.mark.solver
def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "rdfplus", "--mode", "check-sat", "x > 0"],
                       capture_output=True, text=True, cwd=Path(__file__).parent)
    assert p.returncode == 0 and p.stdout.startswith("SAT")


def test_sample_figures_script(tmp_path):
    script = Path(__file__).parents[1] / "scripts" / "sample_figures.py"
    p = subprocess.run([sys.executable, str(script), "--out", str(tmp_path), "--n", "65"],
                       capture_output=True, text=True)
    assert p.returncode == 0
    files = sorted(tmp_path.glob("*.csv"))
    assert len(files) == 3
    for f in files:
        rows = list(csv.reader(f.open()))
        assert rows[0] == ["x", "value", "derivative"] and len(rows) == 66
