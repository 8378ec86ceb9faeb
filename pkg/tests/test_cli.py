"""Command-line behaviour: exit codes, printed tables and JSON reports."""

import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from fforge.algebra import diagonal_algebra, truncated_polynomial_algebra
from fforge.cli import main
from fforge.potentials import StructureTensor


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def p2_docs(tmp_path_factory):
    d = tmp_path_factory.mktemp("p2")
    path = d / "phi.json"
    code, _ = run("gw", "--r", "2", "--max-degree", "3", "--emit-potential", str(path))
    assert code == 0
    return path, d / "phi.json.metric.json"


def test_gw_table():
    code, text = run("gw", "--r", "2", "--max-degree", "3")
    assert code == 0
    assert text.splitlines() == ["1 2 1", "2 5 1", "3 8 12"]


def test_gw_seed_only():
    code, text = run("gw", "--r", "2", "--max-degree", "1")
    assert code == 0 and text.splitlines() == ["1 2 1"]


@pytest.mark.parametrize("argv", [["gw", "--r", "0"], ["gw", "--r", "2", "--max-degree", "99"], ["gw"], ["nope"]])
def test_gw_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_json_report(tmp_path):
    out = tmp_path / "rep.json"
    code, _ = run("gw", "--r", "2", "--max-degree", "2", "--json", str(out))
    doc = json.loads(out.read_text())
    assert code == 0 and doc["passed"] and doc["command"] == "gw"
    assert doc["verdicts"]["recursion_agreement"]


def test_wdvv_accepts_generated_potential(p2_docs):
    phi, metric = p2_docs
    code, text = run("wdvv", "--potential", str(phi), "--metric", str(metric), "--projective", "2")
    assert code == 0, text


def test_wdvv_corrupted_coefficient(p2_docs, tmp_path):
    phi, metric = p2_docs
    doc = json.loads(phi.read_text())
    term = next(t for t in doc["terms"] if sum(t["exp"]) >= 5)
    term["num"] = str(int(term["num"]) + 1)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, text = run("wdvv", "--potential", str(bad), "--metric", str(metric))
    assert code == 1
    assert "wdvv" in text


def test_wdvv_missing_metric(p2_docs):
    assert run("wdvv", "--potential", str(p2_docs[0]))[0] == 2


def test_wdvv_malformed_document(tmp_path, p2_docs):
    bad = tmp_path / "x.json"
    bad.write_text("{not json")
    assert run("wdvv", "--potential", str(bad), "--metric", str(p2_docs[1]))[0] == 2


def test_assoc(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(StructureTensor.constant([[[1, 0], [0, 1]], [[0, 1], [1, 0]]], 3).to_doc()))
    assert run("assoc", "--tensor", str(good))[0] == 0
    bad = tmp_path / "bad.json"
    s = [[[0, 1], [1, 0]], [[1, 0], [0, 1]]]
    s[1][1] = [1, 1]
    bad.write_text(json.dumps(StructureTensor.constant(s, 3).to_doc()))
    assert run("assoc", "--tensor", str(bad))[0] == 1


def test_an_worked_point(tmp_path):
    f = tmp_path / "a.json"
    f.write_text(json.dumps([-3, 0]))
    rep = tmp_path / "r.json"
    code, text = run("an", "--n", "2", "--coeffs", str(f), "--json", str(rep))
    assert code == 0, text
    out = json.loads(rep.read_text())["output"]
    assert abs(out["eta"] + 1) < 1e-12
    assert out["u"] == pytest.approx([2, -2], abs=1e-12)


def test_an_random():
    code, text = run("an", "--n", "3", "--random", "--samples", "5")
    assert code == 0, text


def test_an_usage():
    assert run("an", "--n", "1", "--random")[0] == 2
    assert run("an", "--n", "3")[0] == 2


def test_an_multiple_root(tmp_path):
    f = tmp_path / "a.json"
    f.write_text(json.dumps([0, 0]))
    assert run("an", "--n", "2", "--coeffs", str(f))[0] == 2


def test_fan_verify():
    code, text = run("fan", "--n", "4", "--verify")
    assert code == 0
    assert text.strip() == "75 cones, 24 maximal, verify: pass"


def test_fan_locate():
    code, text = run("fan", "--n", "3", "--locate", "5,1,1")
    assert code == 0 and "({1},{2,3})" in text


def test_fan_caps():
    assert run("fan", "--n", "9")[0] == 2
    assert run("fan", "--n", "5", "--verify")[0] == 2
    assert run("fan", "--n", "3", "--locate", "1,2")[0] == 2


def test_twist(tmp_path):
    f = tmp_path / "diag2.json"
    f.write_text(json.dumps(diagonal_algebra(2).to_doc()))
    code, text = run("twist", "--algebra", str(f), "--epsilon", "2,3")
    assert code == 0
    doc = json.loads(text)
    # e_i * e_i = eps_i^{-1} e_i
    s = doc["structure"]
    assert Fraction(int(s[0][0][0]["num"]), int(s[0][0][0]["den"])) == Fraction(1, 2)
    assert Fraction(int(s[1][1][1]["num"]), int(s[1][1][1]["den"])) == Fraction(1, 3)


def test_twist_non_invertible(tmp_path):
    f = tmp_path / "diag2.json"
    f.write_text(json.dumps(diagonal_algebra(2).to_doc()))
    assert run("twist", "--algebra", str(f), "--epsilon", "0,1")[0] == 2
    assert run("twist", "--algebra", str(f), "--epsilon", "1")[0] == 2


def test_algebra_command(tmp_path):
    f = tmp_path / "t.json"
    f.write_text(json.dumps(truncated_polynomial_algebra(3).to_doc()))
    code, text = run("algebra", "--algebra", str(f))
    assert code == 0 and "not semisimple" in text


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fforge.cli", "gw", "--r", "1", "--max-degree", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "1 1"
