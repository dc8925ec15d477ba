import io
import json
import math
import subprocess
import sys

import pytest

from livsic.cli import emit_csv, execute, main, parse_config
from livsic.errors import SchemaError

PW = {"model": {"type": "paley_wiener", "half_length": math.pi}}


def run(tmp_path, command, cfg, *extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return subprocess.run([sys.executable, "-m", "livsic", command, str(path), *extra],
                          capture_output=True, text=True, timeout=300)


def test_parse_config_defaults():
    cfg = parse_config(PW)
    assert cfg["tolerance"] == {"closed_form": 1e-8, "ode": 1e-5}


def test_parse_config_atomic():
    cfg = parse_config({"model": {"type": "atomic", "atoms": [[-1, [[1]]], [0, [[2]]], [2, [[1]]]]}})
    assert len(cfg["model"]["atoms"]) == 3


def test_schema_error_pointer():
    with pytest.raises(SchemaError) as info:
        parse_config({"model": {"type": "paley_wiener", "half_length": -1}})
    assert info.value.pointer.startswith("/model")


def test_unknown_field_rejected():
    with pytest.raises(SchemaError):
        parse_config({"model": {"type": "free_half_line"}, "colour": "red"})


def test_verify_report(tmp_path):
    proc = run(tmp_path, "verify", PW)
    assert proc.returncode == 0, proc.stderr
    report = json.loads(proc.stdout)
    assert report["verdict"] == "pass"
    fr = next(c for c in report["checks"] if c["name"] == "factorization_residual")
    assert fr["residual"] <= 1e-8


def test_exit_code_usage(tmp_path):
    proc = run(tmp_path, "verify", {"model": {"type": "paley_wiener", "half_length": -1}})
    assert proc.returncode == 2
    assert "/model" in proc.stderr
    assert main(["no-such-command", "x.json"]) == 2


def test_exit_code_failure(tmp_path):
    cfg = {"model": {"type": "paley_wiener", "half_length": math.pi},
           "command_args": {"other": {"type": "paley_wiener", "half_length": math.pi / 2},
                            "expect": "equivalent_with_certificate"}}
    assert run(tmp_path, "equiv", cfg).returncode == 1


def test_equiv_witness():
    cfg = parse_config({**PW, "command_args": {"other": {"type": "paley_wiener", "half_length": math.pi / 2}}})
    report = execute("equiv", cfg)
    cert = report.certificates["equivalence"]
    assert cert["status"] == "not_equivalent"
    assert "point" in cert["witness"]


def test_complex_serialisation():
    report = execute("charfn", parse_config({**PW, "command_args": {"points": [[0, 2]]}})).to_dict()
    v = report["data"]["values"][0]["V"]
    assert v[0][0][0] == pytest.approx(math.sinh(math.pi) / math.sinh(3 * math.pi))
    assert len(v[0][0]) == 2


def test_boundary_csv(tmp_path):
    cfg = {"model": {"type": "toeplitz_slit", "a": 0.5},
           "command_args": {"interval": [-math.sqrt(3), math.sqrt(3)], "count": 50, "expect": "unimodular"}}
    out = tmp_path / "b.csv"
    proc = run(tmp_path, "boundary", cfg, "--csv", str(out))
    assert proc.returncode == 0, proc.stdout
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "x,sigma_max"
    assert len(lines) == 51
    assert abs(float(lines[1].split(",")[1]) - 1) < 1e-3


def test_angular_csv_header(tmp_path):
    out = tmp_path / "a.csv"
    proc = run(tmp_path, "angular", {"model": {"type": "free_half_line"}}, "--csv", str(out))
    assert proc.returncode == 0
    assert out.read_text().splitlines()[0] == "r,quotient"


def test_empty_section_header_only(tmp_path):
    out = tmp_path / "e.csv"
    emit_csv(None, str(out), ["x", "sigma_max"])
    assert out.read_text() == "x,sigma_max\n"


def test_clark_round_trip():
    cfg = parse_config({"model": {"type": "atomic", "atoms": [[-1, [[1]]], [0, [[2]]], [2, [[1]]]]}})
    report = execute("clark", cfg)
    assert report.passed
    assert [round(x, 3) for x in report.data["locations"]] == [-1.0, 0.0, 2.0]


def test_stdin_config(monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps({"model": {"type": "free_half_line"}})))
    assert main(["eval-kernel", "-"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "pass"


def test_module_errors_become_failed_checks():
    cfg = parse_config({"model": {"type": "toeplitz_slit"}, "command_args": {"interval": [1, 3]}})
    report = execute("boundary", cfg)
    assert not report.passed
    assert "DomainViolation" in report.to_dict()["checks"][0]["detail"]["error"]
