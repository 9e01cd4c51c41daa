import csv
import json
import subprocess
import sys

import pytest

from ellpvi.cli import main


def run(tmp_path, *args, name="report.json"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_identities_exit_zero(tmp_path):
    code, out = run(tmp_path, "--command", "identities", "--seed", "42", "--tol", "1e-9", "--tau-re", "0", "--tau-im",
                    "1", "--samples", "20")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and doc["checks"][0]["name"] == "theta.oracle"
    assert all("residual" in c and "worst_point" in c for c in doc["checks"])


def test_crosscheck_pvi_writes_trajectory(tmp_path):
    code, out = run(tmp_path, "--command", "crosscheck-pvi")
    assert code == 0
    rows = list(csv.reader(open(out.with_suffix(".trajectory.csv"))))
    assert rows[0] == ["tau_re", "tau_im", "u_re", "u_im", "du_dtau_re", "du_dtau_im", "X_re", "X_im", "t_re", "t_im",
                       "pvi_residual"]
    assert len(rows) > 3
    mantissa = rows[1][0].split("e")[0].lstrip("-").replace(".", "")
    assert len(mantissa) == 17


def test_negative_imaginary_tau_is_usage_error(capsys):
    assert main(["--command", "identities", "--tau-re", "0", "--tau-im", "-1"]) == 2
    assert "tau-im" in capsys.readouterr().err


def test_config_file_and_validation(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "chain-check", "sites": 1, "tau-re": 0.1, "tau-im": 1.1}))
    code, out = run(tmp_path, "--config", str(cfg))
    assert code == 0
    assert json.loads(out.read_text())["config"]["sites"] == 1
    cfg.write_text(json.dumps({"command": "chain-check", "colour": 3}))
    assert main(["--config", str(cfg)]) == 2
    assert "colour" in capsys.readouterr().err
    assert main(["--command", "lax-check", "--tol", "-1"]) == 2


def test_reports_are_byte_identical(tmp_path):
    _, a = run(tmp_path, "--command", "reflection-check", "--format", "csv", name="a.csv")
    _, b = run(tmp_path, "--command", "reflection-check", "--format", "csv", name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_failing_check_gives_nonzero_exit(tmp_path):
    code, out = run(tmp_path, "--command", "poisson-check", "--tol", "1e-30")
    assert code == 1
    assert not json.loads(out.read_text())["passed"]


@pytest.mark.parametrize("flow", ["CI", "EPVI", "ZVG", "NAZVG", "ET"])
def test_integrate_flows(tmp_path, flow):
    code, out = run(tmp_path, "--command", "integrate", "--flow", flow, "--s-end", "0.5")
    assert code == 0
    header = next(csv.reader(open(out.with_suffix(".trajectory.csv"))))
    assert header[:3] == ["s", "tau_re", "tau_im"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ellpvi", "--command", "chain-check", "--sites", "1"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0
    assert json.loads(r.stdout)["passed"]
    assert "chain-check: pass" in r.stderr
