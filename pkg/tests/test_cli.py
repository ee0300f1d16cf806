import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from subricci.cli import main

HEIS_TOML = """\
[model]
name = "heis_file"
coords = ["x", "y", "z"]
v1 = ["1", "0", "-y/2"]
v2 = ["0", "1", "x/2"]
box = [[-1, 1], [-1, 1], [-1, 1]]

[run]
seed = 3
samples = 4
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_invariants_reference(capsys):
    code, out, _ = run(capsys, "invariants", "--model", "heisenberg", "--point", "0,0,0",
                       "--covector", "1,0,1", "--no-timestamp")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1 and "timestamp" not in doc
    inv = doc["invariants"]
    assert inv["h0"] == pytest.approx(-1) and inv["H"] == pytest.approx(0.5)
    assert inv["kappa"] == pytest.approx(0, abs=1e-14)
    assert inv["ric"] == pytest.approx(1) and inv["r"] == pytest.approx(0, abs=1e-14)
    assert doc["structure_constants"]["a12_0"] == pytest.approx(-1)


def test_timestamp_present_by_default(capsys):
    _, out, _ = run(capsys, "invariants", "--point", "0,0,0", "--covector", "1,0,1")
    assert "timestamp" in json.loads(out)


def test_missing_model_file(capsys):
    code, _, err = run(capsys, "invariants", "--model", "no/such/model.toml", "--point", "0,0,0",
                       "--covector", "1,0,1")
    assert code == 3 and "not found" in err


def test_zero_energy_is_domain_error(capsys):
    code, _, err = run(capsys, "invariants", "--point", "0,0,0", "--covector", "0,0,1")
    assert code == 2 and err.startswith("error:")


def test_point_outside_hopf_chart(capsys):
    code, _, _ = run(capsys, "invariants", "--model", "hopf", "--point", "0.9,0.9,0.9", "--covector", "1,0,0")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["invariants", "--point", "0,0", "--covector", "1,0,1"],
    ["invariants", "--point", "a,b,c", "--covector", "1,0,1"],
    ["invariants", "--covector", "1,0,1"],
    ["invariants", "--model", "nonexistent_builtin_name", "--point", "0,0,0", "--covector", "1,0,1"],
    ["verify", "--suite", "bogus"],
    ["frobnicate"],
])
def test_config_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 3


def test_bad_toml(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[model\ncoords = 1")
    assert run(capsys, "verify", "--config", str(bad))[0] == 3
    unknown = tmp_path / "unknown.toml"
    unknown.write_text(HEIS_TOML + "bogus = 1\n")
    assert run(capsys, "verify", "--config", str(unknown))[0] == 3
    typo = tmp_path / "typo.toml"
    typo.write_text(HEIS_TOML.replace('"-y/2"', '"-y/"'))
    code, _, err = run(capsys, "mcp-check", "--model", str(typo))
    assert code == 3 and "offset" in err
    neg = tmp_path / "neg.toml"
    neg.write_text(HEIS_TOML.replace("samples = 4", "samples = 0"))
    assert run(capsys, "mcp-check", "--config", str(neg))[0] == 3


def test_noncontact_model(tmp_path, capsys):
    flat = tmp_path / "flat.toml"
    flat.write_text('[model]\ncoords = ["x", "y", "z"]\nv1 = ["1", "0", "0"]\nv2 = ["0", "1", "0"]\n')
    code, _, err = run(capsys, "mcp-check", "--model", str(flat))
    assert code == 2 and "not contact" in err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_geodesic_zero_time(capsys):
    code, out, _ = run(capsys, "geodesic", "--point", "0,0,0", "--covector", "1,0,1", "--T", "0")
    rows = _rows(out)
    assert code == 0 and len(rows) == 1
    assert list(rows[0]) == ["t", "q1", "q2", "q3", "p1", "p2", "p3", "H", "h0"]


def test_geodesic_straight_line(capsys):
    code, out, _ = run(capsys, "geodesic", "--point", "0.2,-0.4,0.1", "--covector", "0.6,0.8,0",
                       "--T", "1", "--samples", "10")
    assert code == 0
    data = np.array([[float(v) for v in r.values()] for r in _rows(out)])
    t = data[:, 0]
    assert np.allclose(data[:, 1], 0.2 + 0.6 * t, atol=1e-8)
    assert np.allclose(data[:, 2], -0.4 + 0.8 * t, atol=1e-8)
    assert np.allclose(data[:, 3], 0.1 + t * (0.8 * 0.2 + 0.6 * 0.4) / 2, atol=1e-8)


def test_geodesic_energy_column(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "geodesic", "--model", "hopf", "--point", "0.1,0.2,-0.1",
                     "--covector", "0.3,-0.2,0.5", "--out", str(out))
    assert code == 0
    H = np.array([float(r["H"]) for r in _rows(out.read_text())])
    assert np.max(np.abs(H - H[0])) <= 1e-10


def test_mcp_check_heisenberg(capsys):
    code, out, _ = run(capsys, "mcp-check", "--model", "heisenberg", "--samples", "25", "--no-timestamp")
    doc = json.loads(out)
    assert code == 0 and doc["all_pass"]
    assert doc["summary"] == {"pass": 25, "fail": 0, "skipped": 0}
    assert all(c["r"] == 0.0 and c["pass"] for c in doc["checks"])


def test_mcp_check_noninvariant_skips(capsys):
    code, out, _ = run(capsys, "mcp-check", "--model", "noninvariant_perturbation", "--samples", "3",
                       "--no-timestamp")
    doc = json.loads(out)
    assert code == 0
    assert {c["status"] for c in doc["checks"]} == {"skipped"}
    assert all("reason" in c for c in doc["checks"])


def test_tolerance_override_can_fail(tmp_path, capsys):
    # an impossible Loewner tolerance turns every geodesic into a hard failure
    cfg = tmp_path / "strict.toml"
    cfg.write_text(HEIS_TOML.replace("samples = 4", "samples = 2\ntolerances = { loewner_tol = 1e-300 }"))
    code, out, _ = run(capsys, "mcp-check", "--model", "hopf", "--config", str(cfg), "--no-timestamp")
    doc = json.loads(out)
    assert code == 4 and doc["summary"]["fail"] >= 1


def test_config_file_determinism(tmp_path, capsys):
    cfg = tmp_path / "heis.toml"
    cfg.write_text(HEIS_TOML)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "mcp-check", "--config", str(cfg), "--no-timestamp", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["model"] == "heis_file" and doc["samples"] == 4 and doc["seed"] == 3


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "heis.toml"
    cfg.write_text(HEIS_TOML)
    _, out, _ = run(capsys, "mcp-check", "--config", str(cfg), "--samples", "1", "--seed", "9", "--no-timestamp")
    doc = json.loads(out)
    assert doc["samples"] == 1 and doc["seed"] == 9


def test_verify_heisenberg(capsys):
    code, out, _ = run(capsys, "verify", "--model", "heisenberg", "--no-timestamp")
    doc = json.loads(out)
    assert code == 0 and doc["all_pass"]
    assert set(doc["suites"]) == {"contact", "lift", "invariants", "flow", "riccati", "mcp", "density"}
    assert all(s["pass"] for s in doc["suites"].values())


def test_verify_riccati_suite(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "riccati", "--no-timestamp")
    res = json.loads(out)["suites"]["riccati"]["residuals"]
    assert code == 0 and res["Riccati vs closed form on [0, 0.9]"]["value"] <= 1e-6


def test_verify_low_jet_order(capsys):
    code, _, err = run(capsys, "verify", "--jet-order", "4")
    assert code == 3 and "jet order" in err and "Traceback" not in err


def test_hopf_kappa_discrepancy_is_reported(capsys):
    code, out, _ = run(capsys, "verify", "--model", "hopf", "--suite", "invariants", "--no-timestamp")
    info = json.loads(out)["suites"]["invariants"]["info"]
    assert code == 0
    assert info["kappa_claimed"] == 2.0
    assert info["kappa_discrepancy"] == pytest.approx(info["kappa_mean"] - 2.0)


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "subricci.cli", "invariants", "--point", "0,0,0",
                           "--covector", "1,0,1", "--no-timestamp"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["schema"] == 1
