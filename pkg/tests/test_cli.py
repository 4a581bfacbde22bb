import json
import subprocess
import sys

import pytest

from hopflab import cli, mesh


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_selftest_passes(capsys):
    code, out, err = run(["selftest"], capsys)
    assert code == 0
    assert all(json.loads(out)["result"]["cases"].values())
    assert "[PASS]" in err and "[FAIL]" not in err


def test_hopf_report(tmp_path, capsys):
    out = tmp_path / "h.json"
    code, _, _ = run(["hopf", "--map", "i∘hopf", "--level", "2", "--out", str(out)], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    assert abs(rep["result"]["report"]["value"] - 1) < 0.06
    assert rep["result"]["linking_oracle"] == 1
    for key in ("command", "config", "seed", "version", "mesh_checksums"):
        assert key in rep
    assert rep["mesh_checksums"]["sphere"] == mesh.gen_sphere(3, 2).checksum()


def test_reports_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["dilation", "--map", "hopf", "--k", "1", "2", "--samples", "500", "--seed", "3",
                    "--threads", "4" if p.name == "a.json" else "1", "--out", str(p)], capsys)[0] == 0
    a, b = (p.read_bytes() for p in paths)
    # only the recorded thread cap may differ, and it is not part of the report
    assert a == b


def test_dilation_k3(capsys):
    code, out, _ = run(["dilation", "--map", "hopf", "--k", "3", "--samples", "2000"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["reports"][0]["sup_estimate"] <= 1e-8


def test_unknown_map_lists_registry(capsys):
    code, _, err = run(["hopf", "--map", "nope", "--level", "1"], capsys)
    assert code == 1
    assert "i∘hopf" in err


def test_missing_file(capsys):
    code, _, err = run(["mesh", "--validate", "/nonexistent/m.json"], capsys)
    assert code == 1 and "no such file" in err


def test_mesh_generate_and_validate(tmp_path, capsys):
    path = tmp_path / "m.json"
    code, out, _ = run(["mesh", "--dim", "2", "--level", "2", "--out", str(path)], capsys)
    assert code == 0 and json.loads(out)["result"]["euler_characteristic"] == 2
    code, out, _ = run(["mesh", "--validate", str(path)], capsys)
    assert code == 0 and json.loads(out)["result"]["valid"]


def test_invalid_mesh_file(tmp_path, capsys):
    obj = json.loads(mesh.mesh_to_json(mesh.gen_sphere(2, 0)))
    obj["orientations"]["2"][0] *= -1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(obj))
    code, _, err = run(["mesh", "--validate", str(path)], capsys)
    assert code == 1 and "orientation" in err


def test_numerical_failure_exit_code(capsys):
    # the equatorial map misses the poles, so the linking oracle refuses the default value
    code, _, err = run(["hopf", "--map", "i∘equatorial", "--level", "1"], capsys)
    assert code == 2 and "numerical failure" in err


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"samples": 300, "k": [1]}))
    code, out, _ = run(["dilation", "--config", str(cfg)], capsys)
    assert code == 0
    assert json.loads(out)["config"]["samples"] == 300
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["dilation", "--config", str(cfg)], capsys)[0] == 1


def test_construct_csv(tmp_path, capsys):
    csv_path = tmp_path / "s.csv"
    code, out, _ = run(["construct", "--delta-list", "0.2,0.1", "--samples", "1000", "--csv", str(csv_path)], capsys)
    assert code == 0
    assert [r["delta"] for r in json.loads(out)["result"]["rows"]] == [0.2, 0.1]
    assert csv_path.exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hopflab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()


@pytest.mark.parametrize("argv", [["audit", "--homotopy", "const-time:i∘hopf", "--hopf-level", "1",
                                   "--samples", "500"]])
def test_audit_control(argv, capsys):
    code, out, _ = run(argv, capsys)
    assert code == 0
    rep = json.loads(out)["result"]["report"]
    assert rep["measured_ratio"] == "undefined"
    assert set(rep["mesh_checksums"]) == {"product", "slice"}
