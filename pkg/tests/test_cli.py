import io
import json

import numpy as np
import pytest

from qpsl import cli, formats
from qpsl.core import DiscriminantForm, Potential, SolverError, l2_norm


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def fwd_zero(tmp_path_factory):
    d = tmp_path_factory.mktemp("zero")
    code, out, _ = run("forward", "--q", "zero", "--a", 2, "--h", 0, "--n", 8, "--out", d)
    assert code == 0
    return d


def test_forward_zero(fwd_zero):
    _, cols = formats.read_csv(fwd_zero / "forward_spectrum.csv")
    assert np.allclose(cols["rho"], np.pi * np.arange(1, 9), atol=1e-12)
    assert np.array_equal(cols["sigma"], (-1.0) ** np.arange(1, 9))
    _, d = formats.read_csv(fwd_zero / "forward_d.csv")
    assert np.abs(d["d"] - 2.5 * np.cos(d["rho"])).max() < 1e-9
    for name in ("data", "dirichlet", "eigenvalues"):
        formats.load(fwd_zero / f"forward_{name}.json")


def test_forward_constant(tmp_path):
    assert run("forward", "--q", "const:1", "--a", 2, "--h", 0, "--n", 4, "--out", tmp_path)[0] == 0
    _, cols = formats.read_csv(tmp_path / "forward_spectrum.csv")
    assert cols["rho"][0] == pytest.approx(3.296908, abs=1e-6)


def test_forward_cos_report(tmp_path):
    code, out, _ = run("forward", "--q", "cos:1", "--a", -2, "--h", 1, "--n", 16, "--out", tmp_path)
    assert code == 0
    doc = json.loads((tmp_path / "forward_data.json").read_text())
    assert doc["report"]["passed"] is True
    assert all(c["passed"] for c in doc["report"]["conditions"])
    for suffix in ("spectrum.csv", "eigenvalues.csv", "d.csv"):
        assert (tmp_path / f"forward_{suffix}").exists()


def test_invert_zero(fwd_zero, tmp_path):
    code, out, _ = run("invert", "--input", fwd_zero / "forward_data.json", "--out", tmp_path)
    assert code == 0
    res = formats.load(tmp_path / "invert_result.json", "inverse_result")
    assert res["a"] == 2 and abs(res["h"]) < 1e-9 and l2_norm(res["q"].samples) < 1e-6
    assert res["report"]["passed"]
    assert "rho_l21" in res["residuals"]


def test_invert_known_ah_perturbed(fwd_zero, tmp_path):
    data = formats.load(fwd_zero / "forward_data.json")
    t = np.linspace(0, 1, data.dform.grid_size)
    D = data.dform.D + 1e-3 * np.sin(2 * np.pi * t)
    pert = data.replace(dform=DiscriminantForm(data.dform.a_plus, data.dform.b, D))
    formats.write_json(tmp_path / "p.json", "qp_spectral_data", pert)
    code, _, _ = run("invert", "--input", tmp_path / "p.json", "--mode", "known-ah", "--a", 2,
                     "--h", 0, "--out", tmp_path)
    assert code == 0
    res = json.loads((tmp_path / "invert_result.json").read_text())
    assert res["mode"] == "known-ah" and res["a"] == 2 and res["h"] == 0
    assert 0 < l2_norm(res["q"]["samples"]) < 0.1


def test_invert_eigen_constant(tmp_path):
    assert run("forward", "--q", "const:1", "--a", 2, "--h", 0, "--out", tmp_path)[0] == 0
    code, _, _ = run("invert", "--input", tmp_path / "forward_eigenvalues.json", "--mode", "eigen",
                     "--out", tmp_path)
    assert code == 0
    res = formats.load(tmp_path / "invert_result.json")
    assert np.abs(res["q"].samples - 1).max() < 1e-2


def test_roundtrip_poly(tmp_path):
    code, out, _ = run("roundtrip", "--q", "poly", "--a", 0.5, "--h", -1, "--out", tmp_path)
    assert code == 0 and "relative" in out
    _, cols = formats.read_csv(tmp_path / "roundtrip_roundtrip.csv")
    assert cols["relative_l2_error"][0] < 1e-3


def test_roundtrip_invariant_failure(tmp_path):
    code, _, err = run("roundtrip", "--q", "zero", "--a", 2, "--h", 0, "--n", 16,
                       "--tol-h", -1, "--out", tmp_path)
    assert code == 3 and "h error" in err


def test_stability_local(tmp_path):
    code, out, _ = run("stability", "local", "--q", "zero", "--a", 2, "--eps", "1e-2,1e-3,1e-4",
                       "--out", tmp_path)
    assert code == 0
    header, cols = formats.read_csv(tmp_path / "stability_local.csv")
    assert len(cols["eps"]) == 3 and np.all(np.isfinite(cols["ratio"]))
    manifest = formats.load(tmp_path / "stability_local.json")
    assert manifest["params"]["seed"] == 0 and len(manifest["rows"]) == 3


def test_stability_uniform_replay(tmp_path):
    args = ["stability", "uniform", "--omega-cap", 0.5, "--delta", 0.3, "--pairs", 2,
            "--seed", 7]
    assert run(*args, "--out", tmp_path / "a")[0] == 0
    assert run(*args, "--out", tmp_path / "a", "--prefix", "again")[0] == 0
    first = (tmp_path / "a" / "stability_uniform.csv").read_bytes()
    second = (tmp_path / "a" / "again_uniform.csv").read_bytes()
    assert first == second and first.count(b"\n") == 3


def test_usage_errors(tmp_path):
    assert run("forward", "--q", "zero", "--a", 2)[0] == 1
    code, _, err = run("forward", "--q", "wat", "--a", 2, "--h", 0, "--out", tmp_path)
    assert code == 1 and "field: q" in err
    assert run("forward", "--q", "zero", "--a", 0, "--h", 0, "--out", tmp_path)[0] == 1
    assert run("nonsense")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"format_version": 1, "kind": "qp_spectral_data"}))
    code, _, err = run("invert", "--input", bad, "--out", tmp_path)
    assert code == 1 and "field: dform" in err
    assert run("stability", "local", "--eps", "x", "--out", tmp_path)[0] == 1


def test_validation_exit(fwd_zero, tmp_path):
    data = formats.load(fwd_zero / "forward_data.json")
    sig = data.sigma.copy()
    sig[4] = 0
    formats.write_json(tmp_path / "v.json", "qp_spectral_data", data.replace(sigma=sig))
    code, _, err = run("invert", "--input", tmp_path / "v.json", "--out", tmp_path)
    assert code == 3 and "(4)" in err and "FAIL" in err.upper()


def test_solver_exit(fwd_zero, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SolverError("forced")
    monkeypatch.setattr(cli, "solve_ip1", boom)
    code, _, err = run("invert", "--input", fwd_zero / "forward_data.json", "--out", tmp_path)
    assert code == 2 and "forced" in err


def test_potential_specs(tmp_path):
    assert cli.parse_potential("cos:2,3", 5)(0.25) == pytest.approx(-3.0)
    assert cli.parse_potential("poly:1,2", 3)(0.5) == pytest.approx(2.0)
    formats.write_csv(tmp_path / "q.csv", ["x", "q"], [[0.0, 1.0], [0.5, 2.0], [1.0, 3.0]])
    assert cli.parse_potential(str(tmp_path / "q.csv"))(0.5) == pytest.approx(2.0)
    formats.write_json(tmp_path / "q.json", "potential", Potential([0.0, 1.0, 2.0]))
    assert cli.parse_potential(str(tmp_path / "q.json"))(0.5) == pytest.approx(1.0)


def test_module_entry():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "qpsl", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "forward" in r.stdout
