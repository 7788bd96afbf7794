import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpsl import formats
from qpsl.core import DirichletSpectralData, Potential, QPEigenvalues, StabilityClassParams


def test_qp_data_round_trip(tmp_path, zero_data):
    p = tmp_path / "d.json"
    formats.write_json(p, "qp_spectral_data", zero_data)
    back = formats.load(p, "qp_spectral_data")
    assert np.array_equal(back.rho, zero_data.rho)
    assert np.array_equal(back.dform.D, zero_data.dform.D)
    assert np.array_equal(back.sigma, zero_data.sigma)
    assert json.loads(p.read_text())["format_version"] == 1


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=3,
                max_size=20))
def test_float_bit_exact(vals):
    text = formats.dumps("potential", Potential(vals))
    doc = json.loads(text)
    assert np.array_equal(np.array(doc["samples"]), np.array(vals))


def test_other_kinds(tmp_path):
    dd = DirichletSpectralData([1.0, 2.0], [3.0, 4.0])
    formats.write_json(tmp_path / "a.json", "dirichlet_spectral_data", dd)
    assert np.array_equal(formats.load(tmp_path / "a.json").M, dd.M)
    V = QPEigenvalues(0.5, [5.0], [7.0], float("nan"))
    formats.write_json(tmp_path / "b.json", "qp_eigenvalues", {**V.to_dict(), "rho": [3.0],
                                                               "sigma": [-1]})
    V2, rho, sigma = formats.load(tmp_path / "b.json")
    assert V2.nu_plus[0] == 7.0 and rho[0] == 3.0 and sigma[0] == -1
    p = StabilityClassParams(0.5, 0.3, 2, 0, 0, [-1, 1])
    formats.write_json(tmp_path / "c.json", "stability_class", p)
    assert formats.load(tmp_path / "c.json").Omega == 0.5


def test_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(formats.FormatError):
        formats.load(bad)
    bad.write_text(json.dumps({"format_version": 2, "kind": "potential"}))
    with pytest.raises(formats.FormatError) as e:
        formats.load(bad)
    assert e.value.field == "format_version"
    bad.write_text(json.dumps({"format_version": 1, "kind": "qp_spectral_data", "rho": [1]}))
    with pytest.raises(formats.FormatError) as e:
        formats.load(bad)
    assert e.value.field == "dform"
    formats.write_json(bad, "potential", Potential([0.0, 1.0, 2.0]))
    with pytest.raises(formats.FormatError):
        formats.load(bad, "qp_spectral_data")


def test_csv(tmp_path):
    p = tmp_path / "t.csv"
    formats.write_csv(p, ["n", "x", "s"], [[1, 0.1, "a"], [2, 1 / 3, "b"]])
    text = p.read_text().splitlines()
    assert text[0] == "n,x,s" and text[2] == "2,0.33333333333333331,b"
    header, cols = formats.read_csv(p)
    assert cols["x"][1] == 1 / 3 and cols["s"] == ["a", "b"]


def test_atomic_write_leaves_no_temp(tmp_path):
    formats.atomic_write(tmp_path / "x.txt", "hello")
    assert os.listdir(tmp_path) == ["x.txt"]


def test_tables(zero_data):
    header, rows = formats.spectral_table(zero_data)
    assert header == ["n", "rho", "M", "sigma"] and rows[0][3] == -1
    header, rows = formats.sampled_table(np.cos, 1.0, 5)
    assert rows[-1] == [1.0, np.cos(1.0)]
