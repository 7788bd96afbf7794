"""JSON documents and CSV tables, written atomically.

JSON documents carry ``"format_version": 1`` and a ``"kind"`` tag:

  potential               {grid_size, samples}
  qp_spectral_data        {dform: {a_plus, b, D: {grid_size, samples}}, rho, sigma,
                           kappa_tail_norm}
  dirichlet_spectral_data {rho, M, alpha, eta_tail_norm}
  qp_eigenvalues          {nu0, nu_minus, nu_plus, theta, rho, sigma}
  inverse_result          {q, a, h, omega, b, a_plus, M, report, residuals}
  experiment              {command, params, summary, rows}

Arrays are in index order (n = 1, 2, ...). Floats are written with the
shortest representation that reads back bit-exactly; NaN and Infinity use
the JavaScript literals accepted by Python's json module. CSV tables have a
header row and floats formatted with 17 significant digits.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from .core import (DirichletSpectralData, Potential, QPEigenvalues, QPSpectralData,
                   StabilityClassParams)

FORMAT_VERSION = 1

_LOADERS = {
    "potential": Potential.from_dict,
    "qp_spectral_data": QPSpectralData.from_dict,
    "dirichlet_spectral_data": DirichletSpectralData.from_dict,
    "stability_class": StabilityClassParams.from_dict,
}


class FormatError(ValueError):
    """A document is malformed; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def atomic_write(path, text: str):
    """Write text to path via a temporary file in the same directory and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(kind: str, payload) -> str:
    doc = {"format_version": FORMAT_VERSION, "kind": kind}
    doc.update(_plain(payload))
    return json.dumps(doc, indent=1) + "\n"


def write_json(path, kind: str, payload):
    atomic_write(path, dumps(kind, payload))


def read_document(path) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top level must be an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {doc.get('format_version')!r}",
                          "format_version")
    if "kind" not in doc:
        raise FormatError(f"{path}: missing kind", "kind")
    return doc


def _field(doc, key):
    if key not in doc:
        raise FormatError(f"missing field {key!r}", key)
    return doc[key]


def load_eigenvalue_input(doc: dict):
    """(QPEigenvalues, rho, sigma) from a qp_eigenvalues document."""
    theta = doc.get("theta")
    V = QPEigenvalues(_field(doc, "nu0"), _field(doc, "nu_minus"), _field(doc, "nu_plus"),
                      float("nan") if theta is None else theta)
    return V, np.asarray(_field(doc, "rho"), dtype=float), np.asarray(_field(doc, "sigma"), dtype=int)


def load(path, kind: str | None = None):
    """Read a document and build the matching object.

    qp_eigenvalues gives (QPEigenvalues, rho, sigma); inverse_result gives a
    dict whose "q" entry is a Potential; other kinds give their dataclass, or
    the raw dict for experiment documents.
    """
    doc = read_document(path)
    k = doc["kind"]
    if kind is not None and k != kind:
        raise FormatError(f"{path}: expected kind {kind!r}, found {k!r}", "kind")
    try:
        if k in _LOADERS:
            return _LOADERS[k](doc)
        if k == "qp_eigenvalues":
            return load_eigenvalue_input(doc)
        if k == "inverse_result":
            out = dict(doc)
            out["q"] = Potential.from_dict(_field(doc, "q"))
            return out
        if k == "experiment":
            return doc
    except KeyError as e:
        raise FormatError(f"{path}: missing field {e.args[0]!r}", e.args[0]) from e
    except (TypeError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"{path}: bad {k} document ({e})") from e
    raise FormatError(f"{path}: unknown kind {k!r}", "kind")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (np.integer, np.bool_)):
        return str(v.item())
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows):
    atomic_write(path, csv_text(header, rows))


def read_csv(path):
    """Header and columns (numeric columns as float arrays, others as lists)."""
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        body = list(r)
    cols = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in body]
        try:
            cols[name] = np.array([float(v) for v in raw])
        except ValueError:
            cols[name] = raw
    return header, cols


def spectral_table(data: QPSpectralData, M=None):
    """(n, rho_n, M_n, sigma_n) rows; M may be omitted (written as nan)."""
    M = np.full(data.N, np.nan) if M is None else np.asarray(M, dtype=float)
    return (["n", "rho", "M", "sigma"],
            [[n, float(r), float(m), int(s)]
             for n, r, m, s in zip(range(1, data.N + 1), data.rho, M, data.sigma)])


def eigenvalue_table(V: QPEigenvalues):
    """(n, nu_n^-, nu_n^+) rows; n = 0 carries nu_0 in both columns."""
    rows = [[0, V.nu0, V.nu0]]
    rows += [[n, float(a), float(b)] for n, a, b in
             zip(range(1, V.nu_minus.size + 1), V.nu_minus, V.nu_plus)]
    return ["n", "nu_minus", "nu_plus"], rows


def sampled_table(f, rho_max: float, count: int = 2001, name: str = "d"):
    """(rho, f(rho)) on a uniform grid of [0, rho_max]."""
    rho = np.linspace(0.0, rho_max, count)
    vals = np.asarray(f(rho), dtype=float)
    return ["rho", name], [[float(r), float(v)] for r, v in zip(rho, vals)]


def potential_table(q: Potential):
    return ["x", "q"], [[float(x), float(v)] for x, v in zip(q.x, q.samples)]
