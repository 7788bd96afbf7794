"""Command-line driver: forward, invert, roundtrip and stability runs.

Exit codes: 0 ok, 1 usage or malformed input, 2 solver failure, 3 validation
or asserted-invariant failure. Thread count for the experiment runners comes
from the QPSL_THREADS environment variable. File formats are described in
``qpsl.formats``; every run also writes a JSON manifest of its arguments so
it can be replayed.

Potentials (``--q``):
  zero                  q = 0
  const:c               q = c
  cos:k[,amp]           q = amp cos(2 pi k x)        (amp defaults to 1)
  poly[:c0,c1,...]      q = c0 + c1 x + c2 x^2 + ... (default x(1-x))
  PATH.json | PATH.csv  a potential document, or a CSV with a "q" column
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import formats
from .core import (DEFAULT_GRID, DEFAULT_N, BoundaryParams, BracketError, IntegrationError,
                   Potential, SolverError, SpectralDataError, StabilityClassParams,
                   l2_norm)
from .forward import sample_d
from .qp_inverse import (forward_residuals, solve_from_eigenvalues, solve_ip1, solve_ip2,
                         validate_qp_data)
from .spectrum import dirichlet_weights, forward_data, qp_spectrum
from .stability import local_stability_experiment, uniform_stability_sweep

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InvariantFailure(Exception):
    """An asserted experiment invariant does not hold."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_potential(spec: str, grid_size: int = DEFAULT_GRID) -> Potential:
    s = spec.strip()
    head, _, arg = s.partition(":")
    try:
        if s == "zero":
            return Potential.constant(0.0, grid_size)
        if head == "const":
            return Potential.constant(float(arg), grid_size)
        if head == "cos":
            parts = [float(v) for v in arg.split(",")]
            k, amp = parts[0], parts[1] if len(parts) > 1 else 1.0
            return Potential.from_function(lambda x: amp * np.cos(2 * np.pi * k * x), grid_size)
        if head == "poly":
            c = [float(v) for v in arg.split(",")] if arg else [0.0, 1.0, -1.0]
            return Potential.from_function(lambda x: np.polynomial.polynomial.polyval(x, c),
                                           grid_size)
    except ValueError as e:
        raise UsageError(f"--q: cannot parse {spec!r} ({e})", "q") from e
    if os.path.isfile(s):
        if s.endswith(".csv"):
            _, cols = formats.read_csv(s)
            if "q" not in cols:
                raise UsageError(f"--q: {s} has no 'q' column", "q")
            return Potential(cols["q"])
        return formats.load(s, "potential")
    raise UsageError(f"--q: unknown potential {spec!r}", "q")


def _eps_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise UsageError(f"--eps: {e}", "eps") from e
    if not vals or any(v < 0 for v in vals):
        raise UsageError("--eps: need a comma-separated list of non-negative numbers", "eps")
    return vals


def _path(args, suffix):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, f"{args.prefix}_{suffix}")


def _check_ah(a, h):
    if a is None or h is None:
        raise UsageError("--a and --h are required", "a" if a is None else "h")
    if a == 0 or not np.isfinite(a) or not np.isfinite(h):
        raise UsageError("--a must be finite and nonzero, --h finite", "a")


def cmd_forward(args, out):
    _check_ah(args.a, args.h)
    q = parse_potential(args.q, args.grid)
    data = forward_data(q, args.a, args.h, args.n)
    report = validate_qp_data(data)
    dd = dirichlet_weights(q, data.rho)
    V = qp_spectrum(q, BoundaryParams(args.a, args.h, q.omega), args.n)
    formats.write_json(_path(args, "data.json"), "qp_spectral_data",
                       {**data.to_dict(), "a": args.a, "h": args.h, "report": report})
    formats.write_json(_path(args, "dirichlet.json"), "dirichlet_spectral_data", dd)
    formats.write_json(_path(args, "eigenvalues.json"), "qp_eigenvalues",
                       {**V.to_dict(), "rho": data.rho, "sigma": data.sigma})
    formats.write_csv(_path(args, "spectrum.csv"), *formats.spectral_table(data, dd.M))
    formats.write_csv(_path(args, "eigenvalues.csv"), *formats.eigenvalue_table(V))
    rho, d = sample_d(q, BoundaryParams(args.a, args.h, q.omega),
                      float(data.rho[-1] + np.pi), args.samples)
    formats.write_csv(_path(args, "d.csv"), ["rho", "d"], np.column_stack([rho, d]).tolist())
    print(f"forward: N={data.N} rho_1={data.rho[0]:.10g} rho_N={data.rho[-1]:.10g} "
          f"nu_0={V.nu0:.10g}", file=out)
    print(report, file=out)
    return EXIT_OK


def _load_invert_input(args):
    try:
        doc = formats.read_document(args.input)
    except OSError as e:
        raise UsageError(f"--input: {e}", "input") from e
    want = "qp_eigenvalues" if args.mode == "eigen" else "qp_spectral_data"
    if doc["kind"] != want:
        raise formats.FormatError(f"mode {args.mode} needs a {want} document, got {doc['kind']}",
                                  "kind")
    return formats.load(args.input, want)


def cmd_invert(args, out):
    payload = _load_invert_input(args)
    if args.mode == "eigen":
        V, rho, sigma = payload
        res = solve_from_eigenvalues(V, rho, sigma, args.grid, args.model)
        data = None
    elif args.mode == "known-ah":
        _check_ah(args.a, args.h)
        data = payload
        res = solve_ip2(data, args.a, args.h, args.grid, model=args.model)
    else:
        data = payload
        res = solve_ip1(data, args.grid, model=args.model)
    doc = res.to_dict()
    doc["mode"] = args.mode
    if data is not None:
        doc["residuals"] = {**res.residuals, **forward_residuals(res, data)}
    formats.write_json(_path(args, "result.json"), "inverse_result", doc)
    formats.write_csv(_path(args, "q.csv"), *formats.potential_table(res.q))
    print(f"invert ({args.mode}): a={res.a:.12g} h={res.h:.12g} omega={res.omega:.12g} "
          f"b={res.b:.12g} ||q||={l2_norm(res.q.samples):.6g}", file=out)
    if res.report is not None:
        print(res.report, file=out)
    return EXIT_OK


def cmd_roundtrip(args, out):
    _check_ah(args.a, args.h)
    q = parse_potential(args.q, args.grid)
    data = forward_data(q, args.a, args.h, args.n)
    res = solve_ip1(data, args.grid, model=args.model)
    err = l2_norm(res.q.samples - q.samples)
    qn = l2_norm(q.samples)
    summary = {"q": args.q, "a": args.a, "h": args.h, "N": args.n, "grid": args.grid,
               "l2_error": err, "sup_error": float(np.abs(res.q.samples - q.samples).max()),
               "relative_l2_error": err / qn if qn > 0 else err,
               "a_error": abs(res.a - args.a), "h_error": abs(res.h - args.h),
               "tol_q": args.tol_q, "tol_a": args.tol_a, "tol_h": args.tol_h}
    header = list(summary)
    formats.write_csv(_path(args, "roundtrip.csv"), header, [[summary[k] for k in header]])
    formats.write_json(_path(args, "roundtrip.json"), "experiment",
                       {"command": "roundtrip", "params": vars_of(args), "summary": summary})
    print(f"roundtrip {args.q} a={args.a} h={args.h}: L2 {err:.3e}, relative "
          f"{summary['relative_l2_error']:.3e}, |da| {summary['a_error']:.3e}, "
          f"|dh| {summary['h_error']:.3e}", file=out)
    failed = [name for name, ok in (("q error <= tol-q", err <= args.tol_q),
                                    ("a error <= tol-a", summary["a_error"] <= args.tol_a),
                                    ("h error <= tol-h", summary["h_error"] <= args.tol_h))
              if not ok]
    if failed:
        raise InvariantFailure("; ".join(failed))
    return EXIT_OK


def vars_of(args):
    return {k: v for k, v in vars(args).items() if k != "func" and not k.startswith("_")}


def _write_table(args, name, table, command, out):
    header, rows = table.to_csv_rows()
    formats.write_csv(_path(args, f"{name}.csv"), header, rows)
    formats.write_json(_path(args, f"{name}.json"), "experiment",
                       {"command": command, "params": vars_of(args), "summary": table.summary,
                        "rows": table.rows})
    print(formats.csv_text(header, rows), end="", file=out)


def cmd_stability(args, out):
    if args.experiment == "local":
        _check_ah(args.a, args.h)
        q = parse_potential(args.q, args.grid)
        table = local_stability_experiment(q, args.a, args.h, _eps_list(args.eps), args.kind,
                                           args.seed, args.n, args.grid, args.index)
        _write_table(args, "local", table, "stability local", out)
        r = table.column("ratio")
        pos = [e for e in table.column("eps") if e > 0]
        checks = [("all ratios finite", np.isfinite(r[table.column("eps") > 0]).all()
                   if pos else True),
                  ("ratios within factor 2 across eps", not np.isfinite(
                      table.summary["ratio_spread"]) or table.summary["ratio_spread"] <= 2.0),
                  ("exact recovery at eps = 0 below 1e-6",
                   table.summary["exact_recovery_l2"] < 1e-6)]
    else:
        _check_ah(args.a, args.h)
        center = forward_data(Potential.constant(2 * args.omega, args.grid), args.a, args.h,
                              args.n)
        params = StabilityClassParams(args.omega_cap, args.delta, args.a, args.h, args.omega,
                                      center.sigma)
        table = uniform_stability_sweep(params, args.pairs, args.seed, args.n, args.grid)
        _write_table(args, "uniform", table, "stability uniform", out)
        r = table.column("ratio")
        checks = [("all ratios finite", np.isfinite(r).all()),
                  ("max/min ratio < 50", table.summary["ratio_spread"] < 50),
                  ("every sample is a class member", all(row["member"] for row in table.rows)),
                  ("every member re-forward-validates",
                   all(row["forward_valid"] for row in table.rows))]
    for k, v in table.summary.items():
        if k != "params":
            print(f"# {k}: {v}", file=out)
    failed = [name for name, ok in checks if not ok]
    if failed:
        raise InvariantFailure("; ".join(failed))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="qpsl", description="Quasi-periodic Sturm-Liouville forward and "
                                         "inverse spectral computations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, prefix):
        sp.add_argument("--n", type=int, default=DEFAULT_N, help="number of indices N")
        sp.add_argument("--grid", type=int, default=DEFAULT_GRID, help="grid size on [0, 1]")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--prefix", default=prefix, help="output file prefix")

    f = sub.add_parser("forward", help="spectral data of (q, a, h)")
    f.add_argument("--q", required=True)
    f.add_argument("--a", type=float, required=True)
    f.add_argument("--h", type=float, required=True)
    f.add_argument("--samples", type=int, default=2001, help="points in the d(rho) curve")
    common(f, "forward")
    f.set_defaults(func=cmd_forward)

    i = sub.add_parser("invert", help="recover q (and a, h) from spectral data")
    i.add_argument("--input", required=True, help="qp_spectral_data or qp_eigenvalues JSON")
    i.add_argument("--mode", choices=["ip1", "known-ah", "eigen"], default="ip1")
    i.add_argument("--a", type=float)
    i.add_argument("--h", type=float)
    i.add_argument("--model", choices=["matched", "constant", "zero"], default="matched")
    common(i, "invert")
    i.set_defaults(func=cmd_invert)

    r = sub.add_parser("roundtrip", help="forward then invert, with error report")
    r.add_argument("--q", required=True)
    r.add_argument("--a", type=float, required=True)
    r.add_argument("--h", type=float, required=True)
    r.add_argument("--model", choices=["matched", "constant", "zero"], default="matched")
    r.add_argument("--tol-q", type=float, default=5e-3)
    r.add_argument("--tol-a", type=float, default=1e-6)
    r.add_argument("--tol-h", type=float, default=1e-3)
    common(r, "roundtrip")
    r.set_defaults(func=cmd_roundtrip)

    s = sub.add_parser("stability", help="stability experiments")
    s.add_argument("experiment", choices=["local", "uniform"])
    s.add_argument("--q", default="zero")
    s.add_argument("--a", type=float, default=2.0)
    s.add_argument("--h", type=float, default=0.0)
    s.add_argument("--eps", default="1e-2,1e-3,1e-4")
    s.add_argument("--kind", choices=["rho", "D", "mixed"], default="rho")
    s.add_argument("--index", type=int, default=None, help="single-coordinate perturbation")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--omega", type=float, default=0.0)
    s.add_argument("--omega-cap", type=float, default=0.5)
    s.add_argument("--delta", type=float, default=0.3)
    s.add_argument("--pairs", type=int, default=20)
    common(s, "stability")
    s.set_defaults(func=cmd_stability)
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.n < 1 or args.grid < 3:
            raise UsageError("--n must be >= 1 and --grid >= 3", "n" if args.n < 1 else "grid")
        return args.func(args, out)
    except (UsageError, formats.FormatError) as e:
        field = f" [field: {e.field}]" if getattr(e, "field", None) else ""
        print(f"usage error: {e}{field}", file=err)
        return EXIT_USAGE
    except SpectralDataError as e:
        print(f"validation error: {e}", file=err)
        report = getattr(e, "report", None)
        if report is not None:
            print(report, file=err)
        return EXIT_VALIDATION
    except InvariantFailure as e:
        print(f"invariant failed: {e}", file=err)
        return EXIT_VALIDATION
    except (SolverError, IntegrationError, BracketError, ArithmeticError, RuntimeError,
            ValueError, np.linalg.LinAlgError) as e:
        print(f"solver error: {type(e).__name__}: {e}", file=err)
        return EXIT_SOLVER


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
