"""Reconstruction of (q, a, h) from quasi-periodic spectral data, and the
validators for solvability and for membership in the uniform-stability class.

Pipeline (``solve_ip1``):
  1. a_plus, b from d; sign(a_minus) from the tail of sigma; a from a_plus
  2. omega from the Dirichlet asymptotics, h = (b - 2 a_plus omega)/a
  3. phi(1, rho_n) = (d(rho_n) + sigma_n sqrt(d(rho_n)^2 - 4)) / (2a)
  4. r(lambda) = S(1, sqrt(lambda)) from its zeros
  5. M_n = phi(1, rho_n) / rdot(rho_n^2)
  6. q from {rho_n, M_n} by the Gelfand-Levitan equation
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (DEFAULT_GRID, ConditionResult, DirichletSpectralData, DiscriminantForm,
                   Potential, QPEigenvalues, QPSpectralData, SpectralDataError,
                   StabilityClassParams, ValidationReport, a_from_aplus, estimate_omega,
                   kappa_remainders, l21_norm)
from .discriminant import (delta_from_eigenvalues, eval_dform, extract_scalar_limits,
                           r_product, sample_limits)
from .dirichlet_inverse import GLResult, gl_solve_full

EQ_TOL = 1e-8        # |d| = 2 equality case
SIGN_TOL = 1e-8      # dead band of H = sigma sqrt(d^2 - 4)


def tail_length(N: int) -> int:
    """Number of trailing indices on which the eventual sign alternation is required."""
    return min(N, max(8, N // 4))


def _alternation(sigma):
    """(s, first offending index or None): sigma_n (-1)^n = s on the tail."""
    sigma = np.asarray(sigma)
    N = sigma.size
    if N == 0:
        return 0, 1
    n = np.arange(1, N + 1)
    t = tail_length(N)
    prod = sigma[-t:] * (-1) ** n[-t:]
    s = int(prod[-1])
    bad = np.nonzero(prod != s)[0] if s != 0 else np.arange(t)
    if bad.size:
        return s, int(n[-t:][bad[-1]])
    return s, None


@dataclass(frozen=True)
class ScalarParams:
    a: float
    h: float
    omega: float
    b: float
    a_plus: float
    sign_a_minus: int


def _scalars(a_plus, b, rho, sigma) -> ScalarParams:
    s, bad = _alternation(sigma)
    if bad is not None:
        raise SpectralDataError("sign sequence does not alternate with a fixed sign on the tail",
                                step=1, condition=5, index=bad)
    try:
        a = a_from_aplus(a_plus, s)
    except SpectralDataError as e:
        raise SpectralDataError(str(e), step=1, condition=1) from None
    omega = estimate_omega(rho)
    h = (b - 2 * a_plus * omega) / a
    return ScalarParams(a, h, omega, b, a_plus, s)


def recover_scalars(data: QPSpectralData | None = None, *, d=None, rho=None, sigma=None) -> ScalarParams:
    """a, h, omega, b from the data.

    With a QPSpectralData the explicit a_plus and b of its DiscriminantForm are
    used. Alternatively pass a callable ``d`` plus ``rho`` and ``sigma``; then
    a_plus and b are extracted as limits of d along 2 pi n and 2 pi n + pi/2.
    """
    if data is not None:
        return _scalars(data.dform.a_plus, data.dform.b, data.rho, data.sigma)
    if d is None or rho is None or sigma is None:
        raise TypeError("pass either data or d, rho and sigma")
    rho = np.asarray(rho, dtype=float)
    a_plus, b = extract_scalar_limits(*sample_limits(d, max(rho.size, 16)))
    return _scalars(a_plus, b, rho, sigma)


def _condition_violations(d_rho, sigma, sign_a, tol=EQ_TOL):
    n = np.arange(1, d_rho.size + 1)
    margin = (-1.0) ** n * sign_a * d_rho
    bad3 = n[margin < 2 - tol]
    eq = np.abs(np.abs(d_rho) - 2) <= tol
    zero = np.asarray(sigma) == 0
    bad4 = n[(zero & ~eq) | (~zero & (np.abs(d_rho ** 2 - 4) < SIGN_TOL ** 2))]
    return bad3, bad4


def phi_values(d_rho, sigma, a: float, tol: float = EQ_TOL) -> np.ndarray:
    """phi(1, rho_n) = (d + sigma sqrt(d^2 - 4)) / (2a)."""
    d_rho = np.asarray(d_rho, dtype=float)
    sigma = np.asarray(sigma)
    bad3, bad4 = _condition_violations(d_rho, sigma, np.sign(a), tol)
    if bad3.size:
        raise SpectralDataError("(-1)^n sign(a) d(rho_n) < 2", step=3, condition=3, index=int(bad3[0]))
    if bad4.size:
        raise SpectralDataError("sigma_n = 0 must coincide with |d(rho_n)| = 2",
                                step=3, condition=4, index=int(bad4[0]))
    root = np.sqrt(np.maximum(d_rho * d_rho - 4, 0.0))
    return (d_rho + sigma * root) / (2 * a)


def weyl_sequence(phi, rho, omega: float | None = None, check: bool = True) -> np.ndarray:
    """M_n = phi(1, rho_n) / rdot(rho_n^2)."""
    R = r_product(rho, omega)
    M = np.asarray(phi, dtype=float) / R.derivative_at_roots()
    if check:
        bad = np.nonzero(~(M > 0))[0]
        if bad.size:
            raise SpectralDataError("Weyl residue is not positive", step=5, condition=3,
                                    index=int(bad[0]) + 1)
    return M


def validate_qp_data(data: QPSpectralData, tol: float = EQ_TOL) -> ValidationReport:
    """Per-condition check of the characterization (never raises)."""
    f, rho, sigma = data.dform, data.rho, data.sigma
    N = rho.size
    n = np.arange(1, N + 1)
    out = []
    ok1 = bool(np.all(np.isfinite(f.D)) and np.isfinite(f.b) and abs(f.a_plus) > 1)
    out.append(ConditionResult(1, "d has the sine-transform form with |a_plus| > 1", ok1, (),
                               f"a_plus={f.a_plus:.6g}, b={f.b:.6g}, ||D||={f.D_norm:.3g}"))
    fin = np.isfinite(rho)
    bad = set((n[~fin]).tolist()) | set((n[1:][np.diff(rho) <= 0]).tolist()) | set(n[rho <= 0].tolist())
    detail = ""
    if N >= 4 and fin.all():
        omega = estimate_omega(rho)
        rem = rho - np.pi * n - omega / (np.pi * n)
        t = max(N // 4, 2)
        bad |= set((n[-t:][np.abs(rem[-t:]) > 0.25]).tolist())
        detail = f"omega={omega:.6g}, ||kappa||_l2={np.linalg.norm(kappa_remainders(rho, omega)):.3g}"
    out.append(ConditionResult(2, "rho_n real, increasing, with the sine-type asymptotics",
                               not bad, tuple(sorted(bad)), detail))
    name3 = "(-1)^n sign(a) d(rho_n) >= 2"
    name4 = "sigma_n = 0 exactly where |d(rho_n)| = 2"
    if ok1 and fin.all():
        d_rho = eval_dform(f, rho)
        bad3, bad4 = _condition_violations(d_rho, sigma, np.sign(f.a_plus), tol)
        out.append(ConditionResult(3, name3, bad3.size == 0, tuple(bad3.tolist())))
        out.append(ConditionResult(4, name4, bad4.size == 0, tuple(bad4.tolist())))
    else:
        # d(rho_n) is meaningless without a valid form and finite rho
        why = "needs condition 1 and finite rho"
        out.append(ConditionResult(3, name3, False, (), why, evaluated=False))
        out.append(ConditionResult(4, name4, False, (), why, evaluated=False))
    s, b5 = _alternation(sigma)
    out.append(ConditionResult(5, "sigma_n = (-1)^n sign(a_minus) eventually", b5 is None,
                               () if b5 is None else (b5,),
                               f"tail length {tail_length(N)}, sign(a_minus)={s}"))
    return ValidationReport(tuple(out))


@dataclass(frozen=True)
class InverseResult:
    q: Potential
    a: float
    h: float
    omega: float
    b: float
    a_plus: float
    phi: np.ndarray
    M: np.ndarray
    gl: GLResult
    report: ValidationReport | None = None
    residuals: dict = field(default_factory=dict)

    def to_dict(self):
        return {"q": self.q.to_dict(), "a": self.a, "h": self.h, "omega": self.omega,
                "b": self.b, "a_plus": self.a_plus, "M": self.M.tolist(),
                "report": None if self.report is None else self.report.to_dict(),
                "residuals": self.residuals}


def _require_valid(data, tol):
    report = validate_qp_data(data, tol)
    if not report.passed:
        c = report[report.failed()[0]]
        err = SpectralDataError(f"spectral data rejected: {c.name}", step=0, condition=c.number,
                                index=c.indices[0] if c.indices else None)
        err.report = report
        raise err
    return report


def _finish(sc: ScalarParams, d_rho, rho, sigma, grid_size, model, report, tol):
    phi = phi_values(d_rho, sigma, sc.a, tol)
    M = weyl_sequence(phi, rho)
    gl = gl_solve_full(DirichletSpectralData(rho, M), grid_size, model)
    H = sigma * np.sqrt(np.maximum(d_rho ** 2 - 4, 0))
    res = {"gl_relative_residual": gl.residual,
           "root_identity": float(np.abs(H ** 2 - (d_rho ** 2 - 4)).max()),
           "min_weyl_ratio": float(np.min(M / (2 * (np.pi * np.arange(1, rho.size + 1)) ** 2)))}
    return InverseResult(gl.q, sc.a, sc.h, sc.omega, sc.b, sc.a_plus, phi, M, gl, report, res)


def solve_ip1(data: QPSpectralData, grid_size: int | None = None, validate: bool = True,
              model: str = "matched", tol: float = EQ_TOL) -> InverseResult:
    """Recover (q, a, h) from (d, {rho_n}, {sigma_n})."""
    report = _require_valid(data, tol) if validate else None
    grid_size = grid_size or DEFAULT_GRID
    sc = recover_scalars(data)
    d_rho = eval_dform(data.dform, data.rho)
    return _finish(sc, d_rho, data.rho, data.sigma, grid_size, model, report, tol)


def solve_ip2(data: QPSpectralData, a: float, h: float, grid_size: int | None = None,
              validate: bool = True, model: str = "matched", tol: float = EQ_TOL) -> InverseResult:
    """Recover q when a and h are known a priori; d is taken with the data's D."""
    report = _require_valid(data, tol) if validate else None
    grid_size = grid_size or DEFAULT_GRID
    a_plus = 0.5 * (a + 1 / a)
    omega = estimate_omega(data.rho)
    b = a * h + 2 * a_plus * omega
    f = DiscriminantForm(a_plus, b, data.dform.D)
    sc = ScalarParams(float(a), float(h), omega, b, a_plus, int(np.sign(a - 1 / a)))
    d_rho = eval_dform(f, data.rho)
    return _finish(sc, d_rho, data.rho, data.sigma, grid_size, model, report, tol)


def solve_from_eigenvalues(V: QPEigenvalues, rho, sigma, grid_size: int | None = None,
                           model: str = "matched", tol: float = EQ_TOL) -> InverseResult:
    """Recover (q, a, h) from the quasi-periodic eigenvalues plus {rho_n}, {sigma_n}.

    theta comes from the eigenvalue asymptotics, a_plus = 1/cos(theta), and d
    is rebuilt from the eigenvalues by the product formula; the rest is the
    standard pipeline.
    """
    rho = np.asarray(rho, dtype=float)
    sigma = np.asarray(sigma)
    theta = V.theta
    if not (0 < theta < np.pi) or abs(theta - np.pi / 2) < 1e-12:
        raise SpectralDataError(f"theta={theta} outside (0, pi) minus pi/2", step=1, condition=1)
    a_plus = 1.0 / np.cos(theta)
    P = delta_from_eigenvalues(V, a_plus)
    sc = _scalars(a_plus, P.b, rho, sigma)
    d_rho = P.d(rho)
    return _finish(sc, d_rho, rho, sigma, grid_size or DEFAULT_GRID, model, None, tol)


def membership_S(data: QPSpectralData, params: StabilityClassParams,
                 tol: float = EQ_TOL) -> ValidationReport:
    """Check every clause of the uniform-stability class definition.

    d is evaluated with the class's fixed a_plus and b = a h + 2 a_plus omega
    and the data's D.
    """
    bp = params.boundary
    rho, sigma = data.rho, data.sigma
    N = rho.size
    n = np.arange(1, N + 1)
    out = []
    ps = params.sigma[:N]
    same = (abs(data.dform.a_plus - bp.a_plus) <= 1e-10 * abs(bp.a_plus)
            and ps.size == N and np.array_equal(ps, sigma))
    out.append(ConditionResult(0, "a_plus and sigma match the class parameters", bool(same)))
    Dn = data.dform.D_norm
    out.append(ConditionResult(1, "||D|| <= Omega", Dn <= params.Omega, (), f"||D||={Dn:.6g}"))
    kap = np.linalg.norm(kappa_remainders(rho, params.omega))
    out.append(ConditionResult(2, "||kappa|| <= Omega", kap <= params.Omega, (), f"||kappa||={kap:.6g}"))
    out.append(ConditionResult(3, "rho_1 >= 1", bool(N and rho[0] >= 1)))
    gaps = np.diff(rho)
    bad = n[1:][gaps < params.delta]
    out.append(ConditionResult(4, "rho_{n+1} - rho_n >= delta", bad.size == 0, tuple(bad.tolist()),
                               f"min gap {gaps.min() if gaps.size else np.inf:.6g}"))
    f = DiscriminantForm(bp.a_plus, bp.b, data.dform.D)
    margin = (-1.0) ** n * np.sign(bp.a) * eval_dform(f, rho)
    nz = sigma != 0
    bad = n[(nz & (margin < 2 + params.delta)) | (~nz & (np.abs(margin - 2) > tol))]
    out.append(ConditionResult(5, "margin >= 2 + delta (sigma != 0), = 2 (sigma = 0)", bad.size == 0,
                               tuple(bad.tolist()), f"min margin {margin[nz].min() if nz.any() else np.nan:.6g}"))
    return ValidationReport(tuple(out))


def forward_residuals(result: InverseResult, data: QPSpectralData):
    """Forward-solve the recovered (q, a, h) and compare with the input data."""
    from .spectrum import forward_data
    fd = forward_data(result.q, result.a, result.h, data.N)
    return {"rho_l21": l21_norm(fd.rho - data.rho),
            "d_at_roots_max": float(np.abs(eval_dform(fd.dform, data.rho)
                                           - eval_dform(data.dform, data.rho)).max()),
            "sigma_mismatch": int(np.sum(fd.sigma != data.sigma)),
            "D_l2": float(np.sqrt(np.trapezoid((fd.dform.D - np.interp(
                np.linspace(0, 1, fd.dform.grid_size), np.linspace(0, 1, data.dform.grid_size),
                data.dform.D)) ** 2, dx=1 / (fd.dform.grid_size - 1))))}
