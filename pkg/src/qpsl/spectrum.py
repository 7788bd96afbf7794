"""Forward spectra: Dirichlet roots, Weyl residues, sign sequence, quasi-periodic
eigenvalues and the positivity shift.

Roots are computed in lambda = rho^2 so negative eigenvalues (before a shift)
are representable; brackets come from the eigenvalue asymptotics and are
refined all at once with a vectorized Illinois (modified regula falsi) iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .core import (DEFAULT_N, BoundaryParams, BracketError, DirichletSpectralData,
                   Potential, QPEigenvalues, QPSpectralData, SpectralDataError)
from .forward import discriminants_lambda, eval_discriminants, monodromy, trajectory

TANGENCY_TOL = 1e-9
TANGENCY_SLOPE_TOL = 1e-5
SIGN_TOL = 1e-8


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    multiplicity: int = 1


def illinois(f, lo, hi, flo=None, fhi=None, rtol=4e-16, maxiter=200):
    """Vectorized bracketed root refinement (Illinois variant of regula falsi).

    f maps an array of abscissae to an array of values; every bracket
    [lo_i, hi_i] must contain a sign change.
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    fa = f(a) if flo is None else np.array(flo, dtype=float)
    fb = f(b) if fhi is None else np.array(fhi, dtype=float)
    if np.any(fa * fb > 0):
        bad = np.nonzero(fa * fb > 0)[0]
        raise BracketError("no sign change in bracket", index=int(bad[0]) + 1)
    root = np.where(fa == 0, a, b)
    active = (fa != 0) & (fb != 0)
    for _ in range(maxiter):
        if not np.any(active):
            break
        i = np.nonzero(active)[0]
        ai, bi, fai, fbi = a[i], b[i], fa[i], fb[i]
        c = bi - fbi * (bi - ai) / (fbi - fai)
        # fall back to bisection if the secant point leaves the bracket
        lo_i, hi_i = np.minimum(ai, bi), np.maximum(ai, bi)
        bad = ~((c > lo_i) & (c < hi_i))
        c[bad] = 0.5 * (ai[bad] + bi[bad])
        fc = f(c)
        flip = fc * fbi < 0
        # Illinois: halve the value at the retained end
        new_a = np.where(flip, bi, ai)
        new_fa = np.where(flip, fbi, 0.5 * fai)
        a[i], fa[i], b[i], fb[i] = new_a, new_fa, c, fc
        root[i] = c
        done = (fc == 0) | (np.abs(b[i] - a[i]) <= rtol * np.maximum(np.abs(c), 1.0))
        active[i[done]] = False
    return root


def _dirichlet_lambdas(q: Potential, N: int) -> np.ndarray:
    """Dirichlet eigenvalues lambda_1..lambda_N (may be negative)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    c = 2.0 * q.omega
    n = np.arange(1, N + 1)
    edges = (np.pi * (np.arange(N + 1) + 0.5)) ** 2 + c
    edges[0] = min(q.samples.min() - 1.0, (0.5 * np.pi) ** 2 + c)
    S = lambda lam: monodromy(q, lam)[1]
    Se = S(edges)
    # S(1, lambda) has sign (-1)^k just above the k-th eigenvalue
    expect = (-1.0) ** np.arange(N + 1)
    wrong = np.nonzero(Se * expect <= 0)[0]
    if wrong.size:
        k = int(wrong[0])
        raise BracketError("Dirichlet asymptotic bracket failed; refine the grid "
                           "or check the potential", index=max(k, 1))
    lam = illinois(S, edges[:-1], edges[1:], Se[:-1], Se[1:])
    if np.any(np.diff(lam) <= 0):
        raise BracketError("Dirichlet roots not strictly increasing",
                           index=int(np.argmin(np.diff(lam))) + 1)
    return lam


def dirichlet_spectrum(q: Potential, N: int = DEFAULT_N) -> np.ndarray:
    """rho_n = sqrt(lambda_n), n = 1..N; requires lambda_1 > 0."""
    lam = _dirichlet_lambdas(q, N)
    if lam[0] <= 0:
        raise SpectralDataError(f"lowest Dirichlet eigenvalue {lam[0]:.6g} is not positive; "
                                "apply positivity_shift first", index=1)
    return np.sqrt(lam)


def dirichlet_weights(q: Potential, rho) -> DirichletSpectralData:
    """alpha_n = int_0^1 S(x, rho_n)^2 dx by Gauss quadrature along the
    integration trajectory; M_n = 1/alpha_n."""
    rho = np.asarray(rho, dtype=float)
    tr = trajectory(q, rho * rho)
    alpha = np.einsum("g,igl->l", tr.weights, tr.y_nodes ** 2)
    bad = np.nonzero(~(alpha > 0))[0]
    if bad.size:
        raise SpectralDataError("non-positive weight number (spurious root?)",
                                index=int(bad[0]) + 1)
    return DirichletSpectralData(rho, 1.0 / alpha)


def weyl_residue_fd(q: Potential, h: float, rho, rel_step: float = 1e-5) -> np.ndarray:
    """phi(1, rho_n)/rdot(rho_n^2) with rdot = d/dlambda S(1, sqrt(lambda)) taken
    by a Richardson-extrapolated central difference; independent of the
    quadrature in ``dirichlet_weights``."""
    rho = np.asarray(rho, dtype=float)
    lam = rho * rho
    dl = rel_step * np.maximum(lam, 1.0)
    S = lambda l: monodromy(q, l)[1]
    d1 = (S(lam + dl) - S(lam - dl)) / (2 * dl)
    d2 = (S(lam + 2 * dl) - S(lam - 2 * dl)) / (4 * dl)
    rdot = (4 * d1 - d2) / 3
    C, _, _, _ = monodromy(q, lam)
    # at a Dirichlet root phi(1) = C(1) + h S(1) = C(1)
    return C / rdot


def sign_sequence(q: Potential, bp: BoundaryParams, rho, tol: float = SIGN_TOL) -> np.ndarray:
    """sigma_n = sign H(rho_n) with a dead band |H| < tol mapped to 0."""
    _, H, _ = eval_discriminants(q, bp, rho)
    s = np.sign(H).astype(int)
    s[np.abs(H) < tol] = 0
    return s


def _lower_bound(q: Potential, bp: BoundaryParams) -> float:
    # the quadratic form int |y'|^2 + q|y|^2 + h|y(0)|^2 is bounded below by
    # min q - |h| - h^2 (trace inequality), so no eigenvalue lies below this
    return q.samples.min() - abs(bp.h) - bp.h ** 2 - 2.0


def _qp_lambda_roots(q: Potential, bp: BoundaryParams, N: int, per_pi: int = 16):
    """Zeros of Delta(lambda) = d - 2 up to the (2N+1)-th, with multiplicities.

    Returns (roots, multiplicities) sorted ascending. Delta is scanned on a
    grid uniform in mu = sqrt(lambda - 2 omega); simple roots come from sign
    changes, and local extrema of |Delta| are polished to catch close pairs
    and tangencies.
    """
    c = 2.0 * q.omega
    Delta = lambda lam: discriminants_lambda(q, bp, lam)[0] - 2.0
    lam_low = _lower_bound(q, bp)
    lam_top = ((2 * N + 1) * np.pi) ** 2 + c
    neg = np.linspace(lam_low, c, 40, endpoint=False) if lam_low < c else np.empty(0)
    mu = np.linspace(0.0, (2 * N + 1) * np.pi, per_pi * (2 * N + 1) + 1)
    grid = np.concatenate([neg, mu * mu + c])
    D = Delta(grid)
    if np.sign(D[0]) != np.sign(bp.a):
        raise BracketError("discriminant has the wrong sign below the spectrum", index=0)
    roots, mult = [], []
    sc = np.nonzero(D[:-1] * D[1:] < 0)[0]
    exact = np.nonzero(D == 0)[0]
    for i in exact:
        roots.append(grid[i])
        mult.append(1)
    if sc.size:
        r = illinois(Delta, grid[sc], grid[sc + 1], D[sc], D[sc + 1])
        roots.extend(r)
        mult.extend([1] * r.size)
    # interior local minima of |Delta| without a sign change nearby
    absD = np.abs(D)
    cand = np.nonzero((absD[1:-1] <= absD[:-2]) & (absD[1:-1] <= absD[2:]))[0] + 1
    for i in cand:
        if D[i - 1] * D[i] <= 0 or D[i] * D[i + 1] <= 0:
            continue
        s = np.sign(D[i])
        res = minimize_scalar(lambda l: s * Delta(np.array([l]))[0],
                              bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, abs(grid[i]))})
        lm = float(res.x)
        vm = float(Delta(np.array([lm]))[0])
        if abs(vm) < TANGENCY_TOL:
            dl = 1e-6 * max(1.0, abs(lm))
            slope = (Delta(np.array([lm + dl]))[0] - Delta(np.array([lm - dl]))[0]) / (2 * dl)
            # slope in rho: dDelta/drho = 2 rho dDelta/dlambda
            if abs(slope) * 2 * np.sqrt(max(lm, 0.0)) < TANGENCY_SLOPE_TOL or vm == 0:
                roots.append(lm)
                mult.append(2)
                continue
        if vm * s < 0:
            # the extremum crosses zero: two close simple roots
            r = illinois(Delta, np.array([grid[i - 1], lm]), np.array([lm, grid[i + 1]]))
            roots.extend(r)
            mult.extend([1, 1])
    order = np.argsort(roots)
    roots = np.asarray(roots, dtype=float)[order]
    mult = np.asarray(mult, dtype=int)[order]
    keep = roots <= lam_top
    return roots[keep], mult[keep]


def qp_eigenvalue_lambdas(q: Potential, bp: BoundaryParams, N: int) -> np.ndarray:
    """The 2N+1 lowest quasi-periodic eigenvalues lambda (repeated by multiplicity)."""
    roots, mult = _qp_lambda_roots(q, bp, N)
    lam = np.repeat(roots, mult)
    if lam.size < 2 * N + 1:
        raise BracketError(f"found {lam.size} quasi-periodic eigenvalues, expected {2 * N + 1}",
                           index=(lam.size + 1) // 2)
    return lam[:2 * N + 1]


def qp_spectrum(q: Potential, bp: BoundaryParams, N: int = DEFAULT_N) -> QPEigenvalues:
    lam = qp_eigenvalue_lambdas(q, bp, N)
    if lam[0] <= 0:
        raise SpectralDataError(f"lowest quasi-periodic eigenvalue {lam[0]:.6g} is not positive; "
                                "apply positivity_shift first", index=0)
    nu = np.sqrt(lam)
    return QPEigenvalues(nu[0], nu[1::2], nu[2::2])


def qp_brackets(q: Potential, bp: BoundaryParams, N: int, width: float = 1e-10):
    """RootBracket list for the quasi-periodic eigenvalues (in lambda)."""
    roots, mult = _qp_lambda_roots(q, bp, N)
    return [RootBracket(r - width * max(1, abs(r)), r + width * max(1, abs(r)), int(m))
            for r, m in zip(roots, mult)]


def positivity_shift(q: Potential, bp: BoundaryParams):
    """Return (q - c, c) with c = min(0, lambda_min - 1), where lambda_min is the
    lower of the first quasi-periodic and first Dirichlet eigenvalue, so that
    after the shift every eigenvalue is at least 1."""
    lam_qp = qp_eigenvalue_lambdas(q, bp, 1)[0]
    lam_d = _dirichlet_lambdas(q, 1)[0]
    c = min(0.0, min(lam_qp, lam_d) - 1.0)
    return q.shifted(c), c


def forward_data(q: Potential, a: float, h: float, N: int = DEFAULT_N) -> QPSpectralData:
    """Quasi-periodic spectral data (d as a DiscriminantForm, rho_n, sigma_n)."""
    from .discriminant import dform_from_problem
    bp = BoundaryParams(a, h, q.omega)
    rho = dirichlet_spectrum(q, N)
    sigma = sign_sequence(q, bp, rho)
    return QPSpectralData(dform_from_problem(q, bp), rho, sigma)


def dirichlet_data(q: Potential, N: int = DEFAULT_N) -> DirichletSpectralData:
    return dirichlet_weights(q, dirichlet_spectrum(q, N))
