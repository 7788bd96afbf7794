"""Entire-function machinery for d(rho): the sine-transform representation,
its extraction from a forward problem, limit extraction of a_plus and b,
the product for r(lambda) = S(1, sqrt(lambda)) and the reconstruction of
Delta(rho) from quasi-periodic eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (BoundaryParams, DiscriminantForm, Potential, QPEigenvalues,
                   SpectralDataError, fit_dirichlet_tail)
from .forward import eval_discriminants

_TAIL_TERMS = 4000


def _one_minus_sinc_over_z2(z):
    """(1 - sin z / z) / z^2, accurate near 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small] ** 2
    out[small] = 1 / 6 - zs / 120 + zs * zs / 5040
    zl = z[~small]
    out[~small] = (1 - np.sinc(zl / np.pi)) / (zl * zl)
    return out


def sine_weights(m: int, omega, over_omega: bool = False) -> np.ndarray:
    """Matrix W with W[i, j] = int_0^1 e_j(t) sin(omega_i t) dt, e_j the hat
    functions of the uniform m-point grid, so W @ D is the exact sine transform
    of the piecewise-linear interpolant of D. With ``over_omega`` the rows are
    divided by omega_i (finite at omega = 0).
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))[:, None]
    h = 1.0 / (m - 1)
    t = np.linspace(0.0, 1.0, m)[None, :]
    s2 = np.sinc(w * h / (2 * np.pi)) ** 2
    f0 = _one_minus_sinc_over_z2(w * h)
    W = np.empty((w.shape[0], m))
    if over_omega:
        W[:, 1:-1] = h * s2 * t[:, 1:-1] * np.sinc(w * t[:, 1:-1] / np.pi)
        W[:, :1] = h * h * f0
        W[:, -1:] = 0.5 * h * s2 * np.sinc(w / np.pi) - np.cos(w) * h * h * f0
    else:
        W[:, 1:-1] = h * s2 * np.sin(w * t[:, 1:-1])
        W[:, :1] = w * h * h * f0
        W[:, -1:] = 0.5 * h * s2 * np.sin(w) - np.cos(w) * w * h * h * f0
    return W


def sine_transform(D, omega) -> np.ndarray:
    """int_0^1 D(t) sin(omega t) dt for the piecewise-linear D."""
    D = np.asarray(D, dtype=float)
    omega = np.asarray(omega, dtype=float)
    out = np.concatenate([sine_weights(D.size, chunk) @ D
                          for chunk in np.array_split(omega.ravel(), max(1, omega.size // 2048))])
    return out.reshape(omega.shape)


def eval_dform(f: DiscriminantForm, rho):
    """2 a_plus cos(rho) + b sin(rho)/rho + (1/rho) int_0^1 D(t) sin(rho t) dt."""
    rho = np.asarray(rho, dtype=float)
    flat = rho.ravel()
    pw = np.concatenate([sine_weights(f.D.size, chunk, over_omega=True) @ f.D
                         for chunk in np.array_split(flat, max(1, flat.size // 2048))])
    d = 2 * f.a_plus * np.cos(flat) + f.b * np.sinc(flat / np.pi) + pw
    return d.reshape(rho.shape) if rho.ndim else float(d[0])


def _pw_term(D, rho):
    flat = rho.ravel()
    return np.concatenate([sine_weights(D.size, chunk, over_omega=True) @ D
                           for chunk in np.array_split(flat, max(1, flat.size // 2048))])


def dform_difference(f: DiscriminantForm, g: DiscriminantForm, rho, rho_g):
    """f(rho) - g(rho_g) without cancelling the leading cosine terms.

    cos(rho) - cos(rho_g) goes through the product formula, which keeps full
    relative accuracy when rho_g - rho is tiny and d is flat there.
    """
    rho = np.asarray(rho, dtype=float).ravel()
    rho_g = np.asarray(rho_g, dtype=float).ravel()
    dcos = -2.0 * np.sin(0.5 * (rho + rho_g)) * np.sin(0.5 * (rho - rho_g))
    lead = 2 * f.a_plus * dcos + 2 * (f.a_plus - g.a_plus) * np.cos(rho_g)
    mid = f.b * np.sinc(rho / np.pi) - g.b * np.sinc(rho_g / np.pi)
    return lead + mid + _pw_term(f.D, rho) - _pw_term(g.D, rho_g)


def dform_from_problem(q: Potential, bp: BoundaryParams, grid_size: int | None = None) -> DiscriminantForm:
    """Representation of d(rho) for the problem (q, a, h).

    The sine coefficients int D(t) sin(pi k t) dt = pi k (d(pi k) - 2 a_plus (-1)^k)
    are sampled for k = 1..m-1 and matched exactly by a piecewise-linear D on
    the m-point grid (the value D(0) is fixed by linear extrapolation).
    """
    m = grid_size or q.grid_size
    bp = BoundaryParams(bp.a, bp.h, q.omega)
    k = np.arange(1, m)
    wk = np.pi * k
    d, _, _ = eval_discriminants(q, bp, wk)
    coef = wk * (d - 2 * bp.a_plus * (-1.0) ** k)
    W = sine_weights(m, wk)
    # eliminate D_0 = 2 D_1 - D_2
    A = W[:, 1:].copy()
    A[:, 0] += 2 * W[:, 0]
    A[:, 1] -= W[:, 0]
    Dint = np.linalg.solve(A, coef)
    D = np.concatenate([[2 * Dint[0] - Dint[1]], Dint])
    return DiscriminantForm(bp.a_plus, bp.b, D)


def _limit_fit(x, y, powers, last):
    m = max(last, min(len(y), len(powers) + 2))
    X = np.column_stack([x[-m:] ** -p if p else np.ones(m) for p in powers])
    coef, *_ = np.linalg.lstsq(X, y[-m:], rcond=None)
    resid = y[-m:] - X @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def extract_scalar_limits(d_even, d_quarter, richardson: bool = True, tol: float = 1e-2):
    """a_plus = lim d(2 pi n)/2 and b = lim rho d(rho) at rho = 2 pi n + pi/2.

    d_even[n-1] = d(2 pi n), d_quarter[n-1] = d(2 pi n + pi/2), n = 1..N.
    Without Richardson the last samples are returned (error O(1/N) for b);
    with it, the last quarter is fitted by a polynomial in 1/rho and the
    constant term is taken. A fit residual above ``tol`` (relative) signals
    that the samples do not settle to a limit.
    """
    d_even = np.asarray(d_even, dtype=float)
    d_quarter = np.asarray(d_quarter, dtype=float)
    N = d_even.size
    n = np.arange(1, N + 1, dtype=float)
    re = 2 * np.pi * n
    rq = re + np.pi / 2
    ap_seq = 0.5 * d_even
    b_seq = rq * d_quarter
    if not richardson or N < 4:
        return float(ap_seq[-1]), float(b_seq[-1])
    last = max(N // 4, 4)
    ap, ra = _limit_fit(re, ap_seq, (0, 2, 4), last)
    b, rb = _limit_fit(rq, b_seq, (0, 1, 2, 3), last)
    if ra > tol * max(1.0, abs(ap)) or rb > tol * max(1.0, abs(b)):
        raise SpectralDataError("samples of d do not converge to the limits defining a_plus, b",
                                condition=1)
    return ap, b


def sample_limits(d, N: int):
    """Evaluate a callable d at the sampling points used by ``extract_scalar_limits``."""
    n = np.arange(1, N + 1)
    return d(2 * np.pi * n), d(2 * np.pi * n + np.pi / 2)


def _sin_over(z2):
    """sin(z)/z as a function of z^2 (analytic continuation for z^2 < 0)."""
    z2 = np.asarray(z2, dtype=float)
    out = np.empty_like(z2)
    pos = z2 >= 0
    out[pos] = np.sinc(np.sqrt(z2[pos]) / np.pi)
    s = np.sqrt(-z2[~pos])
    out[~pos] = np.where(s > 0, np.sinh(s) / np.where(s > 0, s, 1), 1.0)
    return out


@dataclass(frozen=True)
class RProduct:
    """r(lambda) = S(1, sqrt(lambda)) rebuilt from its zeros.

    r = (sin z / z) * prod_{n<=N} (lambda_n - lambda)/(mu_n - lambda) * tail,
    z^2 = lambda - c, mu_n = (pi n)^2 + c. The comparison function sin z / z has
    zeros mu_n (the eigenvalues of a constant potential 2 omega = c), so the
    factors tend to 1 like 1/n^4; the tail correction uses the fitted next
    term A/n^2 of lambda_n - mu_n.
    """

    lam: np.ndarray
    c: float
    A: float

    @property
    def N(self):
        return self.lam.size

    def _mu(self, n):
        return (np.pi * n) ** 2 + self.c

    def _tail_log(self, lam):
        N = self.N
        n = np.arange(N + 1, N + 1 + _TAIL_TERMS, dtype=float)[None, :]
        den = self._mu(n) - lam[:, None]
        ok = lam < self._mu(N + 0.5)
        out = np.zeros(lam.shape)
        if self.A != 0 and np.any(ok):
            out[ok] = np.sum(np.log1p(self.A / n ** 2 / den[ok]), axis=1)
        return out

    def __call__(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        n = np.arange(1, self.N + 1, dtype=float)
        z2 = lam - self.c
        out = np.empty(lam.shape)
        z = np.sqrt(np.maximum(z2, 0.0))
        k = np.rint(z / np.pi).astype(int)
        near = (z2 > 0) & (k >= 1) & (k <= self.N)
        mu = self._mu(n)
        for i in range(lam.size):
            if near[i]:
                kk = k[i]
                # sin z / (z (mu_k - lambda)) without the removable singularity
                lead = (-1.0) ** (kk + 1) * np.sinc((z[i] - np.pi * kk) / np.pi) / (z[i] * (np.pi * kk + z[i]))
                num = self.lam - lam[i]
                den = mu - lam[i]
                num_k = num[kk - 1]
                num = np.delete(num, kk - 1)
                den = np.delete(den, kk - 1)
                out[i] = lead * num_k * np.prod(num / den)
            else:
                out[i] = _sin_over(z2[i:i + 1])[0] * np.prod((self.lam - lam[i]) / (mu - lam[i]))
        return out * np.exp(self._tail_log(lam))

    def derivative_at_roots(self):
        """rdot(lambda_k) for every prefix root (analytic, no differencing)."""
        n = np.arange(1, self.N + 1, dtype=float)
        mu = self._mu(n)
        out = np.empty(self.N)
        z2 = self.lam - self.c
        for i in range(self.N):
            lk = self.lam[i]
            kk = i + 1
            if z2[i] > 0:
                z = np.sqrt(z2[i])
                lead = (-1.0) ** (kk + 1) * np.sinc((z - np.pi * kk) / np.pi) / (z * (np.pi * kk + z))
            else:
                lead = _sin_over(z2[i:i + 1])[0] / (mu[i] - lk)
            num = np.delete(self.lam - lk, i)
            den = np.delete(mu - lk, i)
            out[i] = -lead * np.prod(num / den)
        return out * np.exp(self._tail_log(self.lam))

    def derivative(self, lam):
        """rdot(lambda) via the logarithmic derivative of the product (lambda
        away from the roots); at a root the closed form of
        ``derivative_at_roots`` is used."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.empty(lam.shape)
        roots = self.derivative_at_roots()
        n = np.arange(1, self.N + 1, dtype=float)
        mu = self._mu(n)
        r = self(lam)
        for i, l in enumerate(lam):
            j = np.nonzero(np.abs(self.lam - l) <= 1e-13 * max(1.0, abs(l)))[0]
            if j.size:
                out[i] = roots[j[0]]
                continue
            z2 = l - self.c
            if abs(z2) < 1e-8:
                dlog_c = -1.0 / 6
            elif z2 > 0:
                z = np.sqrt(z2)
                dlog_c = (1 / np.tan(z) - 1 / z) / (2 * z)
            else:
                s = np.sqrt(-z2)
                dlog_c = -(1 / np.tanh(s) - 1 / s) / (2 * s)
            dlog = dlog_c + np.sum(1 / (mu - l) - 1 / (self.lam - l))
            if self.A != 0 and l < self._mu(self.N + 0.5):
                m = np.arange(self.N + 1, self.N + 1 + _TAIL_TERMS, dtype=float)
                mt = self._mu(m)
                dlog += np.sum(1 / (mt - l) - 1 / (mt + self.A / m ** 2 - l))
            out[i] = r[i] * dlog
        return out


def r_product(rho, omega: float | None = None, tail_correction: bool = True) -> RProduct:
    """Product representation of r(lambda) = S(1, sqrt(lambda)) from its roots rho_n.

    omega (if given) fixes the shift c = 2 omega of the comparison function;
    otherwise c and the next coefficient are fitted on the last quarter.
    """
    rho = np.asarray(rho, dtype=float)
    lam = rho * rho
    if np.any(np.diff(lam) <= 0):
        i = int(np.argmin(np.diff(lam))) + 1
        raise SpectralDataError("Dirichlet roots must be simple and increasing", condition=2, index=i)
    c, A = fit_dirichlet_tail(rho)
    if omega is not None:
        c = 2.0 * omega
    return RProduct(lam, c, A if tail_correction else 0.0)


@dataclass(frozen=True)
class DeltaProduct:
    """Delta(rho) rebuilt from the quasi-periodic eigenvalues.

    Delta = (2 a_plus cos w - 2) * prod (nu^2 - rho^2)/(m^2 - rho^2),
    w^2 = rho^2 - gamma, where m runs over the zeros (2 pi n +- theta)^2 + gamma
    (and theta^2 + gamma) of the comparison function; gamma = b / a_plus.
    """

    a_plus: float
    theta: float
    gamma: float
    nu2: np.ndarray          # data zeros (squared), including nu_0
    w_model: np.ndarray      # model zeros in the w variable

    @property
    def b(self):
        return self.a_plus * self.gamma

    def Delta(self, rho):
        rho = np.asarray(rho, dtype=float)
        flat = np.atleast_1d(rho).ravel()
        m2 = self.w_model ** 2 + self.gamma
        out = np.empty(flat.shape)
        for i, r in enumerate(flat):
            w2 = r * r - self.gamma
            num = self.nu2 - r * r
            den = m2 - r * r
            if w2 > 0:
                w = np.sqrt(w2)
                k = int(np.argmin(np.abs(self.w_model - w)))
                wk = self.w_model[k]
                # (2 a_plus cos w - 2)/(wk^2 - w^2) in product form
                lead = (2 * self.a_plus * np.sin(0.5 * (w + wk)) * np.sinc((w - wk) / (2 * np.pi))
                        / (w + wk))
                out[i] = lead * num[k] * np.prod(np.delete(num, k) / np.delete(den, k))
            else:
                lead = 2 * self.a_plus * np.cosh(np.sqrt(-w2)) - 2
                out[i] = lead * np.prod(num / den)
        return out.reshape(rho.shape) if rho.ndim else float(out[0])

    def d(self, rho):
        return self.Delta(rho) + 2.0

    __call__ = d


def delta_from_eigenvalues(V: QPEigenvalues, a_plus: float, theta_tol: float = 1e-4) -> DeltaProduct:
    """Reconstruct Delta and d = Delta + 2 from nu_0, nu_n^-, nu_n^+ (n <= N)."""
    a_plus = float(a_plus)
    if not abs(a_plus) > 1:
        raise SpectralDataError("|a_plus| must exceed 1", condition=1)
    theta = float(np.arccos(1.0 / a_plus))
    if np.isfinite(V.theta) and abs(V.theta - theta) > theta_tol:
        raise SpectralDataError(f"a_plus gives theta={theta:.8f} but the eigenvalue asymptotics "
                                f"give {V.theta:.8f}")
    N = V.N
    n = np.arange(1, N + 1, dtype=float)
    g = 0.5 * (V.nu_plus ** 2 + V.nu_minus ** 2 - (2 * np.pi * n + theta) ** 2
               - (2 * np.pi * n - theta) ** 2)
    m = max(N // 4, min(N, 4))
    if m >= 3:
        X = np.column_stack([np.ones(m), n[-m:] ** -2])
        gamma = float(np.linalg.lstsq(X, g[-m:], rcond=None)[0][0])
    else:
        gamma = float(g[-1])
    w_model = np.concatenate([[theta], 2 * np.pi * n - theta, 2 * np.pi * n + theta])
    nu2 = np.concatenate([[V.nu0 ** 2], V.nu_minus ** 2, V.nu_plus ** 2])
    return DeltaProduct(a_plus, theta, gamma, nu2, w_model)
