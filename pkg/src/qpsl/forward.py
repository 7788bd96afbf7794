"""Fundamental solutions of -y'' + q y = rho^2 y and the discriminant functions.

The potential is piecewise linear between its samples. Each cell is advanced
with a fourth-order Magnus step: the exponent of a traceless 2x2 matrix has
the closed form cosh(s) I + sinh(s)/s * Omega, so constant potentials are
integrated exactly and the phase error stays small even for rho*h near 1.
Everything is vectorized over the spectral parameter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoundaryParams, IntegrationError, Potential

# a Magnus step with rho*step below this keeps the per-step phase error ~1e-12
MAX_PHASE_STEP = 1.5
_CHUNK = 512


def _expm_traceless(a, b, c):
    """exp([[a, b], [c, -a]]) for arrays a, b, c; returns (m11, m12, m21, m22)."""
    w = a * a + b * c
    s = np.sqrt(np.abs(w))
    ch = np.empty_like(w)
    sh = np.empty_like(w)        # sinh(s)/s or sin(s)/s
    pos = w > 0
    if np.any(pos):
        sp = s[pos]
        ch[pos] = np.cosh(sp)
        sh[pos] = np.sinh(sp) / sp
    neg = ~pos
    if np.any(neg):
        sn = s[neg]
        ch[neg] = np.cos(sn)
        sh[neg] = np.sinc(sn / np.pi)
    small = s < 1e-4
    if np.any(small):
        ws = w[small]
        ch[small] = 1 + ws / 2 + ws * ws / 24
        sh[small] = 1 + ws / 6 + ws * ws / 120
    return ch + a * sh, b * sh, c * sh, ch - a * sh


def _step_matrices(q0, q1, length, lam):
    """Magnus-4 propagators over cells where q goes linearly from q0 to q1.

    q0, q1, length broadcast against lam (cells along axis 0, lam along axis 1).
    With two Gauss points the commutator term reduces to a = -length^2 (q1-q0)/12,
    and the mean term is length*(q_mid - lam).
    """
    a = -(length * length) * (q1 - q0) / 12.0
    b = length
    c = length * (0.5 * (q0 + q1) - lam)
    a, b, c = np.broadcast_arrays(a, b, c)
    return _expm_traceless(np.array(a, dtype=float), np.array(b, dtype=float),
                           np.array(c, dtype=float))


def substeps_for(q: Potential, lam) -> np.ndarray:
    """Number of Magnus steps per grid cell needed for the given lambda values."""
    lam = np.asarray(lam, dtype=float)
    k = np.sqrt(np.maximum(lam - q.samples.min(), 0.0)) * q.step / MAX_PHASE_STEP
    return np.maximum(1, np.ceil(k)).astype(int)


def _refined(samples, sub):
    if sub == 1:
        return samples
    m = samples.size
    xf = np.linspace(0.0, 1.0, (m - 1) * sub + 1)
    return np.interp(xf, np.linspace(0.0, 1.0, m), samples)


def _tree_product(m11, m12, m21, m22):
    """Ordered product E[n-1] ... E[0] along axis 0, by pairwise reduction."""
    while m11.shape[0] > 1:
        n = m11.shape[0]
        k = n // 2
        A = (m11[1:2 * k:2], m12[1:2 * k:2], m21[1:2 * k:2], m22[1:2 * k:2])
        B = (m11[0:2 * k:2], m12[0:2 * k:2], m21[0:2 * k:2], m22[0:2 * k:2])
        p11 = A[0] * B[0] + A[1] * B[2]
        p12 = A[0] * B[1] + A[1] * B[3]
        p21 = A[2] * B[0] + A[3] * B[2]
        p22 = A[2] * B[1] + A[3] * B[3]
        if n % 2:
            p11 = np.concatenate([p11, m11[-1:]])
            p12 = np.concatenate([p12, m12[-1:]])
            p21 = np.concatenate([p21, m21[-1:]])
            p22 = np.concatenate([p22, m22[-1:]])
        m11, m12, m21, m22 = p11, p12, p21, p22
    return m11[0], m12[0], m21[0], m22[0]


def monodromy(q: Potential, lam):
    """Transfer matrix [[C, S], [C', S']] at x=1 for each lambda.

    Returns four arrays C, S, Cp, Sp with the shape of ``lam``.
    """
    lam = np.asarray(lam, dtype=float)
    shape = lam.shape
    lam = lam.ravel()
    out = np.empty((4, lam.size))
    subs = substeps_for(q, lam)
    for sub in np.unique(subs):
        idx = np.nonzero(subs == sub)[0]
        qs = _refined(q.samples, sub)
        h = 1.0 / (qs.size - 1)
        q0, q1 = qs[:-1, None], qs[1:, None]
        for start in range(0, idx.size, _CHUNK):
            sel = idx[start:start + _CHUNK]
            E = _step_matrices(q0, q1, h, lam[None, sel])
            C, S, Cp, Sp = _tree_product(*E)
            out[:, sel] = C, S, Cp, Sp
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state while integrating the basis solutions")
    return tuple(o.reshape(shape) for o in out)


@dataclass(frozen=True)
class BasisAtOne:
    """Values at x=1 of phi (phi(0)=1, phi'(0)=h), S (0, 1) and C (1, 0)."""

    phi: np.ndarray
    phi_prime: np.ndarray
    S: np.ndarray
    S_prime: np.ndarray
    C: np.ndarray
    C_prime: np.ndarray

    @property
    def wronskian(self):
        return self.phi * self.S_prime - self.phi_prime * self.S


def integrate_basis(q: Potential, h: float, rho) -> BasisAtOne:
    rho = np.asarray(rho, dtype=float)
    C, S, Cp, Sp = monodromy(q, rho * rho)
    return BasisAtOne(C + h * S, Cp + h * Sp, S, Sp, C, Cp)


def discriminants_lambda(q: Potential, bp: BoundaryParams, lam):
    """(d, H) as functions of lambda = rho^2 (lambda may be negative)."""
    C, S, Cp, Sp = monodromy(q, lam)
    phi = C + bp.h * S
    return bp.a * phi + Sp / bp.a, bp.a * phi - Sp / bp.a


def eval_discriminants(q: Potential, bp: BoundaryParams, rho):
    """d = a phi(1) + S'(1)/a, H = a phi(1) - S'(1)/a and Delta = d - 2."""
    rho = np.asarray(rho, dtype=float)
    d, H = discriminants_lambda(q, bp, rho * rho)
    return d, H, d - 2.0


def sample_d(q: Potential, bp: BoundaryParams, rho_max: float, num: int = 601):
    """(rho, d(rho)) on a uniform grid of [0, rho_max], for plotting/export."""
    rho = np.linspace(0.0, rho_max, num)
    return rho, eval_discriminants(q, bp, rho)[0]


@dataclass(frozen=True)
class Trajectory:
    """A solution family sampled along [0, 1].

    y, yp: values on the grid, shape (grid_size, L).
    y_nodes: values at Gauss-Legendre nodes inside every cell, shape
    (grid_size-1, G, L); ``weights`` are the matching quadrature weights
    (already scaled by the cell length) so sum(weights * f(y_nodes)) is the
    integral over [0, 1].
    """

    x: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    y_nodes: np.ndarray
    weights: np.ndarray


def trajectory(q: Potential, lam, y0=0.0, yp0=1.0, gauss_points: int = 4) -> Trajectory:
    """Integrate the solutions with y(0)=y0, y'(0)=yp0 for every lambda and keep
    the grid values plus values at Gauss nodes (for quadrature of products)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(substeps_for(q, lam) > 1):
        raise ValueError("grid too coarse for the requested lambda; "
                         "use a finer potential grid for eigenfunction quadrature")
    qs = q.samples
    h = q.step
    m = qs.size
    tau, w = np.polynomial.legendre.leggauss(gauss_points)
    tau = 0.5 * (tau + 1.0)
    weights = 0.5 * w * h
    L = lam.size
    y = np.empty((m, L))
    yp = np.empty((m, L))
    y_nodes = np.empty((m - 1, gauss_points, L))
    dq = qs[1:] - qs[:-1]
    # full-cell propagators, then partial-cell ones for each Gauss node
    E = _step_matrices(qs[:-1, None], qs[1:, None], h, lam[None, :])
    P = [_step_matrices(qs[:-1, None], (qs[:-1] + t * dq)[:, None], t * h, lam[None, :])
         for t in tau]
    u = np.full(L, float(y0))
    v = np.full(L, float(yp0))
    y[0], yp[0] = u, v
    for i in range(m - 1):
        for g in range(gauss_points):
            p = P[g]
            y_nodes[i, g] = p[0][i] * u + p[1][i] * v
        u, v = E[0][i] * u + E[1][i] * v, E[2][i] * u + E[3][i] * v
        y[i + 1], yp[i + 1] = u, v
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yp))):
        raise IntegrationError("non-finite state along the trajectory")
    return Trajectory(q.x, y, yp, y_nodes, weights)
