"""Least-squares reconstruction of q from Dirichlet data, used as an
independent cross-check of the Gelfand-Levitan solver.

q is parameterized by its values on a coarse uniform grid (cubic-spline
interpolated onto the forward grid) and fitted to the first N pairs
(rho_n, M_n) by Gauss-Newton with a forward-difference Jacobian. Nothing here
touches the integral-equation code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .core import DirichletSpectralData, Potential, SolverError, fit_dirichlet_tail
from .spectrum import dirichlet_data


@dataclass(frozen=True)
class OracleResult:
    q: Potential
    nodes: np.ndarray
    iterations: int
    residual_norm: float


def _potential(nodes, grid_size):
    xs = np.linspace(0.0, 1.0, nodes.size)
    return Potential(CubicSpline(xs, nodes)(np.linspace(0.0, 1.0, grid_size)))


def _residuals(nodes, data, grid_size):
    fd = dirichlet_data(_potential(nodes, grid_size), data.N)
    n = np.arange(1, data.N + 1)
    # eigenvalue misfit and weight misfit on comparable O(1) scales
    return np.concatenate([fd.rho ** 2 - data.rho ** 2,
                           (fd.M - data.M) / (2.0 * np.pi ** 2 * n)])


def gauss_newton_oracle(data: DirichletSpectralData, n_nodes: int = 33, grid_size: int = 513,
                        max_iter: int = 12, step_tol: float = 1e-9, fd_step: float = 1e-6,
                        x0=None) -> OracleResult:
    """Fit grid values of q to (rho_n, M_n); starts from the constant 2 omega."""
    if x0 is None:
        c, _ = fit_dirichlet_tail(data.rho)
        x0 = np.full(n_nodes, c)
    x = np.asarray(x0, dtype=float).copy()
    r = _residuals(x, data, grid_size)
    for it in range(1, max_iter + 1):
        J = np.empty((r.size, x.size))
        for j in range(x.size):
            xp = x.copy()
            xp[j] += fd_step
            J[:, j] = (_residuals(xp, data, grid_size) - r) / fd_step
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        # backtrack if the full step increases the misfit
        for _ in range(20):
            xn = x + step
            try:
                rn = _residuals(xn, data, grid_size)
            except (ArithmeticError, ValueError, RuntimeError):
                rn = None
            if rn is not None and np.linalg.norm(rn) <= np.linalg.norm(r):
                break
            step *= 0.5
        else:
            raise SolverError(f"Gauss-Newton line search failed at iteration {it}")
        x, r = xn, rn
        if np.linalg.norm(step) <= step_tol * max(1.0, np.linalg.norm(x)):
            break
    return OracleResult(_potential(x, grid_size), x, it, float(np.linalg.norm(r)))
