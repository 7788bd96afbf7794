import numpy as np
import pytest

from qpsl.core import DirichletSpectralData, Potential, l2_norm, l21_norm
from qpsl.dirichlet_inverse import (gl_kernel_system, gl_solve, gl_solve_full, model_problem,
                                    roundtrip_errors, tail_coefficients,
                                    validate_dirichlet_data)
from qpsl.lsq_oracle import gauss_newton_oracle
from qpsl.spectrum import dirichlet_data

from conftest import cos2pi, parabola

n64 = np.arange(1, 65)
MODEL = DirichletSpectralData(np.pi * n64, 2 * np.pi ** 2 * n64 ** 2)
ONE = DirichletSpectralData(np.sqrt((np.pi * n64) ** 2 + 1), 2 * np.pi ** 2 * n64 ** 2)


def test_validate_examples():
    assert validate_dirichlet_data(MODEL).passed
    rho = np.pi * n64.astype(float)
    rho[2] = rho[1]
    rep = validate_dirichlet_data(DirichletSpectralData(rho, MODEL.M))
    assert not rep.passed and rep[2].indices == (3,)
    M = MODEL.M.copy()
    M[0] = -1
    rep = validate_dirichlet_data(DirichletSpectralData(MODEL.rho, M))
    assert rep.failed() == [3] and rep[3].indices == (1,)


def test_validate_nonfinite_and_tail():
    rho = MODEL.rho.copy()
    rho[5] = np.nan
    assert validate_dirichlet_data(DirichletSpectralData(rho, MODEL.M))[1].passed is False
    M = MODEL.M * 3
    rep = validate_dirichlet_data(DirichletSpectralData(MODEL.rho, M))
    assert not rep[4].passed


def test_model_data_give_zero():
    q = gl_solve(MODEL, 513)
    assert np.array_equal(q.samples, np.zeros(513))


def test_constant_closed_form():
    q = gl_solve(ONE, 513)
    assert np.abs(q.samples - 1).max() < 1e-3


def test_cos_round_trip(cos_dirichlet):
    q = gl_solve(cos_dirichlet, 1025)
    assert l2_norm(q.samples - cos2pi(q.x)) < 5e-3
    drho, dM = roundtrip_errors(q, cos_dirichlet)
    assert drho < 1e-4 and dM < 1e-4


def test_kernel_system_invariants(cos_dirichlet):
    sysm = gl_kernel_system(cos_dirichlet, 257)
    assert np.abs(sysm.F - sysm.F.T).max() < 1e-12 * np.abs(sysm.F).max()
    assert sysm.residual < 1e-8
    assert np.isnan(sysm.K[0, 1]) and np.isfinite(sysm.K[1, 0])


def test_convergence_in_N():
    q = Potential.from_function(parabola)
    full = dirichlet_data(q, 64)
    errs = []
    for N in (16, 32, 64):
        sub = DirichletSpectralData(full.rho[:N], full.M[:N])
        errs.append(l2_norm(gl_solve(sub, 1025).samples - q.samples))
    assert errs[0] > errs[1] > errs[2]


def test_matched_model_tail():
    q = Potential.from_function(cos2pi)
    data = dirichlet_data(q, 64)
    mp = model_problem(data, 1025)
    c, A, B = tail_coefficients(data)
    c0, A0, B0 = tail_coefficients(mp.data)
    assert abs(c - c0) < 1e-8 and abs(A - A0) < 1e-6 and abs(B - B0) < 1e-6
    assert mp.q(0.0) == pytest.approx(q(0.0), abs=1e-4)


def test_naive_models_are_worse(cos_dirichlet):
    x = np.linspace(0, 1, 1025)
    err = {m: l2_norm(gl_solve(cos_dirichlet, 1025, m).samples - cos2pi(x))
           for m in ("matched", "constant", "zero")}
    assert err["matched"] < 1e-4 < err["constant"]


def test_constant_model_exact_for_constant_potential():
    res = gl_solve_full(ONE, 513)
    assert res.model.P == 0 and res.model.beta == 0
    assert np.abs(res.q.samples - 1).max() < 1e-9


def test_local_scaling():
    q = Potential.from_function(cos2pi)
    data = dirichlet_data(q, 64)
    base = gl_solve(data, 1025)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(64) / n64
    v /= l21_norm(v)
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4):
        pert = DirichletSpectralData(data.rho + eps * v, data.M)
        ratios.append(l2_norm(gl_solve(pert, 1025).samples - base.samples) / eps)
    assert max(ratios) / min(ratios) < 2


def test_oracle_constant():
    data = DirichletSpectralData(ONE.rho[:16], ONE.M[:16])
    res = gauss_newton_oracle(data, n_nodes=9, grid_size=257)
    assert np.abs(res.q.samples - 1).max() < 1e-6
