import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from qpsl.core import BoundaryParams, Potential
from qpsl.forward import (eval_discriminants, integrate_basis, monodromy, sample_d,
                          trajectory)

ZERO = Potential.constant(0.0)
ONE = Potential.constant(1.0)


def ivp_basis(q: Potential, lam):
    """Reference (C, S, C', S') at x=1 from an adaptive RK integration of the
    same piecewise-linear q."""
    def rhs(x, y):
        v = np.interp(x, q.x, q.samples) - lam
        return [y[1], v * y[0], y[3], v * y[2]]
    sol = solve_ivp(rhs, (0, 1), [1, 0, 0, 1], method="DOP853", rtol=1e-12, atol=1e-13,
                    max_step=q.step)
    C, Cp, S, Sp = sol.y[:, -1]
    return C, S, Cp, Sp


def test_zero_potential_closed_forms():
    b = integrate_basis(ZERO, 0.0, [np.pi, np.pi / 2])
    assert np.allclose(b.phi, [-1, 0], atol=1e-13)
    assert np.allclose(b.phi_prime, [0, -np.pi / 2], atol=1e-12)
    assert np.allclose(b.S, [0, 2 / np.pi], atol=1e-13)
    assert np.allclose(b.S_prime, [-1, 0], atol=1e-13)


def test_constant_potential_closed_form():
    rho = np.sqrt(np.pi ** 2 + 1)
    b = integrate_basis(ONE, 0.0, rho)
    assert b.phi == pytest.approx(-1, abs=1e-12)
    assert b.S == pytest.approx(0, abs=1e-12)
    assert b.S_prime == pytest.approx(-1, abs=1e-12)


@pytest.mark.parametrize("rho,d,H", [(0.0, 2.5, 1.5), (np.pi, -2.5, -1.5),
                                     (np.arccos(0.8), 2.0, None)])
def test_discriminant_examples(rho, d, H):
    dd, HH, Delta = eval_discriminants(ZERO, BoundaryParams(2, 0), rho)
    assert dd == pytest.approx(d, abs=1e-12)
    assert Delta == pytest.approx(d - 2, abs=1e-12)
    if H is not None:
        assert HH == pytest.approx(H, abs=1e-12)


def test_zero_d_matches_cos_on_long_range():
    rho = np.linspace(0, 100, 2001)
    d = eval_discriminants(ZERO, BoundaryParams(2, 0), rho)[0]
    assert np.abs(d - 2.5 * np.cos(rho)).max() < 1e-9


def test_negative_lambda():
    # q = 0, lambda = -1: C = cosh 1, S = sinh 1
    C, S, Cp, Sp = monodromy(ZERO, -1.0)
    assert C == pytest.approx(np.cosh(1), rel=1e-13)
    assert S == pytest.approx(np.sinh(1), rel=1e-13)


@pytest.mark.parametrize("lam", [-20.0, 0.3, 17.0, 400.0, 1e4])
def test_against_adaptive_rk(lam):
    q = Potential.from_function(lambda x: 3 * np.cos(2 * np.pi * x) + 5 * x * (1 - x), 257)
    ref = ivp_basis(q, lam)
    got = monodromy(q, lam)
    scale = max(1.0, np.sqrt(abs(lam)))
    for g, r, s in zip(got, ref, (1, 1 / scale, scale, 1)):
        assert g == pytest.approx(r, abs=2e-9 * max(s, 1) * max(1, abs(r)))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=12), st.integers(0, 2**31 - 1))
def test_wronskian_is_one(knots, seed):
    q = Potential(np.interp(np.linspace(0, 1, 257), np.linspace(0, 1, len(knots)), knots))
    rho = np.random.default_rng(seed).uniform(0, 50, 20)
    h = float(np.random.default_rng(seed + 1).uniform(-2, 2))
    assert np.abs(integrate_basis(q, h, rho).wronskian - 1).max() < 1e-8


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=8), st.floats(-2, 2))
def test_asymptotic_representation(knots, h):
    q = Potential(np.interp(np.linspace(0, 1, 513), np.linspace(0, 1, len(knots)), knots))
    bp = BoundaryParams(2.0, h, q.omega)
    rho = np.linspace(10, 80, 300)
    d = eval_discriminants(q, bp, rho)[0]
    rem = rho * np.abs(d - 2 * bp.a_plus * np.cos(rho) - bp.b * np.sin(rho) / rho)
    # the remainder times rho stays bounded by a constant tied to q
    assert rem.max() < 5 * (1 + np.abs(q.samples).max()) ** 2


def test_sample_d():
    rho, d = sample_d(ZERO, BoundaryParams(2, 0), 10.0, 101)
    assert rho[-1] == 10.0 and np.allclose(d, 2.5 * np.cos(rho), atol=1e-12)


def test_trajectory_eigenfunction_norm():
    lam = np.array([np.pi ** 2, (2 * np.pi) ** 2])
    tr = trajectory(ZERO, lam)
    alpha = np.einsum("g,igl->l", tr.weights, tr.y_nodes ** 2)
    assert np.allclose(alpha, 1 / (2 * lam), rtol=1e-12)
    assert np.allclose(tr.y[:, 0], np.sin(np.pi * tr.x) / np.pi, atol=1e-13)
