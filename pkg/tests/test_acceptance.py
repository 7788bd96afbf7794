"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line (printed live and again in the
terminal summary) before asserting.
"""
import time

import numpy as np
import pytest

from conftest import cos2pi, parabola
from qpsl.core import (BoundaryParams, DirichletSpectralData, DiscriminantForm, Potential,
                       QPSpectralData, StabilityClassParams, l2_norm)
from qpsl.dirichlet_inverse import gl_solve
from qpsl.forward import sample_d
from qpsl.lsq_oracle import gauss_newton_oracle
from qpsl.qp_inverse import (membership_S, recover_scalars, solve_from_eigenvalues, solve_ip1,
                             validate_qp_data)
from qpsl.spectrum import dirichlet_data, forward_data, qp_spectrum
from qpsl.stability import (discriminant_bound_check, local_stability_experiment, perturb_admissible,
                            uniform_stability_sweep)

N = 64
n = np.arange(1, N + 1)
ALT = (-1) ** n
POTENTIALS = {"zero": Potential.constant(0.0), "one": Potential.constant(1.0),
              "cos": Potential.from_function(cos2pi), "parabola": Potential.from_function(parabola)}
MATRIX = [(qn, a, h) for qn in POTENTIALS for a in (-3.0, -2.0, -0.5, 0.5, 2.0, 3.0)
          for h in (-1.0, 0.0, 1.0)]


@pytest.fixture(scope="module")
def matrix_data():
    return {key: forward_data(POTENTIALS[key[0]], key[1], key[2], N) for key in MATRIX}


def test_c01_trivial_exactness(criterion):
    t0 = time.perf_counter()
    q = Potential.constant(0.0)
    data = forward_data(q, 2.0, 0.0, N)
    rho_err = np.abs(data.rho - np.pi * n).max()
    M = dirichlet_data(q, N).M
    M_err = np.abs(M / (2 * np.pi ** 2 * n ** 2) - 1).max()
    rho, d = sample_d(q, BoundaryParams(2.0, 0.0), 60.0, 2001)
    d_err = np.abs(d - 2.5 * np.cos(rho)).max()
    nu0 = qp_spectrum(q, BoundaryParams(2.0, 0.0), N).nu0
    nu_err = abs(nu0 - np.arccos(0.8))
    dt = time.perf_counter() - t0
    ok = rho_err < 1e-10 and M_err < 1e-8 and d_err < 1e-9 and nu_err < 1e-9 and dt < 5
    assert criterion(1, ok, f"rho {rho_err:.1e}, M rel {M_err:.1e}, d sup {d_err:.1e}, "
                            f"nu0 {nu_err:.1e}, {dt:.1f} s")


def test_c02_closed_form_inverse(criterion):
    t0 = time.perf_counter()
    rho = np.sqrt((np.pi * n) ** 2 + 1)
    q = gl_solve(DirichletSpectralData(rho, 2 * np.pi ** 2 * n ** 2), 513)
    q_err = np.abs(q.samples - 1).max()

    def d(r):
        mu = np.sqrt(r * r - 1 + 0j).real
        return 2.5 * np.cos(mu) + 2 * np.sinc(mu / np.pi)

    s = recover_scalars(d=d, rho=rho, sigma=ALT)
    dt = time.perf_counter() - t0
    ok = (q_err < 1e-3 and abs(s.a - 2) < 1e-6 and abs(s.h - 1) < 1e-3
          and abs(s.b - 3.25) < 1e-3 and dt < 30)
    assert criterion(2, ok, f"q sup {q_err:.1e}, a {abs(s.a - 2):.1e}, h {abs(s.h - 1):.1e}, "
                            f"b {s.b:.6f}, {dt:.1f} s")


def test_c03_roundtrip_matrix(criterion, matrix_data):
    t0 = time.perf_counter()
    worst = np.zeros(3)
    fails = []
    for key in MATRIX:
        qn, a, h = key
        r = solve_ip1(matrix_data[key])
        e = np.array([l2_norm(r.q.samples - POTENTIALS[qn].resampled(r.q.grid_size).samples),
                      abs(r.a - a), abs(r.h - h)])
        worst = np.maximum(worst, e)
        if not (e[0] < 5e-3 and e[1] < 1e-6 and e[2] < 1e-3):
            fails.append(key)
    dt = time.perf_counter() - t0
    ok = not fails and dt < 600
    assert criterion(3, ok, f"{len(MATRIX)} cases, worst L2 {worst[0]:.1e}, a {worst[1]:.1e}, "
                            f"h {worst[2]:.1e}, failures {fails}, {dt:.0f} s")


def test_c04_characterization(criterion, matrix_data, zero_data):
    rejected = [k for k, v in matrix_data.items() if not validate_qp_data(v).passed]
    f = zero_data.dform
    t = np.linspace(0, 1, f.grid_size)
    rho = zero_data.rho.copy()
    rho[-1] += 0.3
    sig4 = zero_data.sigma.copy()
    sig4[4] = 0
    sig5 = zero_data.sigma.copy()
    sig5[-1] *= -1
    mutations = {
        1: zero_data.replace(dform=DiscriminantForm(0.95, f.b, f.D)),
        2: zero_data.replace(rho=rho),
        3: zero_data.replace(dform=DiscriminantForm(f.a_plus, f.b, f.D + 7 * np.pi * np.sin(np.pi * t))),
        4: zero_data.replace(sigma=sig4),
        5: zero_data.replace(sigma=sig5),
    }
    got = {k: validate_qp_data(m).failed() for k, m in mutations.items()}
    ok = not rejected and all(got[k] == [k] for k in got)
    assert criterion(4, ok, f"{len(matrix_data)} forward datasets valid "
                            f"({len(rejected)} rejected), mutations flag {got}")


def test_c05_sign_branch_twin(criterion):
    f = DiscriminantForm(1.25, 0.0, np.zeros(257))
    r1 = solve_ip1(QPSpectralData(f, np.pi * n, ALT), 513)
    r2 = solve_ip1(QPSpectralData(f, np.pi * n, -ALT), 513)
    da = abs(r1.a - 2) + abs(r2.a - 0.5)
    same = np.array_equal(r1.q.samples, r2.q.samples)
    assert criterion(5, da < 1e-9 and same, f"a: {r1.a} -> {r2.a}, identical q {same}")


def test_c06_gl_vs_gauss_newton(criterion, cos_dirichlet):
    q_gl = gl_solve(cos_dirichlet, 513)
    orc = gauss_newton_oracle(cos_dirichlet, grid_size=513)
    diff = l2_norm(q_gl.samples - orc.q.samples)
    assert criterion(6, diff < 2e-3, f"L2 difference {diff:.1e} "
                                     f"({orc.iterations} Gauss-Newton iterations)")


def test_c07_bound_constant(criterion, zero_data):
    ratios = {}
    for kind in ("rho", "D", "mixed"):
        ratios[kind] = [discriminant_bound_check(zero_data, perturb_admissible(zero_data, e / 2, 0, kind)).C_max
                        / discriminant_bound_check(zero_data, perturb_admissible(zero_data, e, 0, kind)).C_max
                        for e in (1e-2, 1e-3, 1e-4)]
    ok = all(0.5 <= r <= 2 for v in ratios.values() for r in v)
    text = "; ".join(f"{k} " + " ".join(f"{r:.7f}" for r in v) for k, v in ratios.items())
    assert criterion(7, ok, f"C(eps/2)/C(eps) at eps 1e-2,1e-3,1e-4: {text}")


def test_c08_local_stability(criterion):
    spreads, exact, bad = [], [], []
    for qn in POTENTIALS:
        for a, h in ((2.0, 0.0), (-0.5, 1.0)):
            data = forward_data(POTENTIALS[qn], a, h, N)
            for kind in ("rho", "D", "mixed"):
                t = local_stability_experiment(POTENTIALS[qn], a, h, kind=kind, data=data)
                r = t.column("ratio")
                spreads.append(t.summary["ratio_spread"])
                exact.append(t.summary["exact_recovery_l2"])
                if not (np.all(np.isfinite(r)) and r.max() / r.min() <= 2
                        and t.summary["exact_recovery_l2"] < 1e-6):
                    bad.append((qn, a, h, kind))
    ok = not bad
    assert criterion(8, ok, f"{len(spreads)} experiments, max spread {max(spreads):.3f}, "
                            f"max exact-recovery {max(exact):.1e}, failures {bad}")


def test_c09_uniform_sweep(criterion):
    params = StabilityClassParams(0.5, 0.3, 2.0, 0.0, 0.0, ALT)
    t = uniform_stability_sweep(params, pairs=20, seed=7)
    r = t.column("ratio")
    members = all(row["member"] for row in t.rows)
    fwd = all(row["forward_valid"] for row in t.rows)
    spread = t.summary["ratio_spread"]
    ok = len(t.rows) == 20 and np.all(np.isfinite(r)) and members and fwd and spread < 50
    assert criterion(9, ok, f"{len(t.rows)} pairs, ratios {r.min():.2f}..{r.max():.2f} "
                            f"(spread {spread:.2f}), members {members}, re-forward valid {fwd}")


def test_c10_eigenvalue_route(criterion):
    worst_q = worst_theta = 0.0
    for c in (0.0, 1.0):
        q = Potential.constant(c)
        data = forward_data(q, 2.0, 0.0, N)
        V = qp_spectrum(q, BoundaryParams(2.0, 0.0, c / 2), N)
        r_eig = solve_from_eigenvalues(V, data.rho, data.sigma)
        r_ip1 = solve_ip1(data)
        worst_q = max(worst_q, l2_norm(r_eig.q.samples - r_ip1.q.samples),
                      abs(r_eig.a - r_ip1.a), abs(r_eig.h - r_ip1.h))
        worst_theta = max(worst_theta, abs(V.theta - np.arccos(1 / 1.25)))
    ok = worst_q < 1e-2 and worst_theta < 1e-6
    assert criterion(10, ok, f"eigenvalue route vs ip1 {worst_q:.1e}, theta {worst_theta:.1e}")
