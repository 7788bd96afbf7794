"""
Reconstruction from the quasi-periodic eigenvalues
==================================================

Instead of the discriminant, start from the eigenvalues nu_0, nu_n^-, nu_n^+
of the quasi-periodic problem together with {rho_n} and {sigma_n}. The angle
theta = arccos(1/a_plus) is read off the eigenvalue asymptotics and d is
rebuilt by the product formula; the rest of the pipeline is unchanged.
"""
import numpy as np

from qpsl import (BoundaryParams, Potential, forward_data, l2_norm, qp_spectrum,
                  solve_from_eigenvalues, solve_ip1)

q = Potential.from_function(lambda x: 1 + 0.5 * np.cos(2 * np.pi * x))
a, h = 2.0, 0.0
omega = 0.5
data = forward_data(q, a, h, 64)
V = qp_spectrum(q, BoundaryParams(a, h, omega), 64)

r_eig = solve_from_eigenvalues(V, data.rho, data.sigma)
r_ip1 = solve_ip1(data)
print("theta          :", V.theta, " arccos(1/a_plus) =", np.arccos(1 / 1.25))
print("a, h (eig)     :", r_eig.a, r_eig.h)
print("a, h (d)       :", r_ip1.a, r_ip1.h)
print("|q_eig - q_d|  :", l2_norm(r_eig.q.samples - r_ip1.q.samples))
print("|q_eig - q|    :", l2_norm(r_eig.q.samples - q.resampled(r_eig.q.grid_size).samples))
