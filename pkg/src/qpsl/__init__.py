"""Forward and inverse spectral computations for Sturm-Liouville operators
with quasi-periodic boundary conditions y(0) = a y(1), y'(0) - h y(0) = y'(1)/a."""
from .core import (DEFAULT_GRID, DEFAULT_N, BoundaryParams, BracketError, ConditionResult,
                   DirichletSpectralData, DiscriminantForm, IntegrationError, Potential,
                   QPEigenvalues, QPSpectralData, SolverError, SpectralDataError,
                   StabilityClassParams, ValidationReport, l2_norm, l21_norm)
from .forward import eval_discriminants, integrate_basis, monodromy, sample_d
from .spectrum import (dirichlet_data, dirichlet_spectrum, dirichlet_weights, forward_data,
                       positivity_shift, qp_spectrum, sign_sequence, weyl_residue_fd)
from .discriminant import (delta_from_eigenvalues, dform_difference, dform_from_problem, eval_dform,
                           extract_scalar_limits, r_product, sample_limits)
from .dirichlet_inverse import gl_kernel_system, gl_solve, gl_solve_full, validate_dirichlet_data
from .qp_inverse import (membership_S, phi_values, recover_scalars, solve_from_eigenvalues,
                         solve_ip1, solve_ip2, validate_qp_data, weyl_sequence)
from .stability import (discriminant_bound_check, lemma51_bound_check, local_stability_experiment,
                        perturb_admissible, uniform_stability_sweep)
from .lsq_oracle import gauss_newton_oracle

__version__ = "0.1.0"
