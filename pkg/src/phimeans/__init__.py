"""Generalized Frechet means (phi-means) on metric spaces and Riemannian manifolds."""

from .errors import *  # noqa: F401,F403
from .experiments import consistency_curve, uniform_consistency_curve, uniqueness_check
from .loss import (MeanSet, Measure, diameter_bound, empirical_loss, lipschitz_bound,
                   loss_gradient, rho_infinity, sublevel_mean_set)
from .phi import (ExpMinusOne, Linear, PhiFamily, PhiSpec, Power, Tabulated, check_membership,
                  gamma, gamma_t, parse_phi)
from .sampling import (ExpDecay, LinearDecay, RadialProfile, StepDecay, empirical_measure,
                       haar_circle, isotropic_sample, uniform_sphere)
from .solvers import (SolverConfig, SolverReport, Termination, gradient_descent, nested_grid,
                      solve, tangent_flip, tangent_optimality_residual)
from .spaces import (Circle, Euclidean, ProjectiveSpace, Region, Sphere, Torus, base_point,
                     distance, exp_map, log_map, make_grid)

__version__ = "0.1.0"
