"""Sampling discretization of L_p norms on finite probability spaces.

Subspaces of functions on a discrete space (Omega_M, mu), their Christoffel
functions and Nikol'skii constants, random and deterministic sampling plans
with certified two-sided constants, change of density, and empirical
entropy numbers of subspace balls.
"""

from .analysis import (SpectralProfile, christoffel, gaussian_mean_norm, k2_constant,
                       nikolskii_constant, orthonormalize, sphere_moment, sphere_moment_mc)
from .density import (LewisBasis, change_of_density, lewis_basis, weighted_discretize_l2,
                      weighted_discretize_lp)
from .discretize import (Certificate, SamplePlan, certify_exact_l2, certify_heuristic_lp,
                         certify_via_net, full_grid_plan, net_transfer, sample_random, suggest_m,
                         two_stage_discretize, verify_concentration)
from .entropy import (EntropyEstimate, check_ball_entropy_sandwich, check_entropy_scaling,
                      check_nikolskii_from_entropy, check_transfer_inequality, entropy_number,
                      pack_greedy, volumetric_lower_bound)
from .errors import (BudgetExhaustedError, CheckFailed, ConvergenceError, InvariantError,
                     MarczError, NetTooCoarseError, PreconditionError, RankDeficiencyError,
                     SupportCollapseError)
from .space import (DiscreteSpace, FunctionVec, IndexSet, Subspace, build_rademacher,
                    build_random, build_trig, build_trig_n, evaluate, hyperbolic_cross, lp_norm,
                    make_uniform_torus)
from .sparsify import BarrierState, bss_select

__version__ = "0.1.0"
