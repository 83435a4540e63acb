"""Calderon-Zygmund sets, atomic decompositions, BMO oscillation and
K-functional bounds on the ax+b group, computable exactly at desk scale."""

from .bmo import (JNFit, OscillationReport, bmo_norm_over, duality_pairing,
                  jn_eta_floor, jn_verify, oscillation, tree_family)
from .decomposition import (AtomCertificate, AtomicExpansion, CZDecomposition,
                            H1Decomposition, cz_decompose,
                            h1_atomic_decomposition, h1_upper_bound,
                            reexpand_atom, validate_atom)
from .errors import (AlphaTooSmall, AtomInvalid, ConfigInvalid,
                     ContainmentViolation, CZHardyError, EmptyGrid,
                     ExponentOrder, NoAdmissibleSplit, NonFiniteKernelValue,
                     NonzeroMean, RegionNotResolved, RootAverageTooLarge,
                     SupportViolation, ZeroBMONorm)
from .functions import (ComputationDomain, PartitionFunction, Topology,
                        average_on, build_topology, integrate_rho, lp_norm,
                        product_integral, project, refine,
                        right_translate_integral, uniform_topology)
from .geometry import (DEFAULT_KAPPA0, Ball, CZSet, DyadicCube, GroupPoint,
                       ball_growth, dilated_contains, dist_to_set,
                       enclosing_ball, group_inv, group_mul, identity,
                       is_admissible, lambda_measure, metric_distance,
                       rho_measure, split)
from .interpolation import (KFunctionalReport, LambdaDecomposition,
                            g_objective, k_functional_upper, lambda_decompose,
                            lambda_star, theta_of)
from .singular import (HormanderReport, KernelSpec, apply_kernel,
                       atom_image_l1, atom_image_report, hormander_sup,
                       make_kernel, operator_l2_norm)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
