"""Quiver tools for the Deligne-Simpson problem.

Exact root-system and representation computations on star-shaped and squid
quivers, the sufficient solvability criterion with its predicted dimensions,
a numerical orbit solver with tangent-space certification, and splitting
types of Kronecker pencils.
"""

from .exceptions import *  # noqa: F401,F403
from .frontend import (
    ConjugacyClassSpec,
    DSInstance,
    Eigenvalue,
    StabilityData,
    Verdict,
    build_alpha_zeta,
    dim_flag_product,
    normalize_classes,
    parabolic_degree,
    parabolic_slope,
    residue_condition,
    theta_to_lambda,
    verdict,
)
from .pencil import (
    KroneckerPencil,
    SplittingType,
    bundle_invariants,
    is_preinjective,
    splitting_type,
)
from .quiver import (
    Quiver,
    RootClass,
    SquidShape,
    StarShape,
    build_squid,
    build_star,
    classify_root,
    delta,
    euler_form,
    in_fundamental_region,
    p_value,
    reflect,
    symmetrized_form,
    tits_q,
)
from .replab import (
    Decomposition,
    ExactRep,
    check_inequality_302,
    enumerate_decompositions,
    hom_ext_dims,
    king_pairing,
    parameter_census,
    q_tilde,
    random_rep,
    stabilizer_dim,
    subrep_certificate_check,
)
from .solver import (
    OrbitSolver,
    SolverOptions,
    SolverResult,
    certify,
    solve_additive,
    solve_multiplicative,
    tangent_dimension,
)
from .symplectic import (
    CoadjointTarget,
    CotangentSquidPoint,
    moment_map,
    residual,
    symplectic_form,
    theta_N,
)

__version__ = "0.1.0"
