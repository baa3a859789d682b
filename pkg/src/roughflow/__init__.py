"""Numerical calculus on degree-2 rough paths: metrics, tangents, area extensions and flows."""

from .errors import FlowError, InputError, VerificationError
from .tensor import Tensor2Element, level_norm, tensor_inv, tensor_mul
from .roughpath import (
    GridRoughPath,
    PairRoughPath,
    Phi,
    canonical_lift,
    chen_residual,
    dist_p,
    levy_area,
    p_variation,
    pair_path,
    q_bound_constant,
    reparameterize,
    resample,
    rough_sum,
    scalar_mul,
    trivial_path,
)
from .tangent import (
    TangentRep,
    equivalent,
    linear_extension,
    numeric_curve_derivative,
    tangent_add,
    tangent_dist,
    tangent_from_curve,
    tangent_norm,
    tangent_scale,
    variational_curve,
    young_extension,
    zero_cross_extension,
    zero_tangent,
)
from .extension import (
    DyadicArea,
    ParametricFamily,
    assemble_Z,
    build_dyadic_area,
    check_family_condition,
    colinear_family,
    directory_family,
    integrate_family,
    scaled_lift_family,
)
from .flow import (
    FieldConstants,
    FlowSolution,
    VectorField,
    dilation_field,
    euler_epsilon_solution,
    lipschitz_probe,
    residual,
    solve_global,
    solve_local,
    verify_solution,
    young_cross_field,
    zero_field,
)
from .config import RunConfig

__version__ = "0.1.0"
