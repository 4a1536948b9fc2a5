"""Exact arithmetic for finite-dimensional Hamiltonian and Witt modular Lie
superalgebras over odd prime fields: truncated divided-power/exterior
algebras, vector fields and brackets, the Hamiltonian map, named subspaces,
sparse GF(p) linear algebra, derivation spaces, the exceptional derivation
families, and a catalog of reproducible verification checks.
"""

from .algebra import (
    INHOMOGENEOUS,
    Params,
    ParamsError,
    SuperPoly,
    binom_mod_p,
    enumerate_monomials,
    mul,
    parity,
    partial,
    zdeg,
)
from .witt import (
    VectorField,
    apply,
    bracket,
    d_h,
    dh_invert,
    field_parity,
    field_zdeg,
    module_scale,
    poisson,
)
from .spaces import SpaceId, SubspaceBasis, build_space, generators, graded_slice
from .linalg import BudgetError, Echelon, SparseMatrix, closure, kernel, member_rows, rref
from .derivations import (
    LinearMapOnBasis,
    ad,
    centralizer,
    der_space_homogeneous,
    find_inner_correction,
    graded_components,
    is_derivation,
    is_ideal,
    leibniz_defect,
)
from .exceptional import (
    FamilyTag,
    ad_gamma_prime,
    ad_partial_power,
    gamma_lambda,
    gamma_prime,
    phi,
    psi,
    theta,
)
from .verify import (
    ClassifyOutcome,
    FamilyCoefficients,
    Policy,
    Report,
    classify_derivation,
    match_family_coefficients,
    run_check,
)

__version__ = "0.1.0"
