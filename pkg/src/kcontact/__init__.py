"""Symbolic engine for k-contact field theories with dissipation.

From a polynomial Lagrangian the package derives the field equations on the
Pontryagin bundle, runs the constraint algorithm to its final submanifold,
and recovers the velocity- and momentum-bundle formalisms; a
finite-difference harness verifies the derived PDEs numerically on the
built-in example models.
"""

from .algebra import (
    ConstraintReducer,
    LinSystem,
    Poly,
    RatFunc,
    Symbol,
    diff,
    evaluate,
    is_zero_mod,
    solve_affine,
)
from .bundles import (
    Chart,
    KVectorField,
    OneForm,
    TwoForm,
    contact_forms,
    d_contact,
    exterior_derivative,
    interior_sum,
    interior_sum_1,
    pontryagin_chart,
    reeb_family,
)
from .hamiltonian import (
    HamiltonianSystem,
    hdw_field_equations,
    hdw_section_residual,
)
from .lagrangian import (
    Hessian,
    LagrangianSystem,
    cartan_contact_forms,
    classify,
    el_residual,
    energy,
    hessian,
    lagrangian_field_equations,
    legendre,
    reeb_lagrangian,
)
from .models import (
    ModelBundle,
    build_model,
    damped_klein_gordon,
    damped_string,
    dissipative_maxwell,
)
from .unified import (
    ConstraintSet,
    SolutionFamily,
    constraint_algorithm,
    coupling,
    initial_family,
    project_hamiltonian,
    project_lagrangian,
    sr_equations,
    sr_hamiltonian,
    tangency_step,
)

__version__ = "0.1.0"

__all__ = [
    "Chart",
    "ConstraintReducer",
    "ConstraintSet",
    "HamiltonianSystem",
    "Hessian",
    "KVectorField",
    "LagrangianSystem",
    "LinSystem",
    "ModelBundle",
    "OneForm",
    "Poly",
    "RatFunc",
    "SolutionFamily",
    "Symbol",
    "TwoForm",
    "build_model",
    "cartan_contact_forms",
    "classify",
    "constraint_algorithm",
    "contact_forms",
    "coupling",
    "d_contact",
    "damped_klein_gordon",
    "damped_string",
    "diff",
    "dissipative_maxwell",
    "el_residual",
    "energy",
    "evaluate",
    "exterior_derivative",
    "hdw_field_equations",
    "hdw_section_residual",
    "hessian",
    "initial_family",
    "interior_sum",
    "interior_sum_1",
    "is_zero_mod",
    "lagrangian_field_equations",
    "legendre",
    "pontryagin_chart",
    "project_hamiltonian",
    "project_lagrangian",
    "reeb_family",
    "reeb_lagrangian",
    "solve_affine",
    "sr_equations",
    "sr_hamiltonian",
    "tangency_step",
]
