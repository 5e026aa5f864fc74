"""Verification engine for Nambu brackets and multi-Hamiltonian structures
of maximally superintegrable Hamiltonian systems."""

from .ad import ADScalar, Dual, Jet2
from .brackets import (
    BracketResult,
    NormalizedBracket,
    PhasePoint,
    PoissonBracketFunction,
    ResidualSample,
    b_matrix,
    bracket_k,
    det_b,
    fundamental_identity_residual,
    hamiltonian_vector_field,
    independence_identity_residual,
    jacobi_residual_bracket,
    leibniz_residual,
    nambu_bracket,
    nambu_bracket_oracle,
    normalized_evolution_bracket,
    poisson_bracket,
)
from .dynamics import Trajectory, canonical_rhs, conservation_drift, integrate, multihamiltonian_rhs
from .errors import (
    DefiningRelationError,
    DimensionMismatchError,
    DomainEvalError,
    DomainExitError,
    ExprSyntaxError,
    NambuLabError,
    SchemaError,
    SingularLocusError,
    UnknownIdentifierError,
)
from .expr import Expr, ScalarField, parse, parse_field, to_string
from .report import CheckRecord, VerificationReport
from .systems import (
    AlgebraRelation,
    SystemSpec,
    builtin,
    cm_trivializing_constant,
    load,
    sample_points,
    structure_relation_residual,
    verify_algebra,
)
from .tensors import (
    SkewTensor,
    compatibility_residual,
    degeneracy_check,
    jacobi_tensor_residual,
    lambda_k,
    lambda_oracle,
    landau_closed_form,
    orthogonality_residual,
)

__version__ = "0.1.0"
