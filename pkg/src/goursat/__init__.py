"""Recognition of Goursat bundles and construction of contact coordinates.

Distributions are given by rational vector fields on a coordinate chart.
All symbolic work is exact over the rationals; ranks are certified at
seeded rational witness points.
"""

from .construct import (
    ConstructionError,
    ContactTransformation,
    Filtration,
    FiltrationLevel,
    IntegrationNeeded,
    PrologationSystem,
    VerificationResult,
    build_filtration,
    chain_names,
    contact_coordinates,
    generate_contact_system,
    jacobian_determinant,
    select_fundamental_functions,
    total_derivative_operator,
    verify_equivalence,
)
from .distgeo import (
    DerivedFlag,
    Distribution,
    PointSampleConfig,
    RankCertificate,
    RegularityError,
    VectorField,
    cauchy_bundle,
    coordinate_field,
    derived_bundle,
    derived_flag,
    generic_rank,
    intersect,
    is_integrable,
    lie_bracket,
    pushforward,
    same_span,
)
from .documents import DocumentError, ProblemDocument, load_problem, load_resume, load_transformation
from .firstint import (
    AnsatzConfig,
    IntegrationError,
    InvariantRejection,
    InvariantSet,
    first_integrals,
    verify_invariants,
)
from .signature import (
    Analysis,
    DerivedTypeSignature,
    GoursatVerdict,
    TypeVector,
    analyze,
    derived_type,
    is_goursat_bundle,
    matches_partial_prolongation,
    pi_bundles,
    predicted_derived_type,
)
from .singvar import (
    CriteriaDisagreementError,
    PolarMatrix,
    SingularVariety,
    WeberReport,
    degree,
    polar_matrix,
    quotient_by_cauchy,
    resolvent_bundle,
    singular_variety,
)
from .symexpr import (
    POLE,
    Chart,
    Expression,
    ParseError,
    RationalPoint,
    UnknownIdentifierError,
    differentiate,
    evaluate,
    is_zero,
    parse,
)

__version__ = "0.1.0"
