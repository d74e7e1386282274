"""Chebyshev asymptotic scales: canonical factorizations, weighted-derivative
operators, asymptotic-expansion coefficient extraction and theorem checks."""

from .errors import (
    AllImagesVanish,
    BadScheduleParams,
    ChebscaleError,
    DivergentTail,
    DivisionByZeroJet,
    DomainErrorJet,
    EvaluationError,
    ExprSyntaxError,
    IndexConditionViolated,
    LimitDiverged,
    NotAsymptoticScale,
    NotConstant,
    OrderExceeded,
    PivotVanishes,
    ToleranceNotMet,
    WronskianDegenerate,
)
from .expansion import (
    ConstructedFunction,
    ExpansionResult,
    ScaleArtifacts,
    TheoremReport,
    artifacts_for,
    check_absolute,
    check_complete,
    check_incomplete,
    check_O,
    construct_from_source,
    extract_operator,
    extract_recursive,
)
from .expr import ExpressionFunction, eval_jet, parse, render
from .factorization import (
    PrincipalSystem,
    RepresentationWeights,
    WeightChain,
    apply_chain,
    apply_full_operator,
    build_principal_system,
    build_representation_weights,
    build_type1_chain,
    build_type2_chain,
    classify_canonicity,
    divide_and_differentiate,
    fit_ratio_constant,
)
from .jet import Jet, jet_apply, jet_derivative, jet_variable
from .operators import (
    OperatorConstants,
    WeightedOperator,
    apply_weighted,
    operator_constants,
    wronskian_operator,
)
from .quadrature import (
    ConvergenceVerdict,
    IntegralSpec,
    NestedIntegral,
    WorkGrid,
    classify_improper,
    integrate,
    iterated_integral,
)
from .scale import (
    ChebyshevScale,
    DerivativeOperator,
    ProbeSchedule,
    ScaleFunction,
    check_admissibility,
    load_scale_file,
    make_schedule,
    verify_hierarchy,
    verify_tas,
)
from .wronskian import (
    WronskianEvaluation,
    check_levin_hierarchy,
    wronskian,
    wronskian_jet,
    wronskian_suppressed,
)

__version__ = "0.1.0"
