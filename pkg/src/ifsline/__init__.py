"""Iterated function systems on the line: dimensions, separation and WSP witnesses."""

__version__ = "0.1.0"

from .errors import (
    BracketError,
    ConvergenceError,
    DegenerateError,
    FactorizationLimitError,
    IfsError,
    InconsistentInputError,
    PrecisionError,
    PreconditionError,
    ResourceLimitError,
    ValidationError,
)
from .symbolic import InfiniteWordSpec, moran_class, words_of_length, words_up_to
from .maps import (
    AffineMap,
    Bump,
    Ifs,
    IfsMap,
    PolyTerm,
    affine_ifs,
    bump,
    compose,
    convex_combination,
    distortion_constant,
    hull,
    ifs_distance,
    project,
    project_interval,
    tau_bound,
)
from .dimension import (
    DimensionEstimate,
    assouad_estimate,
    bowen_dimension,
    covering_count,
    pressure,
    similarity_dimension,
    synthesize_verdict,
)
from .separation import (
    exact_overlap_search,
    phi_count,
    separation_report,
    ssp_check,
    v_epsilon_member,
    wsp_criterion_search,
    wsp_unit_fraction_certificate,
    wsp_verdict,
)
from .transversality import TranslationFamily, ez_values, lemma1_check, projection_gradient
from .witness import (
    CommonFixedPointWitness,
    build_hr_family,
    demonstrate_wsp_failure,
    dirichlet_pair,
    find_common_fixed_point,
    interpolate_to_common_fixed_point,
    irrationalize,
    log_ratio_rationality,
    perturb_separate,
)

__all__ = [
    "__version__",
    "BracketError",
    "ConvergenceError",
    "DegenerateError",
    "FactorizationLimitError",
    "IfsError",
    "InconsistentInputError",
    "PrecisionError",
    "PreconditionError",
    "ResourceLimitError",
    "ValidationError",
    "InfiniteWordSpec",
    "moran_class",
    "words_of_length",
    "words_up_to",
    "AffineMap",
    "Bump",
    "Ifs",
    "IfsMap",
    "PolyTerm",
    "affine_ifs",
    "bump",
    "compose",
    "convex_combination",
    "distortion_constant",
    "hull",
    "ifs_distance",
    "project",
    "project_interval",
    "tau_bound",
    "DimensionEstimate",
    "assouad_estimate",
    "bowen_dimension",
    "covering_count",
    "pressure",
    "similarity_dimension",
    "synthesize_verdict",
    "exact_overlap_search",
    "phi_count",
    "separation_report",
    "ssp_check",
    "v_epsilon_member",
    "wsp_criterion_search",
    "wsp_unit_fraction_certificate",
    "wsp_verdict",
    "TranslationFamily",
    "ez_values",
    "lemma1_check",
    "projection_gradient",
    "CommonFixedPointWitness",
    "build_hr_family",
    "demonstrate_wsp_failure",
    "dirichlet_pair",
    "find_common_fixed_point",
    "interpolate_to_common_fixed_point",
    "irrationalize",
    "log_ratio_rationality",
    "perturb_separate",
]
