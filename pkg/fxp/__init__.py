from .model import (
    FeatureDecl,
    FeatureSpace,
    TreeModel,
    Sample,
    Path,
    Restriction,
    ModelError,
    ModelSyntaxError,
    ModelValidationError,
    DomainError,
    InstanceError,
    evaluate,
    paths,
    parse_model,
    print_model,
    make_sample,
)
from .semantics import (
    SimilaritySpec,
    ExplanationProblem,
    CapExceededError,
    ProblemError,
    make_problem,
    similar,
    expected_value,
    dissimilarity_probability,
    waxp_probability,
)
from .oracle import DistanceBound, AdversarialQuery, Witness, is_waxp, is_wcxp, wcxp_witness, find_adversarial_example
from .explain import Explanation, InflatedExplanation, InfeasibleQueryError, one_axp, one_cxp, is_axp, is_cxp, inflate
from .enumeration import (
    EnumerationState,
    EnumerationLimitError,
    RelevancyReport,
    enumerate_explanations,
    minimal_hitting_sets,
    relevant_features,
    necessary_features_fast,
)
from .attribution import ShapReport, AuditReport, EfficiencyError, characteristic_value, shap_score, shap_all, audit
from .persistence import load_model, load_instance, save_model, write_report

__all__ = [
    "FeatureDecl",
    "FeatureSpace",
    "TreeModel",
    "Sample",
    "Path",
    "Restriction",
    "ModelError",
    "ModelSyntaxError",
    "ModelValidationError",
    "DomainError",
    "InstanceError",
    "evaluate",
    "paths",
    "parse_model",
    "print_model",
    "make_sample",
    "SimilaritySpec",
    "ExplanationProblem",
    "CapExceededError",
    "ProblemError",
    "make_problem",
    "similar",
    "expected_value",
    "dissimilarity_probability",
    "waxp_probability",
    "DistanceBound",
    "AdversarialQuery",
    "Witness",
    "is_waxp",
    "is_wcxp",
    "wcxp_witness",
    "find_adversarial_example",
    "Explanation",
    "InflatedExplanation",
    "InfeasibleQueryError",
    "one_axp",
    "one_cxp",
    "is_axp",
    "is_cxp",
    "inflate",
    "EnumerationState",
    "EnumerationLimitError",
    "RelevancyReport",
    "enumerate_explanations",
    "minimal_hitting_sets",
    "relevant_features",
    "necessary_features_fast",
    "ShapReport",
    "AuditReport",
    "EfficiencyError",
    "characteristic_value",
    "shap_score",
    "shap_all",
    "audit",
    "load_model",
    "load_instance",
    "save_model",
    "write_report",
]
