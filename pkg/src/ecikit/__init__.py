"""Numerical checks for extended conditional independence over finite multi-regime models."""

from .consistency import (
    GeneratorConfig,
    ImplicationReport,
    LemmaBinding,
    LemmaId,
    admissible_bindings,
    check_distributional_consistency,
    check_lemma,
    check_subset_consistency,
    decompose_dc,
    induction_check,
    run_suite,
)
from .dag import (
    AugmentedDAG,
    d_separated,
    expand_itt,
    implied_independencies,
    local_markov_statements,
    switch_dag,
    validate_dag,
    verify_local_markov,
)
from .eci import ECIStatement, IndicatorTerm, Mode, evaluate, format_statement, parse_statement
from .gcomp import SequentialProblem, check_corrected_condition, g_formula, verify_identification
from .lab import (
    SearchConfig,
    build_fat_hand_model,
    contextual_demo,
    search_eq13_counterexample,
    search_vi_counterexample,
)
from .model import (
    IDLE,
    DistributionTable,
    ModelShape,
    MultiRegimeModel,
    StructuralSpec,
    VariableDecl,
    check_ci,
    conditional,
    generate_random_model,
    generate_structural_model,
    is_variation_independent,
    load_model,
    marginal,
    validate_model,
)
from .verdict import Outcome, Verdict, Witness

__version__ = "0.1.0"

__all__ = [
    "GeneratorConfig",
    "ImplicationReport",
    "LemmaBinding",
    "LemmaId",
    "admissible_bindings",
    "check_distributional_consistency",
    "check_lemma",
    "check_subset_consistency",
    "decompose_dc",
    "induction_check",
    "run_suite",
    "AugmentedDAG",
    "d_separated",
    "expand_itt",
    "implied_independencies",
    "local_markov_statements",
    "switch_dag",
    "validate_dag",
    "verify_local_markov",
    "SearchConfig",
    "build_fat_hand_model",
    "contextual_demo",
    "search_eq13_counterexample",
    "search_vi_counterexample",
    "IDLE",
    "DistributionTable",
    "ModelShape",
    "MultiRegimeModel",
    "StructuralSpec",
    "VariableDecl",
    "check_ci",
    "conditional",
    "generate_random_model",
    "generate_structural_model",
    "is_variation_independent",
    "load_model",
    "marginal",
    "validate_model",
    "ECIStatement",
    "IndicatorTerm",
    "Mode",
    "evaluate",
    "format_statement",
    "parse_statement",
    "SequentialProblem",
    "check_corrected_condition",
    "g_formula",
    "verify_identification",
    "Outcome",
    "Verdict",
    "Witness",
]
