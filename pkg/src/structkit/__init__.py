"""Attributed-structure calculus and the tooling built on top of it."""

from .config import DEFAULT, Config
from .structure import (
    EMPTY,
    Relation,
    Structure,
    StructureError,
    TypeCatalog,
    canonical_form,
    compose,
    convolution,
    difference,
    internal_classes,
    isomorphic,
    morphism_number,
    structure,
    swap_indistinguishable,
    validate,
)
from .derivation import (
    DerivationStore,
    MorphismMask,
    Partition,
    Portion,
    apply_morphism,
    canonical_partitions,
    partition,
    portion,
    quotient,
)
from .pixels import (
    PropertyAssertion,
    RasterStructure,
    Signature,
    SignatureAtom,
    build_signature_candidates,
    classify_segment,
    evaluate_signature,
    extract_strokes,
    load_raster,
    polygon_quotient,
    segment_regions,
)
from .schema import (
    Binding,
    NandNet,
    OutOfFuel,
    Schema,
    compile_to_nand,
    execute,
    flatten,
    operations_coincide,
    schema,
    schemas_coincide,
)
from .rules import (
    AssociativeRule,
    Consequent,
    MicroSituation,
    MsMember,
    Recognition,
    Subject,
    detect_regularity_case1,
    detect_regularity_case2,
    detect_regularity_case3,
    eval_rule,
    mine_rules,
    recognize,
    update_legitimacy,
    verify_regularity_case4,
)
from .solver import (
    ProblemSpec,
    Production,
    RecognitionState,
    SearchResult,
    SolutionCache,
    expand,
    goal_satisfied,
    replay,
    solve,
    solve_with_cache,
)

__all__ = [
    "Config", "DEFAULT", "EMPTY", "Relation", "Structure", "StructureError",
    "TypeCatalog", "canonical_form", "compose", "convolution", "difference",
    "internal_classes", "isomorphic", "morphism_number", "structure",
    "swap_indistinguishable", "validate", "DerivationStore", "MorphismMask",
    "Partition", "Portion", "apply_morphism", "canonical_partitions",
    "partition", "portion", "quotient", "PropertyAssertion",
    "RasterStructure", "Signature", "SignatureAtom",
    "build_signature_candidates", "classify_segment", "evaluate_signature",
    "extract_strokes", "load_raster", "polygon_quotient", "segment_regions",
    "Binding", "NandNet", "OutOfFuel", "Schema", "compile_to_nand",
    "execute", "flatten", "operations_coincide", "schema",
    "schemas_coincide", "AssociativeRule", "Consequent", "MicroSituation",
    "MsMember", "Recognition", "Subject", "detect_regularity_case1",
    "detect_regularity_case2", "detect_regularity_case3", "eval_rule",
    "mine_rules", "recognize", "update_legitimacy",
    "verify_regularity_case4", "ProblemSpec", "Production",
    "RecognitionState", "SearchResult", "SolutionCache", "expand",
    "goal_satisfied", "replay", "solve", "solve_with_cache",
]
