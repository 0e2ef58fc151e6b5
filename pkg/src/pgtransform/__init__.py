"""Property-graph transformations: pattern queries with content
constructors, a deterministic executor with conflict policies, static
conflict analysis via bounded satisfiability, and openCypher compilation."""

from .graph import (
    SKOLEM_SIGIL,
    GraphError,
    PropertyGraph,
    Value,
    Violation,
    validate,
    value_eq,
)
from .patterns import (
    And,
    Card,
    CondPat,
    Const,
    Direction,
    EdgeAtom,
    Eq,
    GpcPlusQuery,
    GpcQuery,
    Kind,
    Lower,
    NodeAtom,
    Not,
    Or,
    Param,
    PathPattern,
    PatternTypeError,
    PropRef,
    Repeat,
    Restrictor,
    UnionPat,
    condition_vars,
    conjoin,
    conjuncts,
    infer_schema,
    pattern_vars,
)
from .matching import Binding, evaluate, evaluate_plus
from .rules import (
    ConstArg,
    EdgeCtor,
    EdgeRule,
    FlatRule,
    LabelArg,
    NodeCtor,
    NodeRule,
    PropArg,
    Rule,
    RuleTypeError,
    UndefinedPropertyError,
    VarArg,
    desugar,
    encode_id,
    resolve_aliases,
    validate_rule,
    validate_transformation,
)
from .executor import (
    ConflictPolicy,
    ConflictRecord,
    RunMetrics,
    TransformationConflictError,
    run,
)
from .consistency import (
    ConsistencyReport,
    SatResult,
    SatStatus,
    UnsupportedFeature,
    brute_force_sat,
    check_transformation,
    sat_check,
)
from .cypher import (
    CompileOptions,
    IndexChoice,
    Variant,
    compile_cleanup,
    compile_ddl,
    compile_rule,
    emit_bundle,
    normalize_script,
)
from .parser import ParseError, parse_query, parse_transformation, print_transformation
from .io import (
    FormatError,
    SigilViolation,
    ingest_csv,
    load_graph,
    load_scenario,
    save_graph,
)

__all__ = [
    "SKOLEM_SIGIL",
    "GraphError",
    "PropertyGraph",
    "Value",
    "Violation",
    "validate",
    "value_eq",
    "And",
    "Card",
    "CondPat",
    "Const",
    "Direction",
    "EdgeAtom",
    "Eq",
    "GpcPlusQuery",
    "GpcQuery",
    "Kind",
    "Lower",
    "NodeAtom",
    "Not",
    "Or",
    "Param",
    "PathPattern",
    "PatternTypeError",
    "PropRef",
    "Repeat",
    "Restrictor",
    "UnionPat",
    "condition_vars",
    "conjoin",
    "conjuncts",
    "infer_schema",
    "pattern_vars",
    "Binding",
    "evaluate",
    "evaluate_plus",
    "ConstArg",
    "EdgeCtor",
    "EdgeRule",
    "FlatRule",
    "LabelArg",
    "NodeCtor",
    "NodeRule",
    "PropArg",
    "Rule",
    "RuleTypeError",
    "UndefinedPropertyError",
    "VarArg",
    "desugar",
    "encode_id",
    "resolve_aliases",
    "validate_rule",
    "validate_transformation",
    "ConflictPolicy",
    "ConflictRecord",
    "RunMetrics",
    "TransformationConflictError",
    "run",
    "ConsistencyReport",
    "SatResult",
    "SatStatus",
    "UnsupportedFeature",
    "brute_force_sat",
    "check_transformation",
    "sat_check",
    "CompileOptions",
    "IndexChoice",
    "Variant",
    "compile_cleanup",
    "compile_ddl",
    "compile_rule",
    "emit_bundle",
    "normalize_script",
    "ParseError",
    "parse_query",
    "parse_transformation",
    "print_transformation",
    "FormatError",
    "SigilViolation",
    "ingest_csv",
    "load_graph",
    "load_scenario",
    "save_graph",
]
