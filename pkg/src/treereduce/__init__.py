"""Language-preserving reduction of block-structured process models."""

from .errors import ParseError, ReductionError, ResourceLimitError
from .tree import (
    GLYPHS,
    Leaf,
    Node,
    Operator,
    ProcessTree,
    TAU,
    Tau,
    TreePath,
    alphabet,
    canonicalize,
    format_path,
    format_tree,
    iter_subtrees,
    parse_tree,
    replace_at,
    size,
    subtree_at,
    validate,
)
from .semantics import (
    INFINITE,
    LangBound,
    Trace,
    admits_empty_trace,
    end_activities,
    enumerate_language,
    exceeds_empty,
    format_trace,
    max_trace_length,
    shuffle,
    start_activities,
)
from .rules import (
    ReductionTrace,
    RewriteStep,
    RuleId,
    all_matches,
    apply_once,
    match_at,
    measure_constant,
    normal_form,
    reduce,
    rewrite_results,
    structure_counts,
    termination_measure,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
