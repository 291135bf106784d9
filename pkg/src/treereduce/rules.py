"""The 18 language-preserving reduction rules and the exhaustive rewrite engine.

Rule guards come in three kinds: structural patterns, the empty-trace
predicate (a child whose language contains the empty trace), and the
max-trace-length function (children that can produce at most one event).
Pattern roles bind children as multisets for the commutative operators
(xor, and, or, int, and loop redo positions); sequence children keep their
relative order throughout.

The engine applies the first match in a fixed scan order (pre-order
positions, then rule ids in declaration order), which makes reduction traces
reproducible; the rule set is confluent, so the normal form itself does not
depend on the strategy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import NamedTuple, Optional

from .errors import ReductionError
from .semantics import admits_empty_trace, exceeds_empty, max_trace_length
from .tree import (
    Leaf,
    Node,
    Operator,
    ProcessTree,
    TAU,
    Tau,
    TreePath,
    format_path,
    iter_subtrees,
    replace_at,
    size,
    subtree_at,
)


class RuleId(Enum):
    S = "S"
    A_XOR = "A_Xor"
    A_SEQ = "A_Seq"
    A_CON = "A_Con"
    A_OR = "A_Or"
    A_LOOP_BODY = "A_LoopB"
    A_LOOP_REDO = "A_LoopR"
    T_SEQ = "T_Seq"
    T_CON = "T_Con"
    T_INT = "T_Int"
    T_LOOP_BODY_REDO = "T_LoopBR"
    T_XOR = "T_Xor"
    T_LOOP_REDO = "T_LoopR"
    T_OR = "T_Or"
    T_OR_XOR = "T_OrXor"
    T_LOOP_BODY = "T_LoopB"
    C_INT = "C_Int"
    C_OR = "C_Or"


RULE_ORDER: tuple[RuleId, ...] = tuple(RuleId)

_SINGLETON_OPS = (Operator.XOR, Operator.SEQ, Operator.CONCURRENT, Operator.INTERLEAVED, Operator.OR)
_TAU_REMOVAL_OPS = {
    RuleId.T_SEQ: Operator.SEQ,
    RuleId.T_CON: Operator.CONCURRENT,
    RuleId.T_INT: Operator.INTERLEAVED,
}
_ASSOC_OPS = {
    RuleId.A_XOR: Operator.XOR,
    RuleId.A_SEQ: Operator.SEQ,
    RuleId.A_CON: Operator.CONCURRENT,
    RuleId.A_OR: Operator.OR,
}


def _dedup(results: list[ProcessTree]) -> list[ProcessTree]:
    return list(dict.fromkeys(results))


def _without(children: tuple[ProcessTree, ...], index: int) -> tuple[ProcessTree, ...]:
    return children[:index] + children[index + 1:]


def rewrite_results(rule: RuleId, tree: ProcessTree) -> list[ProcessTree]:
    """All distinct results of applying ``rule`` at the root of ``tree``.

    An empty list means the rule does not match here.  The list order is
    deterministic (child index order), and the first entry is the one the
    engine applies.
    """
    if not isinstance(tree, Node):
        return []
    op, children = tree.op, tree.children

    if rule is RuleId.S:
        if op in _SINGLETON_OPS and len(children) == 1:
            return [children[0]]
        return []

    if rule in _ASSOC_OPS:
        target = _ASSOC_OPS[rule]
        if op is not target:
            return []
        out = []
        for i, child in enumerate(children):
            if isinstance(child, Node) and child.op is target:
                out.append(Node(op, children[:i] + child.children + children[i + 1:]))
        return _dedup(out)

    if rule is RuleId.A_LOOP_BODY:
        if op is Operator.LOOP and isinstance(children[0], Node) and children[0].op is Operator.LOOP:
            inner = children[0]
            return [Node(Operator.LOOP, inner.children + children[1:])]
        return []

    if rule is RuleId.A_LOOP_REDO:
        if op is not Operator.LOOP:
            return []
        out = []
        for i in range(1, len(children)):
            child = children[i]
            if isinstance(child, Node) and child.op is Operator.XOR:
                out.append(Node(op, children[:i] + child.children + children[i + 1:]))
        return _dedup(out)

    if rule in _TAU_REMOVAL_OPS:
        if op is not _TAU_REMOVAL_OPS[rule] or len(children) < 2:
            return []
        out = [Node(op, _without(children, i)) for i, c in enumerate(children) if isinstance(c, Tau)]
        return _dedup(out)

    if rule is RuleId.T_LOOP_BODY_REDO:
        if op is Operator.LOOP and children == (TAU, TAU):
            return [TAU]
        return []

    if rule is RuleId.T_XOR:
        if op is not Operator.XOR or len(children) < 2:
            return []
        out = []
        for i, c in enumerate(children):
            if isinstance(c, Tau) and any(
                j != i and admits_empty_trace(other) for j, other in enumerate(children)
            ):
                out.append(Node(op, _without(children, i)))
        return _dedup(out)

    if rule is RuleId.T_LOOP_REDO:
        if op is not Operator.LOOP or len(children) < 3:
            return []
        out = []
        for i in range(1, len(children)):
            if isinstance(children[i], Tau) and any(
                j != i and admits_empty_trace(children[j]) for j in range(1, len(children))
            ):
                out.append(Node(op, _without(children, i)))
        return _dedup(out)

    if rule is RuleId.T_OR:
        if op is not Operator.OR or len(children) < 2:
            return []
        out = []
        for i, c in enumerate(children):
            if isinstance(c, Tau):
                out.append(Node(Operator.XOR, (TAU, Node(Operator.OR, _without(children, i)))))
        return _dedup(out)

    if rule is RuleId.T_OR_XOR:
        if op is not Operator.OR:
            return []
        out = []
        for i, c in enumerate(children):
            if isinstance(c, Node) and c.op is Operator.XOR and len(c.children) >= 2:
                tau_index = next((j for j, g in enumerate(c.children) if isinstance(g, Tau)), None)
                if tau_index is None:
                    continue
                trimmed = Node(Operator.XOR, _without(c.children, tau_index))
                inner = Node(Operator.OR, children[:i] + (trimmed,) + children[i + 1:])
                out.append(Node(Operator.XOR, (TAU, inner)))
        return _dedup(out)

    if rule is RuleId.T_LOOP_BODY:
        if (
            op is Operator.LOOP
            and isinstance(children[0], Tau)
            and any(exceeds_empty(r) for r in children[1:])
        ):
            bundled = Node(Operator.XOR, children[1:])
            return [Node(Operator.XOR, (TAU, Node(Operator.LOOP, (bundled, TAU))))]
        return []

    if rule is RuleId.C_INT:
        if op is Operator.INTERLEAVED and all(max_trace_length(c) <= 1 for c in children):
            return [Node(Operator.CONCURRENT, children)]
        return []

    if rule is RuleId.C_OR:
        if op is not Operator.CONCURRENT or len(children) < 2:
            return []
        eps = [i for i, c in enumerate(children) if admits_empty_trace(c)]
        out = []
        for i, j in combinations(eps, 2):
            wrapped = Node(Operator.OR, (children[i], children[j]))
            rest = list(children)
            del rest[j]
            rest[i] = wrapped
            out.append(Node(op, tuple(rest)))
        return _dedup(out)

    raise AssertionError(f"unhandled rule {rule}")


def match_at(rule: RuleId, tree: ProcessTree, position: TreePath) -> Optional[ProcessTree]:
    """The rewritten subtree if ``rule`` matches at ``position``, else None."""
    results = rewrite_results(rule, subtree_at(tree, position))
    return results[0] if results else None


def all_matches(tree: ProcessTree) -> list[tuple[TreePath, RuleId, ProcessTree]]:
    """Every applicable (position, rule, result) triple, including rule variants."""
    out = []
    for path, sub in iter_subtrees(tree):
        for rule in RULE_ORDER:
            for result in rewrite_results(rule, sub):
                out.append((path, rule, result))
    return out


# ---------------------------------------------------------------------------
# termination measure
# ---------------------------------------------------------------------------


class StructureCounts(NamedTuple):
    """Counters feeding the polynomial termination measure."""

    nodes: int
    or_tau_pairs: int
    eps_body_loops: int
    interleaved_nodes: int
    concurrent_children: int


def structure_counts(tree: ProcessTree) -> StructureCounts:
    """One pass over the tree computing all five counters.

    or_tau_pairs counts (or-node, silent-leaf descendant) pairs;
    eps_body_loops counts loops whose body admits the empty trace;
    concurrent_children counts nodes whose parent is a concurrent node.
    """
    nodes = or_tau = lbe = o_int = p_con = 0

    def walk(t: ProcessTree) -> int:
        nonlocal nodes, or_tau, lbe, o_int, p_con
        nodes += 1
        if isinstance(t, Tau):
            return 1
        if isinstance(t, Leaf):
            return 0
        taus = sum(walk(c) for c in t.children)
        if t.op is Operator.OR:
            or_tau += taus
        elif t.op is Operator.INTERLEAVED:
            o_int += 1
        elif t.op is Operator.CONCURRENT:
            p_con += len(t.children)
        elif t.op is Operator.LOOP and admits_empty_trace(t.children[0]):
            lbe += 1
        return taus

    walk(tree)
    return StructureCounts(nodes, or_tau, lbe, o_int, p_con)


def termination_measure(k: int, tree: ProcessTree) -> int:
    """The weighted polynomial over the structure counters (strictly positive)."""
    n, c, lbe, o, p = structure_counts(tree)
    return n + c * k + lbe * k**3 + o * k**4 + p * k**5


def measure_constant(tree: ProcessTree) -> int:
    """The k used by the engine: the square of (node count + 2)."""
    return (size(tree) + 2) ** 2


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RewriteStep:
    rule: RuleId
    position: TreePath
    size_before: int
    size_after: int
    phi_before: int
    phi_after: int

    def as_dict(self) -> dict:
        return {
            "rule": self.rule.value,
            "path": format_path(self.position),
            "sizeBefore": self.size_before,
            "sizeAfter": self.size_after,
            "phiBefore": self.phi_before,
            "phiAfter": self.phi_after,
        }


@dataclass(frozen=True)
class ReductionTrace:
    steps: tuple[RewriteStep, ...]
    k_used: int

    def as_dict(self) -> dict:
        return {
            "steps": [s.as_dict() for s in self.steps],
            "summary": {"steps": len(self.steps), "k": self.k_used},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def apply_once(tree: ProcessTree, k: int | None = None) -> Optional[tuple[ProcessTree, RewriteStep]]:
    """Apply the first matching rule; None iff the tree is in normal form.

    Positions are scanned depth-first left-to-right (root first) and rules in
    RuleId declaration order at each position.
    """
    if k is None:
        k = measure_constant(tree)
    for path, sub in iter_subtrees(tree):
        for rule in RULE_ORDER:
            results = rewrite_results(rule, sub)
            if results:
                after = replace_at(tree, path, results[0])
                step = RewriteStep(
                    rule=rule,
                    position=path,
                    size_before=size(tree),
                    size_after=size(after),
                    phi_before=termination_measure(k, tree),
                    phi_after=termination_measure(k, after),
                )
                return after, step
    return None


def reduce(tree: ProcessTree) -> tuple[ProcessTree, ReductionTrace]:
    """Rewrite to fixpoint; the result is the unique normal form up to canonicalize.

    The step count is asserted against the measure budget computed from the
    input, which would catch a non-terminating rule interaction.  The measure
    is recorded per step but a local increase is not an error: the pull-up of
    a loop skip can raise it when another redo child admits the empty trace
    (see phi_audit in the oracle module).
    """
    k = measure_constant(tree)
    budget = termination_measure(k, tree)
    steps: list[RewriteStep] = []
    current = tree
    while True:
        outcome = apply_once(current, k)
        if outcome is None:
            break
        current, step = outcome
        steps.append(step)
        if len(steps) > budget:
            raise ReductionError(
                f"reduction exceeded its termination budget of {budget} steps"
            )
    return current, ReductionTrace(tuple(steps), k)


def normal_form(tree: ProcessTree) -> ProcessTree:
    """Convenience wrapper returning only the reduced tree."""
    return reduce(tree)[0]
