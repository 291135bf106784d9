"""Membership in the class of trees whose reduced forms are canonical, and a
language-preserving tree inflator used to test that property.

Within the class, two exhaustively reduced trees have the same language if
and only if they are equal up to canonical child order.  Outside it (for
example with duplicate activities) distinct normal forms may share a
language.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from itertools import combinations

from .rules import apply_once, rewrite_results, RuleId
from .semantics import admits_empty_trace, exceeds_empty, max_trace_length
from .tree import (
    Leaf,
    Node,
    Operator,
    ProcessTree,
    TAU,
    Tau,
    TreePath,
    alphabet,
    format_path,
    format_tree,
    iter_subtrees,
    replace_at,
    subtree_at,
)
from .semantics import end_activities, start_activities

#: Condition identifiers used in verdicts (stable wire format).
DUP_ACTIVITIES = "dup-activities"
INT_START_END = "i.start-end"
INT_NESTED = "ii.nested-int"
INT_OPTIONAL = "iii.optional-int"
INT_CON_OR_CHILD = "iv.con-or-child"
LOOP_CON_BODY = "l.i.con-body"
LOOP_REDO_EMPTY = "l.ii.redo-empty"


@dataclass(frozen=True)
class ClassVerdict:
    member: bool
    violations: tuple[tuple[TreePath, str, str], ...]

    def as_dict(self) -> dict:
        return {
            "member": self.member,
            "violations": [
                {"path": format_path(p), "condition": c, "message": m}
                for p, c, m in self.violations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def _is_optional_interleaved(tree: ProcessTree) -> bool:
    # the literal shape xor(tau, int(...)), in either child order
    if not (isinstance(tree, Node) and tree.op is Operator.XOR and len(tree.children) == 2):
        return False
    a, b = tree.children
    for tau_side, other in ((a, b), (b, a)):
        if isinstance(tau_side, Tau) and isinstance(other, Node) and other.op is Operator.INTERLEAVED:
            return True
    return False


def _has_disjoint_start_end(tree: ProcessTree) -> bool:
    return not (start_activities(tree) & end_activities(tree))


def in_class_c(tree: ProcessTree, require_reduced: bool = True) -> ClassVerdict:
    """Check the syntactic class over which reduced forms are canonical.

    The class is defined over reduced trees, so by default a reducible input
    is rejected with ValueError; pass ``require_reduced=False`` to classify
    anyway.  Violations are reported per condition with the path of the node
    (or child) that breaks it.
    """
    if require_reduced and apply_once(tree) is not None:
        raise ValueError("tree is not in normal form; reduce it first")

    violations: list[tuple[TreePath, str, str]] = []
    for path, sub in iter_subtrees(tree):
        if not isinstance(sub, Node):
            continue
        kids = sub.children
        for i, j in combinations(range(len(kids)), 2):
            shared = alphabet(kids[i]) & alphabet(kids[j])
            if shared:
                violations.append(
                    (path, DUP_ACTIVITIES,
                     f"children {i} and {j} share activities {sorted(shared)}")
                )
        if sub.op is Operator.INTERLEAVED:
            if not any(_has_disjoint_start_end(c) for c in kids):
                violations.append(
                    (path, INT_START_END,
                     "no child has disjoint start and end activities")
                )
            for i, c in enumerate(kids):
                if isinstance(c, Node) and c.op is Operator.INTERLEAVED:
                    violations.append((path + (i,), INT_NESTED, "child is interleaved itself"))
                if _is_optional_interleaved(c):
                    violations.append((path + (i,), INT_OPTIONAL, "child is optionally interleaved"))
                if isinstance(c, Node) and c.op in (Operator.CONCURRENT, Operator.OR):
                    if not any(_has_disjoint_start_end(g) for g in c.children):
                        violations.append(
                            (path + (i,), INT_CON_OR_CHILD,
                             "no grandchild has disjoint start and end activities")
                        )
        elif sub.op is Operator.LOOP:
            body = kids[0]
            if isinstance(body, Node) and body.op is Operator.CONCURRENT:
                violations.append((path + (0,), LOOP_CON_BODY, "loop body is concurrent"))
            for i in range(1, len(kids)):
                if admits_empty_trace(kids[i]):
                    violations.append(
                        (path + (i,), LOOP_REDO_EMPTY, "redo child can produce the empty trace")
                    )
    return ClassVerdict(member=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# inflation: random inverse rule applications
# ---------------------------------------------------------------------------

_WRAP_OPS = (Operator.XOR, Operator.SEQ, Operator.CONCURRENT, Operator.INTERLEAVED, Operator.OR)


def _inv_wrap_singleton(sub: ProcessTree, rng: random.Random):
    return Node(rng.choice(_WRAP_OPS), (sub,))


def _inv_nest_assoc(sub: ProcessTree, rng: random.Random):
    if not (isinstance(sub, Node) and sub.op in (Operator.XOR, Operator.SEQ, Operator.CONCURRENT, Operator.OR)):
        return None
    n = len(sub.children)
    if n < 2:
        return None
    if sub.op is Operator.SEQ:
        i = rng.randrange(n)
        j = rng.randrange(i + 1, n + 1)
        chosen = list(range(i, j))
    else:
        k = rng.randint(1, n)
        chosen = sorted(rng.sample(range(n), k))
    inner = Node(sub.op, tuple(sub.children[i] for i in chosen))
    rest = [c for i, c in enumerate(sub.children) if i not in chosen]
    at = rng.randint(0, len(rest))
    return Node(sub.op, tuple(rest[:at]) + (inner,) + tuple(rest[at:]))


def _inv_nest_loop_body(sub: ProcessTree, rng: random.Random):
    if not (isinstance(sub, Node) and sub.op is Operator.LOOP and len(sub.children) >= 3):
        return None
    redos = sub.children[1:]
    split = rng.randint(1, len(redos) - 1)
    inner = Node(Operator.LOOP, (sub.children[0],) + redos[:split])
    return Node(Operator.LOOP, (inner,) + redos[split:])


def _inv_wrap_redo_xor(sub: ProcessTree, rng: random.Random):
    if not (isinstance(sub, Node) and sub.op is Operator.LOOP):
        return None
    redos = list(sub.children[1:])
    k = rng.randint(1, len(redos))
    chosen = sorted(rng.sample(range(len(redos)), k))
    inner = Node(Operator.XOR, tuple(redos[i] for i in chosen))
    rest = [c for i, c in enumerate(redos) if i not in chosen]
    at = rng.randint(0, len(rest))
    new_redos = tuple(rest[:at]) + (inner,) + tuple(rest[at:])
    return Node(Operator.LOOP, (sub.children[0],) + new_redos)


def _inv_insert_tau(sub: ProcessTree, rng: random.Random):
    if not (isinstance(sub, Node) and sub.op in (Operator.SEQ, Operator.CONCURRENT, Operator.INTERLEAVED)):
        return None
    at = rng.randint(0, len(sub.children))
    return Node(sub.op, sub.children[:at] + (TAU,) + sub.children[at:])


def _inv_tau_to_loop(sub: ProcessTree, rng: random.Random):
    if not isinstance(sub, Tau):
        return None
    return Node(Operator.LOOP, (TAU, TAU))


def _inv_add_tau_to_xor(sub: ProcessTree, rng: random.Random):
    if not (isinstance(sub, Node) and sub.op is Operator.XOR):
        return None
    if not any(admits_empty_trace(c) for c in sub.children):
        return None
    at = rng.randint(0, len(sub.children))
    return Node(Operator.XOR, sub.children[:at] + (TAU,) + sub.children[at:])


def _inv_add_tau_redo(sub: ProcessTree, rng: random.Random):
    if not (isinstance(sub, Node) and sub.op is Operator.LOOP):
        return None
    if not any(admits_empty_trace(c) for c in sub.children[1:]):
        return None
    at = rng.randint(1, len(sub.children))
    return Node(Operator.LOOP, sub.children[:at] + (TAU,) + sub.children[at:])


def _skip_shape(sub: ProcessTree):
    """Decompose xor(tau, X) (either order) into X, else None."""
    if not (isinstance(sub, Node) and sub.op is Operator.XOR and len(sub.children) == 2):
        return None
    a, b = sub.children
    if isinstance(a, Tau) and not isinstance(b, Tau):
        return b
    if isinstance(b, Tau) and not isinstance(a, Tau):
        return a
    return None


def _inv_push_down_or_tau(sub: ProcessTree, rng: random.Random):
    inner = _skip_shape(sub)
    if not (isinstance(inner, Node) and inner.op is Operator.OR):
        return None
    at = rng.randint(0, len(inner.children))
    return Node(Operator.OR, inner.children[:at] + (TAU,) + inner.children[at:])


def _inv_push_down_or_xor(sub: ProcessTree, rng: random.Random):
    inner = _skip_shape(sub)
    if not (isinstance(inner, Node) and inner.op is Operator.OR):
        return None
    xor_positions = [
        i for i, c in enumerate(inner.children) if isinstance(c, Node) and c.op is Operator.XOR
    ]
    if not xor_positions:
        return None
    i = rng.choice(xor_positions)
    target = inner.children[i]
    at = rng.randint(0, len(target.children))
    grown = Node(Operator.XOR, target.children[:at] + (TAU,) + target.children[at:])
    return Node(Operator.OR, inner.children[:i] + (grown,) + inner.children[i + 1:])


def _inv_push_down_loop_skip(sub: ProcessTree, rng: random.Random):
    inner = _skip_shape(sub)
    if not (
        isinstance(inner, Node)
        and inner.op is Operator.LOOP
        and len(inner.children) == 2
        and isinstance(inner.children[1], Tau)
        and isinstance(inner.children[0], Node)
        and inner.children[0].op is Operator.XOR
    ):
        return None
    redos = inner.children[0].children
    if not any(exceeds_empty(r) for r in redos):
        return None
    return Node(Operator.LOOP, (TAU,) + redos)


def _inv_con_to_int(sub: ProcessTree, rng: random.Random):
    if not (isinstance(sub, Node) and sub.op is Operator.CONCURRENT):
        return None
    if not all(max_trace_length(c) <= 1 for c in sub.children):
        return None
    return Node(Operator.INTERLEAVED, sub.children)


def _inv_split_or_child(sub: ProcessTree, rng: random.Random):
    if not (isinstance(sub, Node) and sub.op is Operator.CONCURRENT):
        return None
    candidates = [
        i
        for i, c in enumerate(sub.children)
        if isinstance(c, Node)
        and c.op is Operator.OR
        and len(c.children) == 2
        and all(admits_empty_trace(g) for g in c.children)
    ]
    if not candidates:
        return None
    i = rng.choice(candidates)
    inner = sub.children[i]
    return Node(Operator.CONCURRENT, sub.children[:i] + inner.children + sub.children[i + 1:])


_INVERSE_MOVES = (
    _inv_wrap_singleton,
    _inv_nest_assoc,
    _inv_nest_loop_body,
    _inv_wrap_redo_xor,
    _inv_insert_tau,
    _inv_tau_to_loop,
    _inv_add_tau_to_xor,
    _inv_add_tau_redo,
    _inv_push_down_or_tau,
    _inv_push_down_or_xor,
    _inv_push_down_loop_skip,
    _inv_con_to_int,
    _inv_split_or_child,
)


def inflate_step(tree: ProcessTree, rng: random.Random) -> ProcessTree | None:
    """One random inverse rule application, or None when the attempt misses."""
    positions = [path for path, _ in iter_subtrees(tree)]
    path = rng.choice(positions)
    move = rng.choice(_INVERSE_MOVES)
    grown = move(subtree_at(tree, path), rng)
    if grown is None:
        return None
    return replace_at(tree, path, grown)


def inflate(tree: ProcessTree, seed: int, steps: int) -> ProcessTree:
    """Grow a tree by ``steps`` random inverse rule applications.

    Every move is the exact reverse of a reduction rule instance, so the
    language is preserved by construction; attempts whose chosen move does
    not apply at the chosen position are skipped.  Deterministic given the
    seed.
    """
    rng = random.Random(seed)
    current = tree
    for _ in range(steps):
        grown = inflate_step(current, rng)
        if grown is not None:
            current = grown
    return current
