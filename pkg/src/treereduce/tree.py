"""Process-tree terms: parsing, printing, canonical ordering and basic metrics.

A tree is an activity leaf, a silent leaf (``tau``), or an operator node
with one or more children.  All values are immutable and hashable, so trees
can be used as dict keys and set members directly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union

from .errors import ParseError


class Operator(Enum):
    """The six node operators, keyed by their textual keyword."""

    XOR = "xor"
    SEQ = "seq"
    INTERLEAVED = "int"
    CONCURRENT = "and"
    OR = "or"
    LOOP = "loop"


#: Unicode rendering used by ``format_tree(..., glyphs=True)``.
GLYPHS = {
    Operator.XOR: "×",
    Operator.SEQ: "→",
    Operator.INTERLEAVED: "↔",
    Operator.CONCURRENT: "∧",
    Operator.OR: "∨",
    Operator.LOOP: "⟲",
}

TAU_KEYWORD = "tau"
ACTIVITY_RE = re.compile(r"[A-Za-z0-9_]+\Z")
_OPERATOR_KEYWORDS = {op.value: op for op in Operator}


@dataclass(frozen=True)
class Leaf:
    """A visible activity."""

    name: str


@dataclass(frozen=True)
class Tau:
    """The silent step; its language is the empty trace only."""


@dataclass(frozen=True)
class Node:
    """An operator applied to an ordered, non-empty tuple of children."""

    op: Operator
    children: tuple["ProcessTree", ...]


ProcessTree = Union[Leaf, Tau, Node]
TreePath = tuple[int, ...]

TAU = Tau()


def node(op: Operator, children) -> Node:
    return Node(op, tuple(children))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN_IDENT = "ident"
_TOKEN_LPAREN = "("
_TOKEN_RPAREN = ")"
_TOKEN_COMMA = ","
_TOKEN_END = "end"


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, column = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            column = 1
            i += 1
        elif ch.isspace():
            column += 1
            i += 1
        elif ch in "(),":
            tokens.append(_Token(ch, ch, line, column))
            column += 1
            i += 1
        else:
            m = re.match(r"[A-Za-z0-9_]+", text[i:])
            if not m:
                raise ParseError(f"unexpected character {ch!r}", line, column)
            tokens.append(_Token(_TOKEN_IDENT, m.group(), line, column))
            column += len(m.group())
            i += len(m.group())
    tokens.append(_Token(_TOKEN_END, "", line, column))
    return tokens


def parse_tree(text: str) -> ProcessTree:
    """Parse the textual grammar ``tree := IDENT | "tau" | OP "(" tree ("," tree)* ")"``.

    Raises :class:`ParseError` with a 1-based line/column on syntax or arity
    violations (a ``loop`` node needs a body and at least one redo child).
    """
    tokens = _tokenize(text)
    tree, pos = _parse(tokens, 0)
    tail = tokens[pos]
    if tail.kind != _TOKEN_END:
        raise ParseError(f"unexpected trailing input {tail.text!r}", tail.line, tail.column)
    return tree


def _parse(tokens: list[_Token], pos: int) -> tuple[ProcessTree, int]:
    tok = tokens[pos]
    if tok.kind != _TOKEN_IDENT:
        what = "end of input" if tok.kind == _TOKEN_END else repr(tok.text)
        raise ParseError(f"expected an activity, 'tau' or an operator, got {what}", tok.line, tok.column)
    if tokens[pos + 1].kind == _TOKEN_LPAREN:
        op = _OPERATOR_KEYWORDS.get(tok.text)
        if op is None:
            raise ParseError(f"unknown operator {tok.text!r}", tok.line, tok.column)
        pos += 2
        children = []
        while True:
            child, pos = _parse(tokens, pos)
            children.append(child)
            if tokens[pos].kind == _TOKEN_COMMA:
                pos += 1
                continue
            break
        closing = tokens[pos]
        if closing.kind != _TOKEN_RPAREN:
            raise ParseError("expected ',' or ')'", closing.line, closing.column)
        if op is Operator.LOOP and len(children) < 2:
            raise ParseError("loop needs a body and at least one redo child", tok.line, tok.column)
        return Node(op, tuple(children)), pos + 1
    if tok.text == TAU_KEYWORD:
        return TAU, pos + 1
    return Leaf(tok.text), pos + 1


def format_tree(tree: ProcessTree, glyphs: bool = False) -> str:
    """Render a tree in the grammar accepted by :func:`parse_tree`.

    With ``glyphs=True`` the operator keywords are replaced by their
    mathematical symbols (output only, not parseable back).
    """
    if isinstance(tree, Leaf):
        return tree.name
    if isinstance(tree, Tau):
        return "τ" if glyphs else TAU_KEYWORD
    head = GLYPHS[tree.op] if glyphs else tree.op.value
    return head + "(" + ",".join(format_tree(c, glyphs) for c in tree.children) + ")"


# ---------------------------------------------------------------------------
# canonical ordering
# ---------------------------------------------------------------------------

_OP_RANK = {op: i for i, op in enumerate(Operator)}


def sort_key(tree: ProcessTree):
    """A fixed total order on trees: leaf < tau < node, then operator, then children."""
    if isinstance(tree, Leaf):
        return (0, tree.name)
    if isinstance(tree, Tau):
        return (1,)
    return (2, _OP_RANK[tree.op], tuple(sort_key(c) for c in tree.children))


def canonicalize(tree: ProcessTree) -> ProcessTree:
    """Sort the order-insensitive child lists under :func:`sort_key`.

    Children of xor/and/or/int nodes are order-insensitive by the language
    semantics, as are loop redo children; seq children and the loop body keep
    their positions.  Canonical equality is the operational meaning of
    "isomorphic" used by the confluence and completeness checks.
    """
    if not isinstance(tree, Node):
        return tree
    children = tuple(canonicalize(c) for c in tree.children)
    if tree.op is Operator.SEQ:
        return Node(tree.op, children)
    if tree.op is Operator.LOOP:
        return Node(tree.op, (children[0],) + tuple(sorted(children[1:], key=sort_key)))
    return Node(tree.op, tuple(sorted(children, key=sort_key)))


# ---------------------------------------------------------------------------
# metrics and structure helpers
# ---------------------------------------------------------------------------


def size(tree: ProcessTree) -> int:
    """Total number of leaves and operator nodes."""
    if isinstance(tree, Node):
        return 1 + sum(size(c) for c in tree.children)
    return 1


def alphabet(tree: ProcessTree) -> frozenset[str]:
    """The set of activity names of all non-silent leaves."""
    if isinstance(tree, Leaf):
        return frozenset((tree.name,))
    if isinstance(tree, Tau):
        return frozenset()
    return frozenset().union(*(alphabet(c) for c in tree.children))


def validate(tree: ProcessTree) -> list[tuple[TreePath, str]]:
    """Structural invariant check; an empty list means the tree is well formed.

    Singleton non-loop nodes are legal input (the reduction engine removes
    them); a loop with fewer than two children or an empty node is not.
    """
    violations: list[tuple[TreePath, str]] = []
    for path, sub in iter_subtrees(tree):
        if isinstance(sub, Leaf):
            if not ACTIVITY_RE.match(sub.name):
                violations.append((path, f"invalid activity name {sub.name!r}"))
            elif sub.name == TAU_KEYWORD:
                violations.append((path, "activity name 'tau' is reserved"))
        elif isinstance(sub, Node):
            if len(sub.children) == 0:
                violations.append((path, "operator node has no children"))
            elif sub.op is Operator.LOOP and len(sub.children) < 2:
                violations.append((path, "loop node needs a body and at least one redo child"))
    return violations


def iter_subtrees(tree: ProcessTree, path: TreePath = ()) -> Iterator[tuple[TreePath, ProcessTree]]:
    """Pre-order traversal yielding (path, subtree) pairs; the root path is ()."""
    yield path, tree
    if isinstance(tree, Node):
        for i, child in enumerate(tree.children):
            yield from iter_subtrees(child, path + (i,))


def subtree_at(tree: ProcessTree, path: TreePath) -> ProcessTree:
    for index in path:
        if not isinstance(tree, Node) or index >= len(tree.children):
            raise IndexError(f"path {path} does not address a subtree")
        tree = tree.children[index]
    return tree


def replace_at(tree: ProcessTree, path: TreePath, replacement: ProcessTree) -> ProcessTree:
    if not path:
        return replacement
    if not isinstance(tree, Node) or path[0] >= len(tree.children):
        raise IndexError(f"path {path} does not address a subtree")
    i = path[0]
    child = replace_at(tree.children[i], path[1:], replacement)
    return Node(tree.op, tree.children[:i] + (child,) + tree.children[i + 1:])


def format_path(path: TreePath) -> str:
    """Slash-separated child indices; the root is the empty string."""
    return "/".join(str(i) for i in path)
