"""Bounded trace-language semantics for process trees.

Loops make languages infinite, so enumeration is bounded by a maximum trace
length and a maximum number of redo iterations per loop node.  Within those
bounds the enumeration is exact (no sampling), which makes set equality a
decisive oracle at desk scale.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations

from .errors import ResourceLimitError
from .tree import Leaf, Node, Operator, ProcessTree, Tau

Trace = tuple[str, ...]

#: Extended-natural infinity used by :func:`max_trace_length`.
INFINITE = math.inf

_DEFAULT_CAP = 2_000_000


def default_state_cap() -> int:
    """Enumeration cap (trace sets and net states); TREEREDUCE_STATE_CAP overrides."""
    return int(os.environ.get("TREEREDUCE_STATE_CAP", _DEFAULT_CAP))


@dataclass(frozen=True)
class LangBound:
    """Enumeration bound: maximum trace length and redo iterations per loop."""

    max_trace_len: int
    loop_unroll_depth: int


# ---------------------------------------------------------------------------
# structural predicates
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def admits_empty_trace(tree: ProcessTree) -> bool:
    """Whether the empty trace is in the language, computed structurally.

    Choice operators are disjunctive over their children, composition
    operators conjunctive, and a loop delegates to its body (redo parts are
    optional).
    """
    if isinstance(tree, Leaf):
        return False
    if isinstance(tree, Tau):
        return True
    if tree.op in (Operator.XOR, Operator.OR):
        return any(admits_empty_trace(c) for c in tree.children)
    if tree.op is Operator.LOOP:
        return admits_empty_trace(tree.children[0])
    return all(admits_empty_trace(c) for c in tree.children)


@lru_cache(maxsize=None)
def max_trace_length(tree: ProcessTree):
    """The longest trace length in the language; ``INFINITE`` for pumpable loops.

    A loop is infinite as soon as any child can produce a visible event,
    otherwise its language is {empty trace} and the length is 0.
    """
    if isinstance(tree, Leaf):
        return 1
    if isinstance(tree, Tau):
        return 0
    if tree.op is Operator.XOR:
        return max(max_trace_length(c) for c in tree.children)
    if tree.op is Operator.LOOP:
        if max(max_trace_length(c) for c in tree.children) >= 1:
            return INFINITE
        return 0
    return sum(max_trace_length(c) for c in tree.children)


def exceeds_empty(tree: ProcessTree) -> bool:
    """True iff the language is not exactly {empty trace}.

    Every tree has a non-empty language, so this is equivalent to having a
    trace of length at least one.
    """
    return max_trace_length(tree) >= 1


# ---------------------------------------------------------------------------
# shuffle and enumeration
# ---------------------------------------------------------------------------


def _interleavings(t1: Trace, t2: Trace, memo: dict) -> set[Trace]:
    if not t1:
        return {t2}
    if not t2:
        return {t1}
    key = (t1, t2)
    cached = memo.get(key)
    if cached is not None:
        return cached
    out = {(t1[0],) + rest for rest in _interleavings(t1[1:], t2, memo)}
    out |= {(t2[0],) + rest for rest in _interleavings(t1, t2[1:], memo)}
    memo[key] = out
    return out


def shuffle(s1: set[Trace], s2: set[Trace], cap: int) -> set[Trace]:
    """All order-preserving interleavings of pairs, discarding traces longer than cap."""
    memo: dict = {}
    out: set[Trace] = set()
    for t1 in s1:
        for t2 in s2:
            if len(t1) + len(t2) <= cap:
                out |= _interleavings(t1, t2, memo)
    return out


def enumerate_language(tree: ProcessTree, bound: LangBound, max_traces: int | None = None) -> set[Trace]:
    """Exactly the traces of the language within ``bound``.

    Every intermediate set is truncated at the length bound, which is exact:
    any trace of the whole tree within the bound decomposes into child traces
    within the bound.  Raises :class:`ResourceLimitError` past ``max_traces``
    (default: the global state cap).
    """
    cap = bound.max_trace_len
    unroll = bound.loop_unroll_depth
    limit = max_traces if max_traces is not None else default_state_cap()
    memo: dict[ProcessTree, set[Trace]] = {}
    shuffle_memo: dict = {}

    def checked(s: set[Trace]) -> set[Trace]:
        if len(s) > limit:
            raise ResourceLimitError(f"trace set exceeds {limit} traces")
        return s

    def cat(s1: set[Trace], s2: set[Trace]) -> set[Trace]:
        out: set[Trace] = set()
        for t1 in s1:
            room = cap - len(t1)
            if room < 0:
                continue
            for t2 in s2:
                if len(t2) <= room:
                    out.add(t1 + t2)
        return checked(out)

    def shuf(s1: set[Trace], s2: set[Trace]) -> set[Trace]:
        out: set[Trace] = set()
        for t1 in s1:
            for t2 in s2:
                if len(t1) + len(t2) <= cap:
                    out |= _interleavings(t1, t2, shuffle_memo)
        return checked(out)

    def go(t: ProcessTree) -> set[Trace]:
        hit = memo.get(t)
        if hit is not None:
            return hit
        if isinstance(t, Leaf):
            result = {(t.name,)} if cap >= 1 else set()
        elif isinstance(t, Tau):
            result = {()}
        elif t.op is Operator.XOR:
            result = checked(set().union(*(go(c) for c in t.children)))
        elif t.op is Operator.SEQ:
            result = {()}
            for c in t.children:
                result = cat(result, go(c))
        elif t.op is Operator.CONCURRENT:
            result = {()}
            for c in t.children:
                result = shuf(result, go(c))
        elif t.op is Operator.INTERLEAVED:
            sets = [go(c) for c in t.children]
            result = set()
            for order in permutations(range(len(sets))):
                part: set[Trace] = {()}
                for i in order:
                    part = cat(part, sets[i])
                result |= part
            checked(result)
        elif t.op is Operator.OR:
            sets = [go(c) for c in t.children]
            result = set()
            for k in range(1, len(sets) + 1):
                for chosen in combinations(range(len(sets)), k):
                    part: set[Trace] = {()}
                    for i in chosen:
                        part = shuf(part, sets[i])
                    result |= part
            checked(result)
        else:  # loop: body, then up to `unroll` rounds of (redo body)
            body = go(t.children[0])
            redo = checked(set().union(*(go(c) for c in t.children[1:])))
            ring = cat(redo, body)
            result = set(body)
            term = body
            for _ in range(unroll):
                term = cat(term, ring)
                if not term or term <= result:
                    break
                result |= term
                checked(result)
        memo[t] = result
        return result

    return go(tree)


def format_trace(trace: Trace) -> str:
    """Angle-bracket rendering used in CLI output; the empty trace is ``<>``."""
    return "<" + ",".join(trace) + ">"


def traces_to_json(traces: set[Trace]) -> list[list[str]]:
    """Sorted list-of-lists form for JSON export."""
    return [list(t) for t in sorted(traces)]


# ---------------------------------------------------------------------------
# start and end activities
# ---------------------------------------------------------------------------


def start_activities(tree: ProcessTree) -> frozenset[str]:
    """Activities that occur first in at least one non-empty trace."""
    if isinstance(tree, Leaf):
        return frozenset((tree.name,))
    if isinstance(tree, Tau):
        return frozenset()
    if tree.op is Operator.SEQ:
        out: frozenset[str] = frozenset()
        for child in tree.children:
            out |= start_activities(child)
            if not admits_empty_trace(child):
                break
        return out
    if tree.op is Operator.LOOP:
        out = start_activities(tree.children[0])
        if admits_empty_trace(tree.children[0]):
            for redo in tree.children[1:]:
                out |= start_activities(redo)
        return out
    # xor/or: any child may run; and/int: any child may go first
    return frozenset().union(*(start_activities(c) for c in tree.children))


def end_activities(tree: ProcessTree) -> frozenset[str]:
    """Activities that occur last in at least one non-empty trace."""
    if isinstance(tree, Leaf):
        return frozenset((tree.name,))
    if isinstance(tree, Tau):
        return frozenset()
    if tree.op is Operator.SEQ:
        out: frozenset[str] = frozenset()
        for child in reversed(tree.children):
            out |= end_activities(child)
            if not admits_empty_trace(child):
                break
        return out
    if tree.op is Operator.LOOP:
        out = end_activities(tree.children[0])
        if admits_empty_trace(tree.children[0]):
            for redo in tree.children[1:]:
                out |= end_activities(redo)
        return out
    return frozenset().union(*(end_activities(c) for c in tree.children))
