"""Workflow nets: firing semantics, tree translation, bounded language
enumeration, and the silent-transition reduction rules.

The translation is a recursive block construction: every subtree becomes a
fragment with one entry and one exit place.  The interleaved and inclusive
choice gadgets are validated behaviorally (their bounded net language must
match the tree language), not structurally.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum

from .errors import ResourceLimitError
from .semantics import Trace, default_state_cap
from .tree import Leaf, Node, Operator, ProcessTree, Tau

Arc = tuple[str, str]


@dataclass
class PetriNet:
    """A labelled net with weighted arcs; label None marks a silent transition."""

    places: set[str] = field(default_factory=set)
    transitions: dict[str, str | None] = field(default_factory=dict)
    arcs: dict[Arc, int] = field(default_factory=dict)

    def pre(self, node: str) -> dict[str, int]:
        return {src: w for (src, dst), w in self.arcs.items() if dst == node}

    def post(self, node: str) -> dict[str, int]:
        return {dst: w for (src, dst), w in self.arcs.items() if src == node}

    def copy(self) -> "PetriNet":
        return PetriNet(set(self.places), dict(self.transitions), dict(self.arcs))

    def add_arc(self, src: str, dst: str, weight: int = 1) -> None:
        self.arcs[(src, dst)] = self.arcs.get((src, dst), 0) + weight

    def remove_node(self, node: str) -> None:
        self.places.discard(node)
        self.transitions.pop(node, None)
        self.arcs = {a: w for a, w in self.arcs.items() if node not in a}


@dataclass
class WorkflowNet:
    net: PetriNet
    source: str
    sink: str


Marking = Counter


def enabled(net: PetriNet, marking: Marking) -> set[str]:
    """Transitions whose every input place holds at least the arc weight."""
    out = set()
    for t in net.transitions:
        pre = net.pre(t)
        if pre and all(marking.get(p, 0) >= w for p, w in pre.items()):
            out.add(t)
    return out


def fire(net: PetriNet, marking: Marking, transition: str) -> Marking:
    """Consume input weights, produce output weights; error if disabled."""
    pre = net.pre(transition)
    if not pre or any(marking.get(p, 0) < w for p, w in pre.items()):
        raise ValueError(f"transition {transition!r} is not enabled")
    new = Counter(marking)
    for p, w in pre.items():
        new[p] -= w
        if new[p] == 0:
            del new[p]
    for p, w in net.post(transition).items():
        new[p] += w
    return new


# ---------------------------------------------------------------------------
# tree -> workflow net translation
# ---------------------------------------------------------------------------


class _Builder:
    def __init__(self):
        self.net = PetriNet()
        self._p = 0
        self._t = 0

    def place(self) -> str:
        name = f"p{self._p}"
        self._p += 1
        self.net.places.add(name)
        return name

    def trans(self, label: str | None) -> str:
        name = f"t{self._t}"
        self._t += 1
        self.net.transitions[name] = label
        return name

    def arc(self, src: str, dst: str) -> None:
        self.net.add_arc(src, dst, 1)


def tree_to_net(tree: ProcessTree) -> WorkflowNet:
    """Recursive block translation; the result is a sound workflow net.

    Loop blocks get silent enter/leave transitions so redo tokens cannot leak
    into sibling branches.  Interleaving uses a milestone place as a mutual
    exclusion token between per-child grab/release brackets.  Inclusive
    choice uses per-child skip/do tokens plus a none-yet/some pair that
    forces at least one child to execute.
    """
    b = _Builder()
    source = b.place()
    sink = b.place()
    _build(b, tree, source, sink)
    return WorkflowNet(b.net, source, sink)


def _build(b: _Builder, tree: ProcessTree, entry: str, exit_: str) -> None:
    if isinstance(tree, Leaf):
        t = b.trans(tree.name)
        b.arc(entry, t)
        b.arc(t, exit_)
        return
    if isinstance(tree, Tau):
        t = b.trans(None)
        b.arc(entry, t)
        b.arc(t, exit_)
        return

    children = tree.children
    if tree.op is Operator.SEQ:
        current = entry
        for child in children[:-1]:
            nxt = b.place()
            _build(b, child, current, nxt)
            current = nxt
        _build(b, children[-1], current, exit_)
    elif tree.op is Operator.XOR:
        for child in children:
            _build(b, child, entry, exit_)
    elif tree.op is Operator.CONCURRENT:
        split = b.trans(None)
        join = b.trans(None)
        b.arc(entry, split)
        b.arc(join, exit_)
        for child in children:
            begin, end = b.place(), b.place()
            b.arc(split, begin)
            _build(b, child, begin, end)
            b.arc(end, join)
    elif tree.op is Operator.LOOP:
        enter = b.trans(None)
        leave = b.trans(None)
        body_entry, body_exit = b.place(), b.place()
        b.arc(entry, enter)
        b.arc(enter, body_entry)
        b.arc(body_exit, leave)
        b.arc(leave, exit_)
        _build(b, children[0], body_entry, body_exit)
        for redo in children[1:]:
            _build(b, redo, body_exit, body_entry)
    elif tree.op is Operator.INTERLEAVED:
        split = b.trans(None)
        join = b.trans(None)
        milestone = b.place()
        b.arc(entry, split)
        b.arc(split, milestone)
        b.arc(milestone, join)
        b.arc(join, exit_)
        for child in children:
            ready, begin, end, done = b.place(), b.place(), b.place(), b.place()
            grab = b.trans(None)
            release = b.trans(None)
            b.arc(split, ready)
            b.arc(ready, grab)
            b.arc(milestone, grab)
            b.arc(grab, begin)
            _build(b, child, begin, end)
            b.arc(end, release)
            b.arc(release, milestone)
            b.arc(release, done)
            b.arc(done, join)
    elif tree.op is Operator.OR:
        split = b.trans(None)
        join = b.trans(None)
        none_yet = b.place()
        some = b.place()
        b.arc(entry, split)
        b.arc(split, none_yet)
        b.arc(some, join)
        b.arc(join, exit_)
        for child in children:
            choice, begin, end, completed = b.place(), b.place(), b.place(), b.place()
            b.arc(split, choice)
            skip = b.trans(None)
            b.arc(choice, skip)
            b.arc(skip, completed)
            first = b.trans(None)
            b.arc(choice, first)
            b.arc(none_yet, first)
            b.arc(first, begin)
            b.arc(first, some)
            later = b.trans(None)
            b.arc(choice, later)
            b.arc(some, later)
            b.arc(later, begin)
            b.arc(later, some)
            _build(b, child, begin, end)
            finish = b.trans(None)
            b.arc(end, finish)
            b.arc(finish, completed)
            b.arc(completed, join)
    else:  # pragma: no cover
        raise AssertionError(f"unhandled operator {tree.op}")


# ---------------------------------------------------------------------------
# bounded net language
# ---------------------------------------------------------------------------


def _marking_key(marking: Marking) -> tuple:
    return tuple(sorted(marking.items()))


def enumerate_net_language(
    wf: WorkflowNet,
    max_len: int,
    marking_cap: int,
    state_cap: int | None = None,
) -> set[Trace]:
    """Visible-label sequences of firing runs from {source} to exactly {sink}.

    Traces are truncated at ``max_len`` visible events; markings where any
    place exceeds ``marking_cap`` tokens are pruned; exceeding ``state_cap``
    distinct (marking, trace) states raises :class:`ResourceLimitError`,
    which signals an unbounded or too-large state space.
    """
    limit = state_cap if state_cap is not None else default_state_cap()
    net = wf.net
    transitions = sorted(net.transitions)
    table = [
        (net.transitions[t], tuple(net.pre(t).items()), tuple(net.post(t).items()))
        for t in transitions
    ]
    final = ((wf.sink, 1),)
    start = ((wf.source, 1),)

    results: set[Trace] = set()
    seen = {(start, ())}
    queue: deque[tuple[tuple, Trace]] = deque([(start, ())])
    while queue:
        marking_key, trace = queue.popleft()
        if marking_key == final:
            results.add(trace)
            continue
        marking = dict(marking_key)
        for label, pre, post in table:
            if not pre or not all(marking.get(p, 0) >= w for p, w in pre):
                continue
            new = dict(marking)
            for p, w in pre:
                new[p] -= w
                if new[p] == 0:
                    del new[p]
            overflow = False
            for p, w in post:
                new[p] = new.get(p, 0) + w
                if new[p] > marking_cap:
                    overflow = True
            if overflow:
                continue
            new_trace = trace if label is None else trace + (label,)
            if len(new_trace) > max_len:
                continue
            state = (tuple(sorted(new.items())), new_trace)
            if state in seen:
                continue
            seen.add(state)
            if len(seen) > limit:
                raise ResourceLimitError(f"net enumeration exceeds {limit} states")
            queue.append(state)
    return results


# ---------------------------------------------------------------------------
# silent-transition reduction rules
# ---------------------------------------------------------------------------


class NetRuleId(Enum):
    FSP1 = "FSP1"
    FSP2 = "FSP2"
    FST1 = "FST1"
    FST2 = "FST2"
    FRT = "FRT"
    FRP = "FRP"
    SLT = "SLT"


def _id_key(name: str):
    return (name[0], int(name[1:])) if name[1:].isdigit() else (name, 0)


def _silent(net: PetriNet) -> list[str]:
    return sorted((t for t, lbl in net.transitions.items() if lbl is None), key=_id_key)


def _join(d1: dict[str, int], d2: dict[str, int]) -> dict[str, int]:
    out = dict(d1)
    for k, w in d2.items():
        out[k] = out.get(k, 0) + w
    return out


def _scale(d: dict[str, int], x: int) -> dict[str, int]:
    return {k: w * x for k, w in d.items()}


def _merge_places(wf: WorkflowNet, keep: str, drop: str, pre: dict, post: dict) -> None:
    net = wf.net
    net.remove_node(drop)
    net.arcs = {a: w for a, w in net.arcs.items() if keep not in a}
    for src, w in pre.items():
        net.arcs[(src, keep)] = w
    for dst, w in post.items():
        net.arcs[(keep, dst)] = w


def _place_fusion(wf: WorkflowNet, first_producer_only: bool):
    """Shared scan for the two series-place fusions.

    ``first_producer_only=False`` requires the upstream place's only consumer
    to be the silent transition; ``True`` requires the downstream place's
    only producer to be it.  Both demand unit weights on the chain, which
    prevents losing synchronisation, and exactly one of the uniqueness sides,
    which prevents introducing looping behaviour.
    """
    net = wf.net
    special = (wf.source, wf.sink)
    for t in _silent(net):
        pre, post = net.pre(t), net.post(t)
        if len(pre) != 1 or len(post) != 1:
            continue
        (p1, w_in), = pre.items()
        (p2, w_out), = post.items()
        if w_in != 1 or w_out != 1 or p1 == p2:
            continue
        if first_producer_only:
            if set(net.pre(p2)) != {t}:
                continue
            merged_pre = net.pre(p1)
            merged_post = _join({k: w for k, w in net.post(p1).items() if k != t}, net.post(p2))
        else:
            if set(net.post(p1)) != {t}:
                continue
            merged_pre = _join(net.pre(p1), {k: w for k, w in net.pre(p2).items() if k != t})
            merged_post = net.post(p2)
        if p1 in special and p2 in special:
            continue
        keep, drop = (p2, p1) if first_producer_only is False else (p1, p2)
        if p1 in special:
            keep, drop = p1, p2
        elif p2 in special:
            keep, drop = p2, p1
        if keep == wf.source and merged_pre:
            continue
        if keep == wf.sink and merged_post:
            continue
        net.remove_node(t)
        _merge_places(wf, keep, drop, merged_pre, merged_post)
        return (p1, t, p2)
    return None


def _transition_fusion_forward(wf: WorkflowNet):
    """FST1: silent t1 feeding a private place consumed by a single transition."""
    net = wf.net
    for t1 in _silent(net):
        post = net.post(t1)
        if len(post) != 1:
            continue
        (p, w1), = post.items()
        if set(net.pre(p)) != {t1}:
            continue
        consumers = net.post(p)
        if len(consumers) != 1:
            continue
        (t2, w2), = consumers.items()
        if t2 == t1 or t2 not in net.transitions or w1 % w2 != 0:
            continue
        x = w1 // w2
        new_pre = _join(_scale(net.pre(t1), x), {k: w for k, w in net.pre(t2).items() if k != p})
        net.remove_node(t1)
        net.remove_node(p)
        net.arcs = {a: w for a, w in net.arcs.items() if a[1] != t2}
        for src, w in new_pre.items():
            net.arcs[(src, t2)] = w
        return (t1, p, t2)
    return None


def _transition_fusion_backward(wf: WorkflowNet):
    """FST2: silent t2 drained from a private place fed by a single transition."""
    net = wf.net
    for t2 in _silent(net):
        pre = net.pre(t2)
        if len(pre) != 1:
            continue
        (p, w2), = pre.items()
        if set(net.post(p)) != {t2}:
            continue
        producers = net.pre(p)
        if len(producers) != 1:
            continue
        (t1, w1), = producers.items()
        if t1 == t2 or t1 not in net.transitions or w1 != w2:
            continue
        new_post = _join({k: w for k, w in net.post(t1).items() if k != p}, net.post(t2))
        net.remove_node(t2)
        net.remove_node(p)
        net.arcs = {a: w for a, w in net.arcs.items() if a[0] != t1}
        for dst, w in new_post.items():
            net.arcs[(t1, dst)] = w
        return (t1, p, t2)
    return None


def _redundant_transition(wf: WorkflowNet):
    net = wf.net
    silent = _silent(net)
    for i, t1 in enumerate(silent):
        pre1, post1 = net.pre(t1), net.post(t1)
        for t2 in silent[i + 1:]:
            if net.pre(t2) == pre1 and net.post(t2) == post1:
                net.remove_node(t2)
                return (t1, t2)
    return None


def _redundant_place(wf: WorkflowNet):
    net = wf.net
    special = (wf.source, wf.sink)
    places = sorted(net.places, key=_id_key)
    for i, p1 in enumerate(places):
        pre1, post1 = net.pre(p1), net.post(p1)
        for p2 in places[i + 1:]:
            if net.pre(p2) == pre1 and net.post(p2) == post1:
                keep, drop = p1, p2
                if p2 in special:
                    keep, drop = p2, p1
                if drop in special:
                    continue
                net.remove_node(drop)
                return (p1, p2)
    return None


def _self_loop_transition(wf: WorkflowNet):
    net = wf.net
    for t in _silent(net):
        pre = net.pre(t)
        if pre and pre == net.post(t):
            net.remove_node(t)
            return (t,)
    return None


_NET_RULES = (
    (NetRuleId.FSP1, lambda wf: _place_fusion(wf, first_producer_only=False)),
    (NetRuleId.FSP2, lambda wf: _place_fusion(wf, first_producer_only=True)),
    (NetRuleId.FST1, _transition_fusion_forward),
    (NetRuleId.FST2, _transition_fusion_backward),
    (NetRuleId.FRT, _redundant_transition),
    (NetRuleId.FRP, _redundant_place),
    (NetRuleId.SLT, _self_loop_transition),
)


def apply_net_rule_once(wf: WorkflowNet) -> tuple[WorkflowNet, NetRuleId, tuple[str, ...]] | None:
    """Apply the first net rule that matches (fixed rule order, element-id order)."""
    for rule_id, apply_fn in _NET_RULES:
        candidate = WorkflowNet(wf.net.copy(), wf.source, wf.sink)
        hit = apply_fn(candidate)
        if hit is not None:
            return candidate, rule_id, tuple(hit)
    return None


def reduce_net(wf: WorkflowNet) -> tuple[WorkflowNet, list[tuple[NetRuleId, tuple[str, ...]]]]:
    """Apply the silent-transition rules to fixpoint.

    Every application removes a place or a transition, so the step count is
    bounded by the initial node count.  Labelled transitions and the source
    and sink places are never removed.
    """
    steps: list[tuple[NetRuleId, tuple[str, ...]]] = []
    current = wf
    while True:
        outcome = apply_net_rule_once(current)
        if outcome is None:
            return current, steps
        current, rule_id, ids = outcome
        steps.append((rule_id, ids))


def net_size(wf: WorkflowNet) -> int:
    """Places + transitions + arc count (weights are not multiplied in)."""
    return len(wf.net.places) + len(wf.net.transitions) + len(wf.net.arcs)


# ---------------------------------------------------------------------------
# validation and serialization
# ---------------------------------------------------------------------------


def validate_workflow(net: PetriNet, source: str, sink: str) -> list[str]:
    """The three workflow conditions; an empty list means the net is well formed."""
    violations = []
    if net.pre(source):
        violations.append(f"source {source!r} has incoming arcs")
    if net.post(sink):
        violations.append(f"sink {sink!r} has outgoing arcs")

    def reach(start: str, forward: bool) -> set[str]:
        seen = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            adjacent = net.post(node) if forward else net.pre(node)
            for nxt in adjacent:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen

    forward = reach(source, True)
    backward = reach(sink, False)
    for element in sorted(net.places | set(net.transitions), key=_id_key):
        if element in (source, sink):
            continue
        if element not in forward or element not in backward:
            violations.append(f"{element!r} is not on a path from source to sink")
    return violations


def net_to_json(wf: WorkflowNet) -> dict:
    return {
        "places": sorted(wf.net.places, key=_id_key),
        "transitions": [
            {"id": t, "label": wf.net.transitions[t]}
            for t in sorted(wf.net.transitions, key=_id_key)
        ],
        "arcs": [
            {"from": src, "to": dst, "weight": w}
            for (src, dst), w in sorted(wf.net.arcs.items(), key=lambda kv: (_id_key(kv[0][0]), _id_key(kv[0][1])))
        ],
        "source": wf.source,
        "sink": wf.sink,
    }


def net_from_json(data: dict) -> WorkflowNet:
    net = PetriNet(
        places=set(data["places"]),
        transitions={t["id"]: t["label"] for t in data["transitions"]},
        arcs={(a["from"], a["to"]): a.get("weight", 1) for a in data["arcs"]},
    )
    return WorkflowNet(net, data["source"], data["sink"])


def export_dot(wf: WorkflowNet) -> str:
    """Graphviz rendering: places as circles, silent transitions filled boxes."""
    lines = ["digraph workflow {", "  rankdir=LR;"]
    for p in sorted(wf.net.places, key=_id_key):
        note = " (source)" if p == wf.source else " (sink)" if p == wf.sink else ""
        lines.append(f'  "{p}" [shape=circle, label="", xlabel="{p}{note}"];')
    for t in sorted(wf.net.transitions, key=_id_key):
        label = wf.net.transitions[t]
        if label is None:
            lines.append(f'  "{t}" [shape=box, style=filled, fillcolor=black, label="", width=0.15];')
        else:
            lines.append(f'  "{t}" [shape=box, label="{label}"];')
    for (src, dst), w in sorted(wf.net.arcs.items(), key=lambda kv: (_id_key(kv[0][0]), _id_key(kv[0][1]))):
        attr = f' [label="{w}"]' if w != 1 else ""
        lines.append(f'  "{src}" -> "{dst}"{attr};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def net_json_dumps(wf: WorkflowNet) -> str:
    return json.dumps(net_to_json(wf), indent=2)
