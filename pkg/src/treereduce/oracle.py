"""Brute-force verification harness.

Everything here is seeded and deterministic: random tree generation, per-rule
language-preservation checks (each rule gets a synthesizer that plants its
left-hand side, with guards satisfied, inside a random host tree), confluence
probing via random application orders, and an audit of the termination
measure.  Counterexamples are shrunk by greedy child deletion before they are
reported.
"""

from __future__ import annotations

import json
import random
import string
from dataclasses import dataclass, field

from .rules import (
    RULE_ORDER,
    RuleId,
    all_matches,
    match_at,
    measure_constant,
    reduce,
    rewrite_results,
    termination_measure,
)
from .semantics import LangBound, admits_empty_trace, enumerate_language, exceeds_empty
from .tree import (
    Leaf,
    Node,
    Operator,
    ProcessTree,
    TAU,
    Tau,
    TreePath,
    canonicalize,
    format_tree,
    iter_subtrees,
    replace_at,
    size,
    subtree_at,
    validate,
)

_NON_LOOP_OPS = (Operator.XOR, Operator.SEQ, Operator.INTERLEAVED, Operator.CONCURRENT, Operator.OR)


@dataclass(frozen=True)
class GenConfig:
    """Knobs for the random tree generator."""

    max_depth: int = 4
    max_children: int = 3
    alphabet_size: int = 5
    operator_weights: tuple[tuple[Operator, float], ...] = tuple(
        (op, 1.0) for op in Operator
    )
    tau_probability: float = 0.15
    unique_activities: bool = False


def _alphabet_names(n: int) -> list[str]:
    letters = list(string.ascii_lowercase)
    names = letters[:n]
    while len(names) < n:
        names.append(f"a{len(names)}")
    return names


def _gen_tree(rng: random.Random, config: GenConfig) -> ProcessTree:
    names = _alphabet_names(config.alphabet_size)
    pool = list(names)
    rng.shuffle(pool)
    ops = [op for op, w in config.operator_weights if w > 0]
    weights = [w for op, w in config.operator_weights if w > 0]

    def leaf() -> ProcessTree:
        if rng.random() < config.tau_probability:
            return TAU
        if config.unique_activities:
            return Leaf(pool.pop()) if pool else TAU
        return Leaf(rng.choice(names))

    def grow(depth: int) -> ProcessTree:
        if depth >= config.max_depth or rng.random() < 0.25 + 0.15 * depth:
            return leaf()
        op = rng.choices(ops, weights)[0]
        low = 2 if op is Operator.LOOP else 1
        high = max(config.max_children, low)
        # singletons are legal but rare in practice
        n = low if low == high else rng.choices(
            range(low, high + 1),
            [0.5 if c == 1 else 2.0 for c in range(low, high + 1)],
        )[0]
        return Node(op, tuple(grow(depth + 1) for _ in range(n)))

    return grow(1)


def random_tree(config: GenConfig, seed: int) -> ProcessTree:
    """Deterministic given (config, seed); respects all arity invariants."""
    tree = _gen_tree(random.Random(seed), config)
    assert not validate(tree)
    return tree


# ---------------------------------------------------------------------------
# bounded equivalence
# ---------------------------------------------------------------------------


def bounded_equiv(t1: ProcessTree, t2: ProcessTree, bound: LangBound) -> bool:
    """Exact set equality of the two bounded languages.

    Complete for loop-free trees once the length bound covers the longest
    trace; for loops it is sound for refutation and evidence for equality.
    """
    return enumerate_language(t1, bound) == enumerate_language(t2, bound)


# ---------------------------------------------------------------------------
# probe reports and shrinking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    trials: int
    seed: int
    failures: tuple[tuple[str, str], ...] = ()

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "failures": [{"tree": t, "detail": d} for t, d in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def shrink_tree(tree: ProcessTree, still_fails) -> ProcessTree:
    """Greedy child deletion: drop any child whose removal keeps the failure.

    Also tries promoting a child over its parent.  The predicate is re-run on
    each candidate, so the result is a (locally) minimal failing tree.
    """
    changed = True
    while changed:
        changed = False
        for path, sub in iter_subtrees(tree):
            if not isinstance(sub, Node):
                continue
            low = 2 if sub.op is Operator.LOOP else 1
            candidates = []
            if len(sub.children) > low:
                for i in range(len(sub.children)):
                    if sub.op is Operator.LOOP and i == 0:
                        continue
                    smaller = Node(sub.op, sub.children[:i] + sub.children[i + 1:])
                    candidates.append(replace_at(tree, path, smaller))
            candidates.extend(replace_at(tree, path, child) for child in sub.children)
            for candidate in candidates:
                if still_fails(candidate):
                    tree = candidate
                    changed = True
                    break
            if changed:
                break
    return tree


# ---------------------------------------------------------------------------
# redex synthesis for the per-rule preservation checks
# ---------------------------------------------------------------------------

_SMALL = GenConfig(max_depth=2, max_children=2, alphabet_size=4, tau_probability=0.2)
_HOST = GenConfig(max_depth=3, max_children=2, alphabet_size=5, tau_probability=0.15)


def _small(rng: random.Random) -> ProcessTree:
    return _gen_tree(rng, _SMALL)


def _small_eps(rng: random.Random) -> ProcessTree:
    """A small tree whose language contains the empty trace."""
    pick = rng.randrange(4)
    if pick == 0:
        return TAU
    t = _small(rng)
    if pick == 1:
        return Node(Operator.XOR, (TAU, t))
    if pick == 2:
        return Node(Operator.LOOP, (TAU, t))
    return t if admits_empty_trace(t) else Node(Operator.XOR, (t, TAU))


def _small_visible(rng: random.Random) -> ProcessTree:
    """A small tree whose language is not just the empty trace."""
    t = _small(rng)
    return t if exceeds_empty(t) else Leaf(rng.choice("abcd"))


def _small_short(rng: random.Random) -> ProcessTree:
    """A small tree with no trace longer than one event."""
    pick = rng.randrange(4)
    if pick == 0:
        return TAU
    if pick == 1:
        return Leaf(rng.choice("abcd"))
    kids = tuple(
        TAU if rng.random() < 0.3 else Leaf(rng.choice("abcd"))
        for _ in range(rng.randint(2, 3))
    )
    return Node(Operator.XOR, kids)


def _children(rng: random.Random, low: int, high: int, part=_small) -> list[ProcessTree]:
    return [part(rng) for _ in range(rng.randint(low, high))]


def synthesize_redex(rule: RuleId, rng: random.Random) -> ProcessTree:
    """A subtree at which ``rule`` is guaranteed to match."""
    if rule is RuleId.S:
        op = rng.choice(_NON_LOOP_OPS)
        return Node(op, (_small(rng),))
    if rule in (RuleId.A_XOR, RuleId.A_SEQ, RuleId.A_CON, RuleId.A_OR):
        op = {
            RuleId.A_XOR: Operator.XOR,
            RuleId.A_SEQ: Operator.SEQ,
            RuleId.A_CON: Operator.CONCURRENT,
            RuleId.A_OR: Operator.OR,
        }[rule]
        nested = Node(op, tuple(_children(rng, 1, 3)))
        kids = _children(rng, 0, 2) + [nested]
        rng.shuffle(kids)
        return Node(op, tuple(kids))
    if rule is RuleId.A_LOOP_BODY:
        inner = Node(Operator.LOOP, tuple([_small(rng)] + _children(rng, 1, 2)))
        return Node(Operator.LOOP, tuple([inner] + _children(rng, 1, 2)))
    if rule is RuleId.A_LOOP_REDO:
        xor_redo = Node(Operator.XOR, tuple(_children(rng, 1, 3)))
        redos = _children(rng, 0, 2) + [xor_redo]
        rng.shuffle(redos)
        return Node(Operator.LOOP, tuple([_small(rng)] + redos))
    if rule in (RuleId.T_SEQ, RuleId.T_CON, RuleId.T_INT):
        op = {
            RuleId.T_SEQ: Operator.SEQ,
            RuleId.T_CON: Operator.CONCURRENT,
            RuleId.T_INT: Operator.INTERLEAVED,
        }[rule]
        kids = _children(rng, 1, 3) + [TAU]
        rng.shuffle(kids)
        return Node(op, tuple(kids))
    if rule is RuleId.T_LOOP_BODY_REDO:
        return Node(Operator.LOOP, (TAU, TAU))
    if rule is RuleId.T_XOR:
        kids = _children(rng, 0, 2) + [_small_eps(rng), TAU]
        rng.shuffle(kids)
        return Node(Operator.XOR, tuple(kids))
    if rule is RuleId.T_LOOP_REDO:
        redos = _children(rng, 0, 2) + [_small_eps(rng), TAU]
        rng.shuffle(redos)
        return Node(Operator.LOOP, tuple([_small(rng)] + redos))
    if rule is RuleId.T_OR:
        kids = _children(rng, 1, 3) + [TAU]
        rng.shuffle(kids)
        return Node(Operator.OR, tuple(kids))
    if rule is RuleId.T_OR_XOR:
        inner_kids = _children(rng, 1, 2) + [TAU]
        rng.shuffle(inner_kids)
        inner = Node(Operator.XOR, tuple(inner_kids))
        kids = _children(rng, 0, 2) + [inner]
        rng.shuffle(kids)
        return Node(Operator.OR, tuple(kids))
    if rule is RuleId.T_LOOP_BODY:
        redos = _children(rng, 0, 2) + [_small_visible(rng)]
        rng.shuffle(redos)
        return Node(Operator.LOOP, tuple([TAU] + redos))
    if rule is RuleId.C_INT:
        return Node(Operator.INTERLEAVED, tuple(_children(rng, 1, 4, _small_short)))
    if rule is RuleId.C_OR:
        kids = _children(rng, 0, 2) + [_small_eps(rng), _small_eps(rng)]
        rng.shuffle(kids)
        return Node(Operator.CONCURRENT, tuple(kids))
    raise AssertionError(f"unhandled rule {rule}")


def plant_redex(rule: RuleId, rng: random.Random) -> tuple[ProcessTree, TreePath]:
    """A full tree plus a position where ``rule`` matches.

    Half the time the redex is the whole tree; otherwise it replaces a random
    subtree of a random host, exercising the rule under ancestors.
    """
    redex = synthesize_redex(rule, rng)
    if rng.random() < 0.5:
        return redex, ()
    host = _gen_tree(rng, _HOST)
    positions = [path for path, _ in iter_subtrees(host)]
    path = rng.choice(positions)
    return replace_at(host, path, redex), path


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------


def check_rule_preservation(
    rule: RuleId,
    trials: int,
    bound: LangBound,
    seed: int,
    extra_bounds: tuple[LangBound, ...] = (),
) -> ProbeReport:
    """Plant the rule's redex ``trials`` times and compare bounded languages."""
    rng = random.Random(seed)
    failures: list[tuple[str, str]] = []
    for _ in range(trials):
        tree, path = plant_redex(rule, rng)
        result = match_at(rule, tree, path)
        if result is None:
            failures.append((format_tree(tree), f"synthesized redex did not match {rule.value}"))
            continue
        after = replace_at(tree, path, result)
        for b in (bound, *extra_bounds):
            if not bounded_equiv(tree, after, b):
                def fails(t, r=rule):
                    for p, _ in iter_subtrees(t):
                        res = match_at(r, t, p)
                        if res is not None and not bounded_equiv(t, replace_at(t, p, res), b):
                            return True
                    return False

                small = shrink_tree(tree, fails)
                failures.append(
                    (format_tree(small), f"{rule.value} changed the bounded language at {b}")
                )
                break
    return ProbeReport(trials=trials, seed=seed, failures=tuple(failures))


def confluence_probe(tree: ProcessTree, orders: int, seed: int) -> ProbeReport:
    """Reduce with ``orders`` uniformly random (rule, position) choices.

    Every terminal tree must equal the canonical normal form of the
    deterministic engine.
    """
    rng = random.Random(seed)
    target = canonicalize(reduce(tree)[0])
    budget = termination_measure(measure_constant(tree), tree)
    failures: list[tuple[str, str]] = []
    for index in range(orders):
        current = tree
        steps = 0
        while True:
            matches = all_matches(current)
            if not matches:
                break
            path, rule, result = rng.choice(matches)
            current = replace_at(current, path, result)
            steps += 1
            if steps > budget:
                failures.append((format_tree(tree), f"order {index} exceeded {budget} steps"))
                break
        if steps <= budget and canonicalize(current) != target:
            failures.append(
                (format_tree(tree),
                 f"order {index} reached {format_tree(canonicalize(current))}, "
                 f"expected {format_tree(target)}")
            )
    return ProbeReport(trials=orders, seed=seed, failures=tuple(failures))


def phi_audit(tree: ProcessTree) -> ProbeReport:
    """Check the termination measure along the deterministic reduction.

    Reports a failure for every step where the measure does not strictly
    decrease, and for a step count above the measure of the input.  The
    loop-skip pull-up rule is a known source of increases when another redo
    child admits the empty trace.
    """
    k = measure_constant(tree)
    reduced, trace = reduce(tree)
    budget = termination_measure(k, tree)
    failures: list[tuple[str, str]] = []
    for i, step in enumerate(trace.steps):
        if step.phi_after >= step.phi_before:
            failures.append(
                (format_tree(tree),
                 f"step {i} ({step.rule.value} at {step.position}) raised the measure "
                 f"{step.phi_before} -> {step.phi_after}")
            )
    if len(trace.steps) > budget:
        failures.append((format_tree(tree), f"{len(trace.steps)} steps exceed budget {budget}"))
    return ProbeReport(trials=len(trace.steps), seed=0, failures=tuple(failures))


def merge_reports(reports: list[ProbeReport]) -> ProbeReport:
    return ProbeReport(
        trials=sum(r.trials for r in reports),
        seed=reports[0].seed if reports else 0,
        failures=tuple(sorted(f for r in reports for f in r.failures)),
    )


# ---------------------------------------------------------------------------
# class-membership generator (used by the completeness suite)
# ---------------------------------------------------------------------------


def random_canonical_class_tree(rng: random.Random, attempts: int = 200) -> ProcessTree | None:
    """A reduced tree inside the canonical class, by rejection sampling.

    Unique activities rule out the duplicate-alphabet violations; the
    remaining interleaving/loop conditions are checked after reduction.
    """
    from .canonical import in_class_c

    config = GenConfig(
        max_depth=4,
        max_children=3,
        alphabet_size=8,
        tau_probability=0.15,
        unique_activities=True,
    )
    for _ in range(attempts):
        candidate = _gen_tree(rng, config)
        reduced, _ = reduce(candidate)
        if size(reduced) < 2:
            continue
        if in_class_c(reduced).member:
            return reduced
    return None
