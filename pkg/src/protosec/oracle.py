"""Dolev-Yao cross-checks for the static verdicts.

``probe_full_invariance`` looks for knowledge sets from which the intruder can
build a message that lowers a metric's value for some atom.
``bounded_attack_search`` runs a few sessions of every role against an intruder
in control of the network and reports a trace when a secret leaks.
"""

from __future__ import annotations

import random
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass, replace
from itertools import product, zip_longest

import structlog

from .analyzer import Metric
from .config import DEFAULT_SEED
from .context import VerificationContext
from .deduction import KnowledgeSet, derives  # noqa: F401
from .errors import SearchBudgetExceeded
from .interpretation import dek, dekan
from .lattice import BOTTOM, TOP, SecurityLevel, geq_provable, join_all, meet_all
from .roles import GeneralizedRole, ProtocolSpec, RoleRule, extract_generalized_roles
from .terms import (
    EPSILON,
    Atom,
    Concat,
    Enc,
    Message,
    Sort,
    Substitution,
    Variable,
    apply_subst,
    atoms_of,
    components,
    concat,
    is_ground,
    occurs,
    render,
    unify,
)
from .witness import f_max_ik

log = structlog.get_logger(__name__)

MetricFunction = Callable[[Atom, Message, VerificationContext], SecurityLevel]


@dataclass(frozen=True)
class Counterexample:
    messages: tuple[Message, ...]
    derived: Message
    subject: Atom
    derived_level: SecurityLevel
    source_level: SecurityLevel
    clearance: SecurityLevel

    def describe(self) -> str:
        knowledge = ", ".join(render(m) for m in self.messages)
        return (
            f"from {{{knowledge}}} the intruder builds {render(self.derived)}: "
            f"{render(self.subject)} drops from {self.source_level} to {self.derived_level}"
        )


def _metric_function(metric: Metric | MetricFunction) -> MetricFunction:
    if metric is Metric.WITNESS:
        return f_max_ik
    if metric is Metric.DEK:
        return dek
    if metric is Metric.DEKAN:
        return dekan
    return metric


def _measure(fn: MetricFunction, subject: Atom, m: Message, ctx: VerificationContext) -> SecurityLevel:
    """Apply ``fn`` component-wise with the well-formedness clauses enforced."""
    levels = []
    for comp in components(m):
        if comp == subject:
            return BOTTOM
        if not occurs(subject, comp):
            levels.append(TOP)
        else:
            levels.append(fn(subject, comp, ctx))
    return meet_all(levels)


def _clearance(closure: frozenset[Message], subject: Atom, ctx: VerificationContext) -> SecurityLevel:
    """⌜K(I)⌝: the join of the levels of every other atom the intruder holds."""
    levels = []
    for item in closure:
        if isinstance(item, Atom) and item != subject and ctx.has_level(item):
            levels.append(ctx.level_of(item))
    return join_all(levels)


def _key_atoms(ctx: VerificationContext) -> list[Atom]:
    keys = []
    for entry in ctx.keys.values():
        keys.extend((entry.key, entry.inverse))
    return sorted(keys, key=render)


def _probed_atoms(ctx: VerificationContext) -> list[Atom]:
    return sorted(
        (a for a in ctx.atoms() if ctx.has_level(a) and not ctx.level_of(a).is_bottom),
        key=render,
    )


def _structured_corpus(ctx: VerificationContext) -> Iterator[tuple[Message, ...]]:
    keys = _key_atoms(ctx)
    for atom, key, extra in product(_probed_atoms(ctx), keys, keys):
        yield (Enc(atom, key), extra)


def _random_message(rng: random.Random, atoms: Sequence[Atom], keys: Sequence[Atom], depth: int) -> Message:
    roll = rng.random()
    if depth <= 0 or roll < 0.4:
        return rng.choice(atoms)
    if roll < 0.7:
        width = rng.randint(2, 3)
        return concat(*(_random_message(rng, atoms, keys, depth - 1) for _ in range(width)))
    return Enc(_random_message(rng, atoms, keys, depth - 1), rng.choice(keys))


def _compositions(previous: Sequence[Message], closure: Sequence[Message], keys: Sequence[Atom]) -> Iterator[Message]:
    """One more intruder step on each of ``previous``, taken round robin so every item gets a turn."""
    steps = [[Enc(m, k) for k in keys] + [concat(m, other) for other in closure] for m in previous]
    for batch in zip_longest(*steps):
        yield from (m for m in batch if m is not None)


def _candidates(knowledge: KnowledgeSet, depth: int, limit: int) -> list[Message]:
    """The analysis closure, then compositions of it up to ``depth`` steps deep.

    At most ``limit`` composed messages are kept, split evenly across the depths.
    """
    closure = sorted(knowledge.closure(), key=render)
    keys = [m for m in closure if isinstance(m, Atom) and m.sort is Sort.KEY]
    found = list(closure)
    seen = set(found)
    share = max(1, limit // max(depth, 1))
    level = closure
    for _ in range(depth):
        composed = []
        for m in _compositions(level, closure, keys):
            if m not in seen:
                seen.add(m)
                composed.append(m)
                if len(composed) == share:
                    break
        if not composed:
            break
        found.extend(composed)
        level = composed
    return found


def probe_full_invariance(
    metric: Metric | MetricFunction,
    ctx: VerificationContext,
    trials: int,
    *,
    depth: int = 2,
    max_messages: int = 3,
    max_candidates: int = 48,
    seed: int = DEFAULT_SEED,
    stop_at_first: bool = False,
) -> list[Counterexample]:
    """Search for M ⊨ m with F(α, m) below F(α, M) while ⌜K(I)⌝ does not cover ⌜α⌝.

    Trials start with every ``{a}k, k'`` set over the context's atoms and keys,
    then continue with random sets of at most ``max_messages`` messages.
    """
    fn = _metric_function(metric)
    rng = random.Random(seed)
    atoms = sorted(ctx.atoms(), key=render)
    keys = _key_atoms(ctx)
    if not keys:
        log.warning("no_keys_declared", note="probing plaintext only")
    intruder = tuple(sorted(ctx.intruder_knowledge, key=render))
    corpus = _structured_corpus(ctx)
    found: list[Counterexample] = []
    for trial in range(trials):
        sample = next(corpus, None)
        if sample is None:
            width = rng.randint(1, max_messages)
            sample = tuple(_random_message(rng, atoms, keys or atoms, depth) for _ in range(width))
        total = sample + intruder
        knowledge = KnowledgeSet(total)
        closure = knowledge.closure()
        for derived in _candidates(knowledge, depth, max_candidates):
            for subject in sorted(atoms_of(derived), key=render):
                if not ctx.has_level(subject) or ctx.level_of(subject).is_bottom:
                    continue
                source = meet_all(_measure(fn, subject, m, ctx) for m in total)
                target = _measure(fn, subject, derived, ctx)
                if geq_provable(target, source):
                    continue
                clearance = _clearance(closure, subject, ctx)
                if geq_provable(clearance, ctx.level_of(subject)):
                    continue
                found.append(Counterexample(sample, derived, subject, target, source, clearance))
                log.debug("counterexample", trial=trial, subject=render(subject), derived=render(derived))
                if stop_at_first:
                    return found
    log.info("probe_done", trials=trials, counterexamples=len(found))
    return found


@dataclass(frozen=True)
class TraceStep:
    session: int
    role: str
    rule_index: int
    received: Message
    sent: Message
    received_from: str | None = None
    sent_to: str | None = None

    def narration(self) -> list[str]:
        lines = []
        if self.received != EPSILON:
            lines.append(f"I({self.received_from or '?'}) → {self.role} : {render(self.received)}")
        if self.sent != EPSILON:
            lines.append(f"{self.role} → I({self.sent_to or '?'}) : {render(self.sent)}")
        return lines


@dataclass(frozen=True)
class AttackTrace:
    steps: tuple[TraceStep, ...]
    leaked: Atom

    def narration(self) -> list[str]:
        lines = [line for step in self.steps for line in step.narration()]
        lines.append(f"I knows {render(self.leaked)}")
        return lines


@dataclass(frozen=True)
class _Instance:
    session: int
    role: str
    rules: tuple[RoleRule, ...]


def _instantiate(m: Message, session: int) -> Message:
    if isinstance(m, Atom):
        if m.session_index is not None:
            return replace(m, session_index=str(session))
        return m
    if isinstance(m, Variable):
        return Variable(f"{m.name}#{session}", m.sort, m.pattern_index, inverse=m.inverse)
    if isinstance(m, Concat):
        return concat(*(_instantiate(part, session) for part in m.parts))
    return Enc(_instantiate(m.body, session), _instantiate(m.key, session))


def _instances(roles: Sequence[GeneralizedRole], sessions: int) -> list[_Instance]:
    instances = []
    for session in range(1, sessions + 1):
        for role in roles:
            rules = list(role.rules)
            # a final receive with nothing sent cannot teach the intruder anything
            while rules and rules[-1].sent == EPSILON:
                rules.pop()
            instantiated = tuple(
                replace(r, received=_instantiate(r.received, session), sent=_instantiate(r.sent, session))
                for r in rules
            )
            if instantiated:
                instances.append(_Instance(session, role.agent, instantiated))
    return instances


def _accepts_candidate(var: Variable, item: Message) -> bool:
    if var.sort is Sort.ANY:
        return isinstance(item, (Atom, Enc))
    if isinstance(item, Atom) and item.sort is var.sort:
        return var.sort is not Sort.KEY or item.is_inverse == var.inverse
    return False


def _match(pattern: Message, knowledge: KnowledgeSet, sigma: Mapping[Variable, Message]) -> Iterator[dict]:
    """Bindings under which ``pattern`` is derivable, drawn from the closure."""
    pattern = apply_subst(pattern, Substitution(sigma)) if sigma else pattern
    if is_ground(pattern):
        if knowledge.can_derive(pattern):
            yield dict(sigma)
        return
    closure = sorted(knowledge.closure(), key=render)
    if isinstance(pattern, Variable):
        for item in closure:
            if _accepts_candidate(pattern, item):
                yield {**sigma, pattern: item}
        return
    if isinstance(pattern, Concat):
        head, *rest = pattern.parts
        for partial in _match(head, knowledge, sigma):
            yield from _match(concat(*rest), knowledge, partial)
        return
    for item in closure:
        if isinstance(item, Enc):
            unifier = unify(pattern, item)
            if unifier is not None:
                yield {**sigma, **dict(unifier.items())}
    for partial in _match(pattern.key, knowledge, sigma):
        yield from _match(pattern.body, knowledge, partial)


def _leaked(knowledge: KnowledgeSet, secret: Atom) -> Atom | None:
    for item in knowledge.closure():
        if isinstance(item, Atom) and item.name == secret.name and item.sort is secret.sort:
            return item
    return None


def bounded_attack_search(
    spec: ProtocolSpec,
    ctx: VerificationContext,
    sessions: int,
    secret: Atom,
    *,
    node_cap: int = 200_000,
    roles: Sequence[GeneralizedRole] | None = None,
) -> AttackTrace | None:
    """Depth-first search over interleavings of ``sessions`` runs of every role.

    Returns the first trace, in a fixed branch order, after which ``secret`` is
    derivable by the intruder; ``None`` when the bounded space is exhausted.
    """
    if roles is None:
        roles = extract_generalized_roles(spec, ctx)
    instances = _instances(roles, sessions)
    start = KnowledgeSet(ctx.intruder_knowledge)
    visited: set = set()
    nodes = 0

    def fire(position: list[int], knowledge: KnowledgeSet, sigma: dict, trace: list[TraceStep]):
        # rules waiting on nothing run as soon as they are reached
        progressed = True
        while progressed:
            progressed = False
            for i, inst in enumerate(instances):
                if position[i] < len(inst.rules) and inst.rules[position[i]].received == EPSILON:
                    rule = inst.rules[position[i]]
                    sent = apply_subst(rule.sent, Substitution(sigma)) if sigma else rule.sent
                    knowledge = knowledge.add(sent)
                    trace.append(TraceStep(inst.session, inst.role, position[i] + 1, EPSILON, sent, None, rule.sent_to))
                    position[i] += 1
                    progressed = True
        return knowledge

    def search(position: tuple[int, ...], knowledge: KnowledgeSet, sigma: dict, trace: list[TraceStep]):
        nonlocal nodes
        nodes += 1
        if nodes > node_cap:
            raise SearchBudgetExceeded(nodes - 1)
        leaked = _leaked(knowledge, secret)
        if leaked is not None:
            return AttackTrace(tuple(trace), leaked)
        key = (position, knowledge.messages, frozenset(sigma.items()))
        if key in visited:
            return None
        visited.add(key)
        for i, inst in enumerate(instances):
            if position[i] >= len(inst.rules):
                continue
            rule = inst.rules[position[i]]
            for binding in _match(rule.received, knowledge, sigma):
                bound = Substitution(binding)
                received = apply_subst(rule.received, bound)
                sent = apply_subst(rule.sent, bound)
                step = TraceStep(
                    inst.session, inst.role, position[i] + 1, received, sent, rule.received_from, rule.sent_to
                )
                next_position = list(position)
                next_position[i] += 1
                next_trace = trace + [step]
                next_knowledge = fire(next_position, knowledge.add(sent), binding, next_trace)
                found = search(tuple(next_position), next_knowledge, binding, next_trace)
                if found is not None:
                    return found
        return None

    position = [0] * len(instances)
    trace: list[TraceStep] = []
    knowledge = fire(position, start, {}, trace)
    result = search(tuple(position), knowledge, {}, trace)
    log.info("attack_search_done", sessions=sessions, secret=render(secret), nodes=nodes, leaked=result is not None)
    return result
