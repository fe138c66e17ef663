"""Protocol specifications, generalized roles and encryption patterns.

A generalized role is the protocol seen from one honest agent: everything it
receives comes from the intruder, and every part of a received message that the
agent can neither read nor rebuild is replaced by a fresh variable.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace
from itertools import count

import structlog

from .context import VerificationContext
from .deduction import KnowledgeSet
from .errors import MalformedSpec
from .terms import (
    EPSILON,
    Atom,
    Concat,
    Enc,
    Message,
    Sort,
    Substitution,
    Variable,
    components,
    concat,
    invert,
    rename_with_index,
    render,
    unify,
    vars_of,
)

log = structlog.get_logger(__name__)

SESSION = "i"
_POOL = ("X", "Y", "Z", "T", "U", "V", "W")


@dataclass(frozen=True)
class Step:
    id: int
    sender: str
    receiver: str
    message: Message


@dataclass(frozen=True)
class RoleRule:
    """One session rule: what the agent receives (possibly ε), then what it sends."""

    received: Message
    sent: Message
    received_from: str | None = None
    sent_to: str | None = None


@dataclass(frozen=True)
class GeneralizedRole:
    agent: str
    rules: tuple[RoleRule, ...]
    variables: tuple[Variable, ...] = ()

    def received_prefix(self, index: int) -> Message:
        """R⁻ of rule ``index``: every receive up to and including that rule."""
        return concat(*(rule.received for rule in self.rules[: index + 1]))


@dataclass(frozen=True)
class ProtocolSpec:
    steps: tuple[Step, ...]
    fresh: Mapping[str, frozenset[Atom]] = field(default_factory=dict)
    # explicit generalized roles; when present they replace derivation
    roles: tuple[GeneralizedRole, ...] = ()

    def fresh_atoms(self) -> frozenset[Atom]:
        return frozenset(a for atoms in self.fresh.values() for a in atoms)

    def participants(self) -> set[str]:
        return {s.sender for s in self.steps} | {s.receiver for s in self.steps}


@dataclass(frozen=True)
class EncryptionPattern:
    index: int
    term: Enc
    role: str
    origin: Enc


def variable_names() -> Iterator[str]:
    """X, Y, Z, T, U, V, W, then X1, Y1, ... ."""
    yield from _POOL
    for n in count(1):
        for name in _POOL:
            yield f"{name}{n}"


def check_spec(spec: ProtocolSpec, ctx: VerificationContext) -> None:
    last = None
    for step in spec.steps:
        if last is not None and step.id <= last:
            raise MalformedSpec(f"step {step.id} follows step {last}: ids must increase")
        last = step.id
        for agent in (step.sender, step.receiver):
            if agent not in ctx.principals:
                raise MalformedSpec(f"step {step.id}: unknown principal {agent}")
            if agent == ctx.intruder:
                raise MalformedSpec(f"step {step.id}: the intruder is not a protocol participant")
        if step.sender == step.receiver:
            raise MalformedSpec(f"step {step.id}: {step.sender} sends to itself")
    for agent in spec.fresh:
        if agent not in ctx.principals:
            raise MalformedSpec(f"fresh atoms declared for unknown principal {agent}")


class _RoleBuilder:
    """Walks the steps of one agent, abstracting what it receives."""

    def __init__(self, agent: str, spec: ProtocolSpec, ctx: VerificationContext, names: Iterator[str]):
        self.agent = agent
        self.own_fresh = spec.fresh.get(agent, frozenset())
        self.knowledge = KnowledgeSet(ctx.knowledge.get(agent, frozenset()) | self.own_fresh)
        self.names = names
        self.memo: dict[Message, Message] = {}
        self.variables: list[Variable] = []

    def _fresh_variable(self, sort: Sort) -> Variable:
        var = Variable(next(self.names), sort)
        self.variables.append(var)
        return var

    def _session_form(self, atom: Atom) -> Atom:
        if atom in self.own_fresh and atom.sort is Sort.NONCE:
            return replace(atom, session_index=SESSION)
        return atom

    def abstract(self, m: Message, knowledge: KnowledgeSet) -> Message:
        if m in self.memo:
            return self.memo[m]
        if isinstance(m, Atom):
            if knowledge.can_derive(m):
                return self._session_form(m)
            result = self._fresh_variable(m.sort)
        elif isinstance(m, Concat):
            return concat(*(self.abstract(part, knowledge) for part in m.parts))
        elif isinstance(m, Enc):
            if knowledge.can_derive(invert(m.key)):
                return Enc(self.abstract(m.body, knowledge), self.localize(m.key))
            if knowledge.can_derive(m):
                return self.localize(m)
            result = self._fresh_variable(Sort.ANY)
        else:
            raise MalformedSpec(f"protocol steps must be ground, found {render(m)}")
        self.memo[m] = result
        return result

    def receive(self, m: Message) -> Message:
        abstracted = self.abstract(m, self.knowledge)
        self.knowledge = self.knowledge.add(m)
        return abstracted

    def localize(self, m: Message) -> Message:
        if m in self.memo:
            return self.memo[m]
        if isinstance(m, Atom):
            return self._session_form(m)
        if isinstance(m, Concat):
            return concat(*(self.localize(part) for part in m.parts))
        if isinstance(m, Enc):
            return Enc(self.localize(m.body), self.localize(m.key))
        return m

    def send(self, step: Step) -> Message:
        if not self.knowledge.can_derive(step.message):
            raise MalformedSpec(
                f"step {step.id}: {self.agent} cannot build {render(step.message)} from what it knows"
            )
        return self.localize(step.message)


def extract_generalized_roles(spec: ProtocolSpec, ctx: VerificationContext) -> list[GeneralizedRole]:
    """One generalized role per participating honest agent, in declaration order.

    Explicit roles carried by ``spec`` are validated and returned instead.
    """
    check_spec(spec, ctx)
    if spec.roles:
        validate_roles(spec.roles, ctx)
        return list(spec.roles)

    names = variable_names()
    participants = spec.participants()
    roles = []
    for agent in ctx.honest_agents:
        if agent not in participants:
            continue
        builder = _RoleBuilder(agent, spec, ctx, names)
        rules: list[RoleRule] = []
        pending: list[Message] = []
        pending_from: str | None = None
        for step in spec.steps:
            if step.receiver == agent:
                pending.append(builder.receive(step.message))
                pending_from = pending_from or step.sender
            if step.sender == agent:
                sent = builder.send(step)
                rules.append(RoleRule(concat(*pending), sent, pending_from, step.receiver))
                pending, pending_from = [], None
        if pending:
            rules.append(RoleRule(concat(*pending), EPSILON, pending_from, None))
        role = GeneralizedRole(agent, tuple(rules), tuple(builder.variables))
        log.debug("role_extracted", agent=agent, rules=len(rules), variables=[v.name for v in role.variables])
        roles.append(role)
    return roles


def validate_roles(roles: Sequence[GeneralizedRole], ctx: VerificationContext) -> None:
    owners: dict[Variable, str] = {}
    for role in roles:
        if role.agent not in ctx.honest_agents:
            raise MalformedSpec(f"role for {role.agent}, which is not an honest principal")
        seen: set[Variable] = set()
        for index, rule in enumerate(role.rules, start=1):
            seen |= vars_of(rule.received)
            early = vars_of(rule.sent) - seen
            if early:
                names = ", ".join(sorted(render(v) for v in early))
                raise MalformedSpec(f"role {role.agent}, rule {index}: {names} sent before being received")
        for var in seen:
            other = owners.setdefault(var, role.agent)
            if other != role.agent:
                raise MalformedSpec(f"variable {render(var)} is shared by roles {other} and {role.agent}")


def encryption_patterns(roles: Sequence[GeneralizedRole]) -> list[EncryptionPattern]:
    """M̃: every top-level ciphertext of every role message, index-renamed from 1."""
    patterns = []
    for role in roles:
        for rule in role.rules:
            for message in (rule.received, rule.sent):
                for comp in components(message):
                    if isinstance(comp, Enc):
                        index = len(patterns) + 1
                        patterns.append(EncryptionPattern(index, rename_with_index(comp, index), role.agent, comp))
    return patterns


def sources_of(m: Message, patterns: Sequence[EncryptionPattern]) -> list[tuple[EncryptionPattern, Substitution]]:
    """Patterns unifying with ``m``; the variables of ``m`` stay fixed."""
    rigid = vars_of(m)
    found = []
    for pattern in patterns:
        sigma = unify(pattern.term, m, rigid=rigid)
        if sigma is not None:
            found.append((pattern, sigma))
    return found


def pick_secret(spec: ProtocolSpec, name: str | None = None) -> Atom:
    """The fresh atom called ``name``, or the first declared secret by name."""
    atoms = sorted(spec.fresh_atoms(), key=lambda a: a.name)
    if name is not None:
        for atom in atoms:
            if atom.name == name:
                return atom
        raise MalformedSpec(f"{name} is not a fresh atom of the protocol")
    for atom in atoms:
        if atom.sort is Sort.SECRET:
            return atom
    raise MalformedSpec("the protocol declares no secret")
