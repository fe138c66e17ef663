"""The verification context: principals, key table, level assignment, knowledge."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace

from .deduction import KnowledgeSet
from .errors import UnassignedLevel, UnknownKey
from .lattice import BOTTOM, SecurityLevel
from .terms import Atom, Message, Sort, render


@dataclass(frozen=True)
class KeyEntry:
    key: Atom
    inverse: Atom
    inverse_level: SecurityLevel
    key_level: SecurityLevel
    symmetric: bool = False


def public_key(name: str, owner: str) -> KeyEntry:
    """``pub(X)``: the public half is public, the private half belongs to X."""
    key = Atom(name, Sort.KEY, owner=owner)
    return KeyEntry(key, key.inverse(), SecurityLevel.of({owner}), BOTTOM)


def shared_key(name: str, first: str, second: str) -> KeyEntry:
    """``shared(C, D)``: both halves are known to C and D only.

    The key is owned by ``first``; renamed patterns link it to that identity.
    """
    key = Atom(name, Sort.KEY, owner=first)
    level = SecurityLevel.of({first, second})
    return KeyEntry(key, key.inverse(), level, level, symmetric=True)


def _unindexed(atom: Atom) -> Atom:
    if atom.session_index is None:
        return atom
    return replace(atom, session_index=None)


@dataclass(frozen=True)
class VerificationContext:
    principals: tuple[str, ...]
    intruder: str
    keys: Mapping[Atom, KeyEntry] = field(default_factory=dict)
    atom_levels: Mapping[Atom, SecurityLevel] = field(default_factory=dict)
    knowledge: Mapping[str, frozenset[Atom]] = field(default_factory=dict)

    @property
    def honest_agents(self) -> tuple[str, ...]:
        return tuple(p for p in self.principals if p != self.intruder)

    def key_entry(self, key: Atom) -> KeyEntry:
        if not isinstance(key, Atom) or key.sort is not Sort.KEY:
            raise UnknownKey(render(key))
        public = key.inverse() if key.is_inverse else key
        entry = self.keys.get(public)
        if entry is None:
            raise UnknownKey(render(key))
        return entry

    def level_of(self, atom: Atom) -> SecurityLevel:
        """⌜atom⌝; session labels are ignored."""
        if atom.sort is Sort.IDENTITY:
            return BOTTOM
        base = _unindexed(atom)
        if base in self.atom_levels:
            return self.atom_levels[base]
        if atom.sort is Sort.KEY:
            try:
                entry = self.key_entry(atom)
            except UnknownKey:
                raise UnassignedLevel(render(atom)) from None
            return entry.inverse_level if atom.is_inverse else entry.key_level
        raise UnassignedLevel(render(atom))

    def has_level(self, atom: Atom) -> bool:
        try:
            self.level_of(atom)
        except UnassignedLevel:
            return False
        return True

    def inverse_key(self, key: Atom) -> Atom:
        self.key_entry(key)
        return key.inverse()

    def knowledge_of(self, agent: str) -> KnowledgeSet:
        return KnowledgeSet(self.knowledge.get(agent, frozenset()))

    def agent_can_derive(self, agent: str, m: Message) -> bool:
        return self.knowledge_of(agent).can_derive(m)

    @property
    def intruder_knowledge(self) -> frozenset[Atom]:
        return self.knowledge.get(self.intruder, frozenset())

    def atoms(self) -> frozenset[Atom]:
        """Every atom the context mentions: identities, keys of both halves, leveled atoms."""
        found: set[Atom] = {Atom(p, Sort.IDENTITY) for p in self.principals}
        for entry in self.keys.values():
            found.update((entry.key, entry.inverse))
        found.update(self.atom_levels)
        for atoms in self.knowledge.values():
            found.update(atoms)
        return frozenset(found)
