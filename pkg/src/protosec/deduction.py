"""Dolev-Yao deduction: what can be learnt from a set of messages.

Analysis splits concatenations and opens ciphertexts whose inverse key is
derivable; synthesis composes pairs and encryptions from derivable parts.
Variables are treated as opaque items, which lets the same closure serve an
honest agent reasoning over a partially abstracted message.
"""

from __future__ import annotations

from collections.abc import Iterable

from .terms import EPSILON, Atom, Concat, Enc, Message, invert


class KnowledgeSet:
    """An immutable set of messages together with its analysis closure."""

    __slots__ = ("messages", "_closure")

    def __init__(self, messages: Iterable[Message] = ()):
        self.messages: frozenset[Message] = frozenset(m for m in messages if m != EPSILON)
        self._closure: frozenset[Message] | None = None

    @property
    def analyzed(self) -> bool:
        return self._closure is not None

    def closure(self) -> frozenset[Message]:
        """Saturate under unpairing and decryption; computed once."""
        if self._closure is None:
            self._closure = _analyze(self.messages)
        return self._closure

    def add(self, *messages: Message) -> "KnowledgeSet":
        return KnowledgeSet(self.messages | set(messages))

    def atoms(self) -> frozenset[Atom]:
        return frozenset(m for m in self.closure() if isinstance(m, Atom))

    def ciphertexts(self) -> frozenset[Enc]:
        return frozenset(m for m in self.closure() if isinstance(m, Enc))

    def can_derive(self, target: Message) -> bool:
        return _synthesize(target, self.closure())

    def __contains__(self, m: object) -> bool:
        return m in self.closure()

    def __len__(self) -> int:
        return len(self.messages)


def _analyze(messages: frozenset[Message]) -> frozenset[Message]:
    known: set[Message] = set()
    agenda = list(messages)
    locked: list[Enc] = []
    while agenda:
        while agenda:
            m = agenda.pop()
            if m in known:
                continue
            known.add(m)
            if isinstance(m, Concat):
                agenda.extend(m.parts)
            elif isinstance(m, Enc):
                locked.append(m)
        # new items may unlock ciphertexts seen earlier
        still_locked = []
        for enc in locked:
            if _synthesize(invert(enc.key), known):
                agenda.append(enc.body)
            else:
                still_locked.append(enc)
        locked = still_locked
    return frozenset(known)


def _synthesize(target: Message, closure: frozenset[Message] | set[Message]) -> bool:
    if target == EPSILON or target in closure:
        return True
    if isinstance(target, Concat):
        return all(_synthesize(part, closure) for part in target.parts)
    if isinstance(target, Enc):
        return _synthesize(target.body, closure) and _synthesize(target.key, closure)
    return False


def derives(messages: Iterable[Message], target: Message) -> bool:
    """M ⊨ target."""
    return KnowledgeSet(messages).can_derive(target)
