"""Security levels: sets of principal identities ordered by reverse inclusion.

A smaller set is a higher level. ``TOP`` is the empty set, ``BOTTOM`` stands for
every principal. Variables contribute symbolic markers (rendered ``Z̄``) that
stand for the unknown identities a variable may carry.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum
from functools import reduce

from .errors import JoinWithUnknowns
from .terms import Variable, render


class LevelKind(str, Enum):
    TOP = "top"
    BOTTOM = "bottom"
    FINITE = "finite"


@dataclass(frozen=True)
class SecurityLevel:
    kind: LevelKind
    known: frozenset[str] = frozenset()
    unknowns: frozenset[Variable] = frozenset()

    @classmethod
    def of(cls, known: Iterable[str] = (), unknowns: Iterable[Variable] = ()) -> "SecurityLevel":
        known = frozenset(known)
        unknowns = frozenset(unknowns)
        if not known and not unknowns:
            return TOP
        return cls(LevelKind.FINITE, known, unknowns)

    @property
    def is_top(self) -> bool:
        return self.kind is LevelKind.TOP

    @property
    def is_bottom(self) -> bool:
        return self.kind is LevelKind.BOTTOM

    def __str__(self) -> str:
        return render_level(self)


TOP = SecurityLevel(LevelKind.TOP)
BOTTOM = SecurityLevel(LevelKind.BOTTOM)


def meet(l1: SecurityLevel, l2: SecurityLevel) -> SecurityLevel:
    """l1 ⊓ l2: union of the identity sets."""
    if l1.is_bottom or l2.is_bottom:
        return BOTTOM
    if l1.is_top:
        return l2
    if l2.is_top:
        return l1
    return SecurityLevel.of(l1.known | l2.known, l1.unknowns | l2.unknowns)


def meet_all(levels: Iterable[SecurityLevel]) -> SecurityLevel:
    return reduce(meet, levels, TOP)


def join(l1: SecurityLevel, l2: SecurityLevel) -> SecurityLevel:
    """l1 ⊔ l2: intersection of the identity sets, defined on unknown-free levels."""
    if l1.unknowns or l2.unknowns:
        raise JoinWithUnknowns(f"cannot join {render_level(l1)} and {render_level(l2)}")
    if l1.is_top or l2.is_top:
        return TOP
    if l1.is_bottom:
        return l2
    if l2.is_bottom:
        return l1
    return SecurityLevel.of(l1.known & l2.known)


def join_all(levels: Iterable[SecurityLevel]) -> SecurityLevel:
    return reduce(join, levels, BOTTOM)


def geq_provable(l1: SecurityLevel, l2: SecurityLevel) -> bool:
    """l1 ⊒ l2 for every instantiation of the unknowns.

    Incomplete on purpose: when the answer depends on what a marker stands for,
    the result is False.
    """
    if l1.is_top or l2.is_bottom:
        return True
    if l1.is_bottom or l2.is_top:
        return False
    return l1.known <= l2.known and l1.unknowns <= l2.unknowns


def render_level(level: SecurityLevel) -> str:
    if level.is_top:
        return "∅/Top"
    if level.is_bottom:
        return "I/Bottom"
    names = sorted(level.known) + sorted(render(v) + "̄" for v in level.unknowns)
    return "{" + ", ".join(names) + "}"


def level_to_json(level: SecurityLevel) -> str | list[str]:
    if level.is_top:
        return "Top"
    if level.is_bottom:
        return "Bottom"
    return sorted(level.known) + sorted(render(v) + "̄" for v in level.unknowns)
