"""Interpretation functions ranking an atom by its direct encryption key.

``dek`` looks only at the key; ``dekan`` also counts the identities (and
variables) encrypted next to the atom under that key.
"""

from __future__ import annotations

from .context import VerificationContext
from .lattice import BOTTOM, SecurityLevel, meet, meet_all
from .terms import Atom, Enc, Message, Sort, Subject, Variable, components, occurrences


def _direct_key_level(enc: Enc, ctx: VerificationContext) -> SecurityLevel:
    if isinstance(enc.key, Variable):
        return BOTTOM
    return ctx.level_of(enc.key.inverse())


def _neighbors(subject: Subject, enc: Enc) -> SecurityLevel:
    known = set()
    unknowns = set()
    for comp in components(enc.body):
        if comp == subject:
            continue
        if isinstance(comp, Atom) and comp.sort is Sort.IDENTITY:
            known.add(comp.name)
        elif isinstance(comp, Variable):
            unknowns.add(comp)
    return SecurityLevel.of(known, unknowns)


def dek(subject: Subject, m: Message, ctx: VerificationContext) -> SecurityLevel:
    levels = []
    for chain in occurrences(subject, m):
        if not chain:
            return BOTTOM
        levels.append(_direct_key_level(chain[-1], ctx))
    return meet_all(levels)


def dekan(subject: Subject, m: Message, ctx: VerificationContext) -> SecurityLevel:
    levels = []
    for chain in occurrences(subject, m):
        if not chain:
            return BOTTOM
        direct = chain[-1]
        levels.append(meet(_direct_key_level(direct, ctx), _neighbors(subject, direct)))
    return meet_all(levels)
