"""Witness functions built on F_MAX^IK.

``f_max_ik`` ranks an atom by the innermost key protecting it; ``f_prime`` is
its derivative form, blind to everything a substitution could bring in;
``lower_bound_upsilon`` folds ``f_prime`` over every encryption pattern a sent
component may have come from.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import structlog

from .context import VerificationContext
from .errors import NoSource
from .lattice import BOTTOM, TOP, SecurityLevel, geq_provable, meet, meet_all
from .roles import EncryptionPattern, sources_of
from .terms import (
    Atom,
    Enc,
    Message,
    Sort,
    Subject,
    Substitution,
    Variable,
    apply_subst,
    atoms_of,
    components,
    derive,
    derive_keep,
    is_ground,
    occurrences,
    render,
    render_substitution,
    vars_of,
)

log = structlog.get_logger(__name__)


@dataclass(frozen=True)
class SourceTrace:
    """One contribution to a lower bound: which pattern, under which unifier."""

    pattern_index: int | None
    unifier: str
    neighborhood: str
    level: SecurityLevel


@dataclass(frozen=True)
class LevelWithProvenance:
    level: SecurityLevel
    sources: tuple[SourceTrace, ...] = ()


def _identities(body: Message, subject: Subject) -> frozenset[str]:
    return frozenset(a.name for a in atoms_of(body) if a.sort is Sort.IDENTITY and a != subject)


def _protection(subject: Subject, chain: tuple[Enc, ...], subject_level: SecurityLevel, ctx) -> SecurityLevel:
    for enc in reversed(chain):
        if isinstance(enc.key, Variable):
            continue
        key_level = ctx.level_of(enc.key.inverse())
        if geq_provable(key_level, subject_level):
            return meet(key_level, SecurityLevel.of(_identities(enc.body, subject)))
    return BOTTOM


def f_max_ik(subject: Subject, m: Message, ctx: VerificationContext) -> SecurityLevel:
    """Meet, over the occurrences of ``subject``, of its innermost protective key's
    inverse level plus the identities sharing that ciphertext."""
    levels = []
    subject_level = None
    for chain in occurrences(subject, m):
        if subject_level is None:
            subject_level = ctx.level_of(subject) if isinstance(subject, Atom) else BOTTOM
        level = _protection(subject, chain, subject_level, ctx)
        if level.is_bottom:
            return BOTTOM
        levels.append(level)
    return meet_all(levels)


def f_prime(
    subject: Subject, m: Message, ctx: VerificationContext, sigma: Substitution | None = None
) -> SecurityLevel:
    """F′: an atom is ranked in ∂m, a variable X in ∂[X]m.

    With ``sigma``, an atom absent from ∂m is ranked through the variables of
    ``m`` that ``sigma`` binds to it; nothing else inside ``sigma`` is looked at.
    """
    if isinstance(subject, Variable):
        return f_max_ik(subject, derive_keep(m, subject), ctx)
    derived = derive(m)
    if sigma is None or subject in atoms_of(derived):
        return f_max_ik(subject, derived, ctx)
    carriers = [x for x in vars_of(m) if sigma.get(x) == subject]
    if not carriers:
        return TOP
    return meet_all(f_max_ik(x, derive_keep(m, x), ctx) for x in carriers)


def _from_sources(subject: Subject, comp: Message, patterns, ctx) -> list[SourceTrace]:
    found = sources_of(comp, patterns)
    if not found:
        raise NoSource(render(comp), render(subject))
    traces = []
    for pattern, sigma in found:
        carriers = sorted((v for v, t in sigma.items() if t == subject), key=render)
        if carriers:
            for var in carriers:
                # static neighborhood: σ applied everywhere except where the subject sits
                neighborhood = apply_subst(pattern.term, sigma.without(var))
                level = f_prime(var, neighborhood, ctx)
                traces.append(SourceTrace(pattern.index, render_substitution(sigma), render(neighborhood), level))
        else:
            instance = apply_subst(pattern.term, sigma)
            level = f_prime(subject, instance, ctx)
            traces.append(SourceTrace(pattern.index, render_substitution(sigma), render(instance), level))
    return traces


def lower_bound_upsilon(
    subject: Subject,
    m: Message,
    patterns: Sequence[EncryptionPattern],
    ctx: VerificationContext,
) -> LevelWithProvenance:
    """Υ: the meet of F′ over every source of every component of ``m``."""
    traces: list[SourceTrace] = []
    level = TOP
    for comp in components(m):
        if not any(True for _ in occurrences(subject, comp)):
            continue
        if is_ground(comp):
            contribution = f_max_ik(subject, comp, ctx)
            traces.append(SourceTrace(None, "ground", render(comp), contribution))
        else:
            found = _from_sources(subject, comp, patterns, ctx)
            traces.extend(found)
            contribution = meet_all(t.level for t in found)
        level = meet(level, contribution)
    log.debug("lower_bound", subject=render(subject), message=render(m), level=str(level), sources=len(traces))
    return LevelWithProvenance(level, tuple(traces))
