"""The increasing criterion, checked rule by rule and atom by atom.

A rule (R⁻, r⁺) is increasing for α when the level measured in what is sent
dominates ⌜α⌝ met with the level measured in what was received. A protocol whose
every rule is increasing under a safe metric is correct for secrecy.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import structlog

from .context import VerificationContext
from .errors import NoSource
from .interpretation import dek, dekan
from .lattice import BOTTOM, TOP, SecurityLevel, geq_provable, meet
from .roles import (
    EncryptionPattern,
    GeneralizedRole,
    ProtocolSpec,
    RoleRule,
    encryption_patterns,
    extract_generalized_roles,
)
from .terms import EPSILON, Atom, Message, Subject, atoms_of, render, sort_key, vars_of
from .witness import f_prime, lower_bound_upsilon

log = structlog.get_logger(__name__)


class Metric(str, Enum):
    DEK = "dek"
    DEKAN = "dekan"
    WITNESS = "witness"


class Overall(str, Enum):
    INCREASING = "increasing"
    NOT_PROVED = "not proved correct"


@dataclass(frozen=True)
class Verdict:
    role: str
    rule_index: int
    subject: Subject
    sent_level: SecurityLevel
    received_level: SecurityLevel
    context_level: SecurityLevel
    holds: bool
    explanation: str = ""


@dataclass(frozen=True)
class AnalysisReport:
    metric: Metric
    verdicts: tuple[Verdict, ...]
    roles: tuple[GeneralizedRole, ...] = ()
    patterns: tuple[EncryptionPattern, ...] = ()

    @property
    def overall(self) -> Overall:
        if all(v.holds for v in self.verdicts):
            return Overall.INCREASING
        return Overall.NOT_PROVED

    @property
    def failures(self) -> tuple[Verdict, ...]:
        return tuple(v for v in self.verdicts if not v.holds)


def _subjects(sent: Message) -> list[Subject]:
    return sorted(atoms_of(sent), key=sort_key) + sorted(vars_of(sent), key=sort_key)


def _context_level(subject: Subject, ctx: VerificationContext) -> SecurityLevel:
    if isinstance(subject, Atom):
        return ctx.level_of(subject)
    return TOP


def _interpretation_levels(metric: Metric, subject: Subject, rule: RoleRule, received: Message, ctx):
    measure = dek if metric is Metric.DEK else dekan
    sent = measure(subject, rule.sent, ctx)
    recv = measure(subject, received, ctx)
    return sent, recv, f"direct key gives {sent} when sent against {recv} when received"


def _witness_levels(subject: Subject, rule: RoleRule, received: Message, patterns, ctx):
    recv = f_prime(subject, received, ctx)
    try:
        bound = lower_bound_upsilon(subject, rule.sent, patterns, ctx)
    except NoSource as exc:
        return BOTTOM, recv, str(exc)
    notes = []
    for trace in bound.sources:
        if trace.pattern_index is None:
            notes.append(f"ground {trace.neighborhood} gives {trace.level}")
        else:
            notes.append(f"pattern {trace.pattern_index} via {trace.neighborhood} gives {trace.level}")
    return bound.level, recv, "; ".join(notes)


def check_rule(
    rule: RoleRule,
    metric: Metric,
    patterns: Sequence[EncryptionPattern],
    ctx: VerificationContext,
    *,
    role: str = "",
    rule_index: int = 1,
    received: Message | None = None,
) -> list[Verdict]:
    """Verdicts for every atom and variable of the sent message of ``rule``.

    ``received`` is R⁻, the receives of the whole role prefix; it defaults to the
    rule's own receive.
    """
    received = rule.received if received is None else received
    verdicts = []
    for subject in _subjects(rule.sent):
        context_level = _context_level(subject, ctx)
        if metric is Metric.WITNESS:
            sent, recv, note = _witness_levels(subject, rule, received, patterns, ctx)
        else:
            sent, recv, note = _interpretation_levels(metric, subject, rule, received, ctx)
        holds = geq_provable(sent, meet(context_level, recv))
        if not holds:
            log.info("rule_not_increasing", role=role, rule=rule_index, subject=render(subject), metric=metric.value)
        verdicts.append(Verdict(role, rule_index, subject, sent, recv, context_level, holds, note))
    return verdicts


def analyze(
    spec: ProtocolSpec,
    metric: Metric,
    ctx: VerificationContext,
    roles: Sequence[GeneralizedRole] | None = None,
) -> AnalysisReport:
    if roles is None:
        roles = extract_generalized_roles(spec, ctx)
    patterns = encryption_patterns(roles) if metric is Metric.WITNESS else []
    verdicts: list[Verdict] = []
    for role in roles:
        for index, rule in enumerate(role.rules):
            if rule.sent == EPSILON:
                continue
            verdicts.extend(
                check_rule(
                    rule,
                    metric,
                    patterns,
                    ctx,
                    role=role.agent,
                    rule_index=index + 1,
                    received=role.received_prefix(index),
                )
            )
    report = AnalysisReport(metric, tuple(verdicts), tuple(roles), tuple(patterns))
    log.info("analysis_done", metric=metric.value, verdicts=len(verdicts), overall=report.overall.value)
    return report


def compare_metrics(
    spec: ProtocolSpec,
    ctx: VerificationContext,
    metrics: Sequence[Metric] = tuple(Metric),
) -> dict[Metric, AnalysisReport]:
    """The same protocol under several metrics; roles are extracted once."""
    roles = extract_generalized_roles(spec, ctx)
    return {metric: analyze(spec, metric, ctx, roles) for metric in metrics}
