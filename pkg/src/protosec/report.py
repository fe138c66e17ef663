"""JSON documents and text renderings of analysis results.

Every JSON document carries ``"schema": 1``. Messages are written in protocol
language notation so that a roles document can be read back.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import jinja2
from pydantic import BaseModel, ConfigDict, Field

from .analyzer import AnalysisReport, Metric, Overall, Verdict
from .context import VerificationContext
from .dsl import parse_term
from .errors import MalformedSpec
from .lattice import level_to_json, render_level
from .oracle import AttackTrace, Counterexample
from .roles import EncryptionPattern, GeneralizedRole, ProtocolSpec, RoleRule
from .terms import Atom, Sort, Variable, render, to_dsl

SCHEMA_VERSION = 1

Level = str | list[str]


class Document(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(SCHEMA_VERSION, alias="schema")

    def dump(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class VerdictDoc(BaseModel):
    role: str
    rule: int
    subject: str
    sent: Level
    received: Level
    context: Level
    holds: bool
    explanation: str = ""


class ReportDoc(Document):
    metric: Metric
    overall: Overall
    verdicts: list[VerdictDoc]


class RuleDoc(BaseModel):
    received: str
    sent: str
    received_from: str | None = None
    sent_to: str | None = None


class RoleDoc(BaseModel):
    agent: str
    variables: list[str] = []
    rules: list[RuleDoc]


class RolesDoc(Document):
    variables: dict[str, Sort] = {}
    roles: list[RoleDoc]


class PatternDoc(BaseModel):
    index: int
    role: str
    term: str
    origin: str


class PatternsDoc(Document):
    patterns: list[PatternDoc]


class CompareDoc(Document):
    reports: list[ReportDoc]


class CounterexampleDoc(BaseModel):
    messages: list[str]
    derived: str
    subject: str
    derived_level: Level
    source_level: Level
    clearance: Level


class ProbeDoc(Document):
    metric: str
    trials: int
    seed: int
    counterexamples: list[CounterexampleDoc]


class TraceStepDoc(BaseModel):
    session: int
    role: str
    rule: int
    received: str
    sent: str


class TraceDoc(Document):
    sessions: int
    secret: str
    leaked: str | None = None
    steps: list[TraceStepDoc] = []
    narration: list[str] = []


def verdict_doc(verdict: Verdict) -> VerdictDoc:
    return VerdictDoc(
        role=verdict.role,
        rule=verdict.rule_index,
        subject=render(verdict.subject),
        sent=level_to_json(verdict.sent_level),
        received=level_to_json(verdict.received_level),
        context=level_to_json(verdict.context_level),
        holds=verdict.holds,
        explanation=verdict.explanation,
    )


def report_doc(report: AnalysisReport) -> ReportDoc:
    return ReportDoc(metric=report.metric, overall=report.overall, verdicts=[verdict_doc(v) for v in report.verdicts])


def roles_doc(roles: Sequence[GeneralizedRole]) -> RolesDoc:
    variables: dict[str, Sort] = {}
    docs = []
    for role in roles:
        for var in role.variables:
            variables[var.name] = var.sort
        rules = [
            RuleDoc(received=to_dsl(r.received), sent=to_dsl(r.sent), received_from=r.received_from, sent_to=r.sent_to)
            for r in role.rules
        ]
        docs.append(RoleDoc(agent=role.agent, variables=[v.name for v in role.variables], rules=rules))
    return RolesDoc(variables=variables, roles=docs)


def roles_from_doc(doc: RolesDoc, ctx: VerificationContext, spec: ProtocolSpec) -> tuple[GeneralizedRole, ...]:
    """Rebuild generalized roles from a roles document."""
    variables = {name: Variable(name, sort) for name, sort in doc.variables.items()}
    roles = []
    for role in doc.roles:
        unknown = [name for name in role.variables if name not in variables]
        if unknown:
            raise MalformedSpec(f"role {role.agent}: undeclared variables {', '.join(unknown)}")
        rules = tuple(
            RoleRule(
                parse_term(rule.received, ctx, spec, variables),
                parse_term(rule.sent, ctx, spec, variables),
                rule.received_from,
                rule.sent_to,
            )
            for rule in role.rules
        )
        roles.append(GeneralizedRole(role.agent, rules, tuple(variables[name] for name in role.variables)))
    return tuple(roles)


def load_roles(path: str | Path, ctx: VerificationContext, spec: ProtocolSpec) -> tuple[GeneralizedRole, ...]:
    try:
        doc = RolesDoc.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise MalformedSpec(f"{path}: not a roles document ({exc})") from None
    return roles_from_doc(doc, ctx, spec)


def patterns_doc(patterns: Iterable[EncryptionPattern]) -> PatternsDoc:
    return PatternsDoc(
        patterns=[
            PatternDoc(index=p.index, role=p.role, term=render(p.term), origin=to_dsl(p.origin)) for p in patterns
        ]
    )


def compare_doc(reports: Mapping[Metric, AnalysisReport]) -> CompareDoc:
    return CompareDoc(reports=[report_doc(r) for r in reports.values()])


def probe_doc(metric: str, trials: int, seed: int, found: Sequence[Counterexample]) -> ProbeDoc:
    return ProbeDoc(
        metric=metric,
        trials=trials,
        seed=seed,
        counterexamples=[
            CounterexampleDoc(
                messages=[to_dsl(m) for m in c.messages],
                derived=to_dsl(c.derived),
                subject=render(c.subject),
                derived_level=level_to_json(c.derived_level),
                source_level=level_to_json(c.source_level),
                clearance=level_to_json(c.clearance),
            )
            for c in found
        ],
    )


def trace_doc(sessions: int, secret: Atom, trace: AttackTrace | None) -> TraceDoc:
    if trace is None:
        return TraceDoc(sessions=sessions, secret=render(secret))
    return TraceDoc(
        sessions=sessions,
        secret=render(secret),
        leaked=render(trace.leaked),
        steps=[
            TraceStepDoc(
                session=s.session, role=s.role, rule=s.rule_index, received=to_dsl(s.received), sent=to_dsl(s.sent)
            )
            for s in trace.steps
        ],
        narration=trace.narration(),
    )


environment = jinja2.Environment(trim_blocks=True, lstrip_blocks=True, keep_trailing_newline=True)
environment.filters["level"] = render_level
environment.filters["msg"] = render

REPORT_TEMPLATE = environment.from_string(
    """metric: {{ report.metric.value }}
{% for v in report.verdicts %}
[{{ "ok" if v.holds else "FAIL" }}] role {{ v.role }}, rule {{ v.rule_index }}, {{ v.subject | msg }}: sent {{ v.sent_level | level }} ⊒ {{ v.context_level | level }} ⊓ {{ v.received_level | level }}
{% if not v.holds and v.explanation %}
       {{ v.explanation }}
{% endif %}
{% endfor %}
{% if report.overall.value == "increasing" %}
(IV) increasing ⇒ correct for secrecy
{% else %}
not proved increasing ⇒ not proved correct for secrecy ({{ report.failures | length }} failing)
{% endif %}
"""
)

ROLES_TEMPLATE = environment.from_string(
    """{% for role in roles %}
{{ role.agent }}_G:
{% for rule in role.rules %}
  {{ loop.index }}. I({{ rule.received_from or "·" }}) → {{ role.agent }} : {{ rule.received | msg }}
     {{ role.agent }} → I({{ rule.sent_to or "·" }}) : {{ rule.sent | msg }}
{% endfor %}
{% endfor %}
"""
)

PATTERNS_TEMPLATE = environment.from_string(
    """{% for p in patterns %}
{{ p.index }}. {{ p.term | msg }}    ({{ p.role }})
{% endfor %}
"""
)

PROBE_TEMPLATE = environment.from_string(
    """{% if found %}
{{ found | length }} counterexample(s) to full invariance:
{% for c in found[:limit] %}
  {{ c.describe() }}
{% endfor %}
{% else %}
no counterexample in {{ trials }} trials
{% endif %}
"""
)

TRACE_TEMPLATE = environment.from_string(
    """{% if trace %}
attack on {{ secret | msg }}:
{% for line in trace.narration() %}
  {{ line }}
{% endfor %}
{% else %}
no attack on {{ secret | msg }} within {{ sessions }} session(s)
{% endif %}
"""
)


def render_report(report: AnalysisReport) -> str:
    return REPORT_TEMPLATE.render(report=report)


def render_roles(roles: Sequence[GeneralizedRole]) -> str:
    return ROLES_TEMPLATE.render(roles=roles)


def render_patterns(patterns: Sequence[EncryptionPattern]) -> str:
    return PATTERNS_TEMPLATE.render(patterns=patterns)


def render_compare(reports: Mapping[Metric, AnalysisReport]) -> str:
    return "\n".join(render_report(r) for r in reports.values())


def render_probe(found: Sequence[Counterexample], trials: int, limit: int = 10) -> str:
    return PROBE_TEMPLATE.render(found=found, trials=trials, limit=limit)


def render_trace(trace: AttackTrace | None, secret: Atom, sessions: int) -> str:
    return TRACE_TEMPLATE.render(trace=trace, secret=secret, sessions=sessions)
