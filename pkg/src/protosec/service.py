"""HTTP front end: the command line operations over JSON.

Run locally with ``uvicorn protosec.service:app``. Every request carries the
protocol description as ``source``.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import report
from .analyzer import Metric, analyze, compare_metrics
from .config import Settings
from .dsl import parse_dsl
from .errors import ProtosecError
from .oracle import bounded_attack_search, probe_full_invariance
from .roles import encryption_patterns, extract_generalized_roles, pick_secret

app = FastAPI(title="protosec")
settings = Settings.from_env()


class SourceRequest(BaseModel):
    source: str


class AnalyzeRequest(SourceRequest):
    metric: Metric = Metric.WITNESS


class ProbeRequest(SourceRequest):
    metric: Metric = Metric.WITNESS
    trials: int | None = Field(default=None, ge=0)
    seed: int | None = None
    depth: int | None = Field(default=None, ge=1)


class AttackRequest(SourceRequest):
    sessions: int | None = Field(default=None, ge=0)
    secret: str | None = None
    node_cap: int | None = Field(default=None, ge=1)


def _dump(doc: report.Document) -> dict:
    return doc.model_dump(mode="json", by_alias=True)


def _parse(source: str):
    try:
        return parse_dsl(source)
    except ProtosecError as e:
        raise HTTPException(status_code=400, detail=str(e))


@app.get("/health")
async def health():
    return {"status": "ok"}


@app.post("/analyze")
def analyze_endpoint(body: AnalyzeRequest):
    ctx, spec = _parse(body.source)
    try:
        result = analyze(spec, body.metric, ctx)
    except ProtosecError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return _dump(report.report_doc(result))


@app.post("/compare")
def compare_endpoint(body: SourceRequest):
    ctx, spec = _parse(body.source)
    try:
        results = compare_metrics(spec, ctx)
    except ProtosecError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return _dump(report.compare_doc(results))


@app.post("/roles")
def roles_endpoint(body: SourceRequest):
    ctx, spec = _parse(body.source)
    try:
        roles = extract_generalized_roles(spec, ctx)
    except ProtosecError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return _dump(report.roles_doc(roles))


@app.post("/patterns")
def patterns_endpoint(body: SourceRequest):
    ctx, spec = _parse(body.source)
    try:
        patterns = encryption_patterns(extract_generalized_roles(spec, ctx))
    except ProtosecError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return _dump(report.patterns_doc(patterns))


@app.post("/oracle/probe")
def probe_endpoint(body: ProbeRequest):
    ctx, _ = _parse(body.source)
    trials = body.trials if body.trials is not None else settings.trials
    seed = body.seed if body.seed is not None else settings.seed
    try:
        found = probe_full_invariance(
            body.metric,
            ctx,
            trials,
            depth=body.depth or settings.depth,
            max_messages=settings.max_messages,
            max_candidates=settings.max_candidates,
            seed=seed,
        )
    except ProtosecError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return _dump(report.probe_doc(body.metric.value, trials, seed, found))


@app.post("/oracle/attack")
def attack_endpoint(body: AttackRequest):
    ctx, spec = _parse(body.source)
    sessions = body.sessions if body.sessions is not None else settings.sessions
    try:
        secret = pick_secret(spec, body.secret)
        trace = bounded_attack_search(spec, ctx, sessions, secret, node_cap=body.node_cap or settings.node_cap)
    except ProtosecError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return _dump(report.trace_doc(sessions, secret, trace))
