import pytest
from conftest import A, B, KA, KB, KS, NA, PROTOCOLS, S, SEC

from protosec.analyzer import Metric
from protosec.deduction import KnowledgeSet, derives
from protosec.dsl import parse_dsl
from protosec.errors import SearchBudgetExceeded
from protosec.lattice import TOP
from protosec.oracle import _candidates, bounded_attack_search, probe_full_invariance
from protosec.roles import pick_secret
from protosec.terms import EPSILON, Concat, Enc


def constant_top(subject, m, ctx):
    return TOP


def composition_depth(m, closure):
    if m in closure:
        return 0
    if isinstance(m, Enc):
        return 1 + composition_depth(m.body, closure)
    if isinstance(m, Concat):
        return 1 + max(composition_depth(part, closure) for part in m.parts)
    raise AssertionError(f"{m} is not derivable")


def assert_intruder_can_send(trace, ctx):
    knowledge = list(ctx.intruder_knowledge)
    for step in trace.steps:
        if step.received != EPSILON:
            assert derives(knowledge, step.received), step
        if step.sent != EPSILON:
            knowledge.append(step.sent)
    assert derives(knowledge, trace.leaked)


def test_safe_metric_survives_probing(server_ctx):
    assert probe_full_invariance(Metric.WITNESS, server_ctx, 1000) == []


def test_unsafe_metric_is_refuted(server_ctx):
    found = probe_full_invariance(constant_top, server_ctx, 300, stop_at_first=True)
    assert len(found) == 1
    counterexample = found[0]
    assert counterexample.derived == counterexample.subject
    assert counterexample.derived_level.is_bottom
    assert counterexample.source_level == TOP
    assert "the intruder builds" in counterexample.describe()


def test_probing_is_reproducible(server_ctx):
    first = probe_full_invariance(constant_top, server_ctx, 50, seed=3)
    second = probe_full_invariance(constant_top, server_ctx, 50, seed=3)
    assert first == second


def test_no_attack_on_the_protocol(server):
    ctx, spec = server
    assert bounded_attack_search(spec, ctx, 2, SEC) is None


def test_attack_on_the_leaky_variant(leaky):
    ctx, spec = leaky
    trace = bounded_attack_search(spec, ctx, 2, pick_secret(spec))
    assert trace is not None
    assert trace.leaked.name == "sec"
    assert {step.session for step in trace.steps} <= {1, 2}
    assert trace.narration()[-1] == "I knows sec"
    assert_intruder_can_send(trace, ctx)


def test_shortest_leak(leaky):
    ctx, spec = leaky
    trace = bounded_attack_search(spec, ctx, 1, pick_secret(spec))
    assert [(step.role, step.rule_index) for step in trace.steps] == [("A", 1), ("S", 1)]
    narration = trace.narration()
    assert narration[0].startswith("A → I(S) : ")
    assert narration[-1] == "I knows sec"
    assert_intruder_can_send(trace, ctx)


def test_nonces_of_different_sessions_stay_apart(server):
    ctx, spec = server
    assert bounded_attack_search(spec, ctx, 2, NA) is None


def test_node_cap(leaky):
    ctx, spec = leaky
    with pytest.raises(SearchBudgetExceeded):
        bounded_attack_search(spec, ctx, 1, pick_secret(spec), node_cap=1)


def test_zero_sessions(leaky):
    ctx, spec = leaky
    assert bounded_attack_search(spec, ctx, 0, SEC) is None


def test_intruder_clearance_discharges_everything():
    text = (PROTOCOLS / "key_server.proto").read_text(encoding="utf-8")
    text = text.replace("I: A, B, S, ka, kb, ks;", "I: A, B, S, ka, kb, ks, inv(ka), inv(kb), inv(ks);")
    ctx, _ = parse_dsl(text)
    assert probe_full_invariance(constant_top, ctx, 100) == []


def test_candidates_reach_the_depth_bound():
    knowledge = KnowledgeSet([A, B, S, KA, KB, KS, NA])
    closure = knowledge.closure()
    found = _candidates(knowledge, 2, 48)
    assert set(closure) <= set(found)
    composed = found[len(closure) :]
    assert len(composed) == 48
    assert all(knowledge.can_derive(m) for m in composed)
    assert max(composition_depth(m, closure) for m in composed) == 2
    assert max(composition_depth(m, closure) for m in _candidates(knowledge, 1, 48)) == 1


def test_candidates_keep_the_whole_closure():
    knowledge = KnowledgeSet([Enc(KA.inverse(), KB), KB.inverse()] + [A, B, S, KA, KB, KS, NA])
    closure = knowledge.closure()
    found = _candidates(knowledge, 2, 4)
    assert set(closure) <= set(found)
    assert len(found) == len(closure) + 4
