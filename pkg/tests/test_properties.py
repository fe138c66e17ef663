import pytest
from conftest import A, B, KA, KB, KS, NA, S, SEC
from hypothesis import given, settings
from hypothesis import strategies as st

from protosec.deduction import KnowledgeSet, derives
from protosec.interpretation import dek, dekan
from protosec.lattice import BOTTOM, TOP, SecurityLevel, geq_provable, join, meet
from protosec.terms import Atom, Concat, Enc, Sort, Substitution, Variable, atoms_of, concat, vars_of
from protosec.witness import f_max_ik, f_prime

deterministic = settings(derandomize=True, max_examples=150, deadline=None)

NAMES = ("A", "B", "C", "S")
ATOMS = (A, B, S, NA, SEC)
KEYS = (KA, KB, KS, KA.inverse(), KB.inverse(), KS.inverse())
VARIABLES = (Variable("X"), Variable("Y", Sort.NONCE), Variable("Z"))

security_levels = st.one_of(
    st.just(TOP),
    st.just(BOTTOM),
    st.frozensets(st.sampled_from(NAMES), min_size=1).map(SecurityLevel.of),
)


def messages(leaves, max_leaves=6):
    return st.recursive(
        leaves,
        lambda children: st.one_of(
            st.tuples(children, children).map(lambda pair: concat(*pair)),
            st.tuples(children, st.sampled_from(KEYS)).map(lambda pair: Enc(*pair)),
        ),
        max_leaves=max_leaves,
    )


ground_messages = messages(st.sampled_from(ATOMS + KEYS))
small_messages = messages(st.sampled_from(ATOMS + KEYS), max_leaves=3)
open_messages = messages(st.sampled_from(ATOMS + VARIABLES))


@deterministic
@given(a=security_levels, b=security_levels, c=security_levels)
def test_meet_and_join_laws(a, b, c):
    assert meet(a, b) == meet(b, a)
    assert join(a, b) == join(b, a)
    assert meet(meet(a, b), c) == meet(a, meet(b, c))
    assert join(join(a, b), c) == join(a, join(b, c))
    assert meet(a, a) == a
    assert join(a, a) == a
    assert meet(a, join(a, b)) == a
    assert join(a, meet(a, b)) == a


@deterministic
@given(a=security_levels, b=security_levels)
def test_bounds(a, b):
    assert geq_provable(a, meet(a, b))
    assert geq_provable(join(a, b), a)
    assert geq_provable(TOP, a)
    assert geq_provable(a, BOTTOM)


@pytest.mark.parametrize("metric", [dek, dekan, f_max_ik], ids=["dek", "dekan", "f_max_ik"])
@settings(deterministic, max_examples=1000)
@given(first=ground_messages, second=ground_messages, subject=st.sampled_from((NA, SEC)))
def test_metrics_are_well_formed(server_ctx, metric, first, second, subject):
    assert metric(subject, subject, server_ctx) == BOTTOM
    assert metric(subject, concat(first, subject), server_ctx) == BOTTOM
    together = metric(subject, concat(first, second), server_ctx)
    assert together == meet(metric(subject, first, server_ctx), metric(subject, second, server_ctx))
    if subject not in atoms_of(first):
        assert metric(subject, first, server_ctx) == TOP


@settings(deterministic, max_examples=500)
@given(
    m=open_messages,
    carried=st.sets(st.sampled_from(("X", "Z"))),
    fillers=st.lists(ground_messages.filter(lambda item: item != SEC), min_size=2, max_size=2),
)
def test_f_prime_ignores_what_substitutions_bring(server_ctx, m, carried, fillers):
    any_vars = [v for v in VARIABLES if v.sort is Sort.ANY]
    bare = {v: SEC for v in any_vars if v.name in carried}
    filled = dict(bare)
    for var, filler in zip(any_vars, fillers):
        if var not in bare:
            filled[var] = filler
    expected = f_prime(SEC, m, server_ctx, Substitution(bare))
    assert f_prime(SEC, m, server_ctx, Substitution(filled)) == expected
    if not bare or not vars_of(m) & set(bare):
        assert expected == f_prime(SEC, m, server_ctx)


def analysis_fixpoint(knowledge):
    known = set(knowledge)
    while True:
        grown = set(known)
        for m in known:
            if isinstance(m, Concat):
                grown.update(m.parts)
            elif isinstance(m, Enc) and m.key.inverse() in known:
                grown.add(m.body)
        if grown == known:
            return known
        known = grown


def synthesis_round(items, keys):
    grown = set(items)
    for x in items:
        grown.update(concat(x, y) for y in items)
        grown.update(Enc(x, k) for k in keys)
    return grown


def goals_up_to_depth_two():
    leaves = ATOMS + KEYS
    first = [concat(x, y) for x in leaves for y in leaves] + [Enc(x, k) for x in leaves for k in KEYS]
    second = [Enc(x, k) for x in first for k in KEYS]
    return list(leaves) + first, second


SHALLOW_GOALS, DEEP_GOALS = goals_up_to_depth_two()


@settings(deterministic, max_examples=200)
@given(knowledge=st.lists(small_messages, min_size=1, max_size=2))
def test_derivability_matches_exhaustive_enumeration(knowledge):
    analyzed = analysis_fixpoint(knowledge)
    keys = [m for m in analyzed if isinstance(m, Atom) and m.sort is Sort.KEY]
    reachable = synthesis_round(synthesis_round(analyzed, keys), keys)
    known = KnowledgeSet(knowledge)
    assert known.closure() == analyzed
    assert all(known.can_derive(m) for m in reachable)
    for goal in SHALLOW_GOALS:
        assert derives(knowledge, goal) == (goal in reachable), goal
    for goal in DEEP_GOALS:
        assert known.can_derive(goal) == (goal in reachable), goal


@deterministic
@given(knowledge=st.lists(ground_messages, min_size=1, max_size=3), extra=ground_messages)
def test_one_synthesis_step_is_derivable(knowledge, extra):
    closure = sorted(KnowledgeSet(knowledge).closure(), key=repr)
    for left in closure[:4]:
        for right in closure[:4]:
            assert derives(knowledge, concat(left, right))
        for key in closure:
            if key in KEYS:
                assert derives(knowledge, Enc(left, key))
    for item in closure:
        assert derives(knowledge + [extra], item)


@deterministic
@given(knowledge=st.lists(ground_messages, min_size=1, max_size=3), lemma=ground_messages, goal=ground_messages)
def test_cut(knowledge, lemma, goal):
    if derives(knowledge, lemma) and derives(knowledge + [lemma], goal):
        assert derives(knowledge, goal)
