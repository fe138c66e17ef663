import pytest
from conftest import A, B, KA, KB, NA, NA_I, S

from protosec.errors import SortError
from protosec.terms import (
    EPSILON,
    Atom,
    Concat,
    Enc,
    Sort,
    Substitution,
    Variable,
    apply_subst,
    concat,
    derive,
    derive_keep,
    is_ground,
    occurrences,
    rename_with_index,
    render,
    to_dsl,
    unify,
)

X = Variable("X")
Y = Variable("Y", Sort.NONCE)
Z = Variable("Z")


def test_concat_is_flat():
    assert concat(A, concat(B, S)) == Concat((A, B, S))
    assert concat(A) == A
    assert concat() == EPSILON
    assert concat(EPSILON, A) == A


def test_nested_concat_is_rejected():
    with pytest.raises(SortError):
        Concat((A, Concat((B, S))))


def test_encryption_needs_a_key():
    with pytest.raises(SortError):
        Enc(A, B)


def test_only_keys_have_owners():
    with pytest.raises(SortError):
        Atom("k", Sort.KEY)
    with pytest.raises(SortError):
        Atom("Nb", Sort.NONCE, owner="B")


def test_inverse_round_trips():
    assert KA.inverse().inverse() == KA
    assert KA.inverse() != KA


def test_render_and_dsl_notation():
    m = Enc(concat(A, NA_I, S, B), KA.inverse())
    assert render(m) == "{A.Na^i.S.B}ka^-1"
    assert to_dsl(m) == "enc(A . Na^i . S . B, inv(ka))"
    assert render(EPSILON) == "ε"


def test_key_positions_are_not_occurrences():
    assert list(occurrences(KA, Enc(A, KA))) == []


def test_occurrences_list_enclosing_ciphertexts():
    inner = Enc(NA, KB)
    outer = Enc(concat(NA, inner), KA)
    assert list(occurrences(NA, outer)) == [(outer,), (outer, inner)]
    assert list(occurrences(NA, NA)) == [()]


def test_unify_binds_variables():
    sigma = unify(Enc(concat(X, B), KA), Enc(concat(A, B), KA))
    assert sigma is not None
    assert sigma.get(X) == A


def test_unify_respects_sorts():
    assert unify(Y, A) is None
    assert unify(Y, NA) == Substitution({Y: NA})


def test_unify_occurs_check():
    assert unify(X, Enc(concat(X, A), KA)) is None


def test_unify_concat_lengths_must_agree():
    assert unify(concat(X, A), concat(A, B, S)) is None


def test_rigid_variables_behave_as_constants():
    assert unify(X, A, rigid=frozenset({X})) is None
    assert unify(Z, X, rigid=frozenset({X})) == Substitution({Z: X})


def test_any_variable_never_binds_the_empty_message():
    with pytest.raises(SortError):
        Substitution({X: EPSILON})


def test_substitution_sorts_are_checked():
    with pytest.raises(SortError):
        Substitution({Y: A})


def test_apply_subst_reflattens():
    assert apply_subst(concat(A, X), Substitution({X: concat(B, S)})) == Concat((A, B, S))


def test_rename_with_index_links_key_owner():
    pattern = rename_with_index(Enc(concat(B, Z, A, Y, S), KA), 5)
    assert render(pattern) == "{B5.Z5.A5.Y5.S5}K_A5"
    sigma = unify(pattern, Enc(concat(B, Z, A, Y, S), KA), rigid=frozenset({Y, Z}))
    assert sigma is not None
    assert sigma.get(Variable("A", Sort.IDENTITY, 5)) == A


def test_owner_link_rejects_a_foreign_key():
    pattern = rename_with_index(Enc(concat(A, B, S, Z), KB), 4)
    # B4 is bound to A by the body, so kb cannot belong to B4
    assert unify(pattern, Enc(concat(B, A, S, Variable("T", Sort.NONCE)), KB)) is None


def test_derive_erases_variables():
    assert derive(concat(A, X)) == A
    assert derive(Enc(concat(X, Z), KA)) == EPSILON
    assert derive(concat(A, Enc(X, KA))) == A


def test_derive_keeps_variable_keys():
    key = Variable("K", Sort.KEY)
    assert derive(Enc(concat(A, X), key)) == Enc(A, key)


def test_derive_keep():
    m = concat(X, Enc(concat(Z, A), KA))
    assert derive_keep(m, Z) == Enc(concat(Z, A), KA)
    assert is_ground(derive(m))
