import pytest
from conftest import ALPHA, A, B, C, D, KA, KB, KCD, KS, NA, NA_I, S, SEC, levels

from protosec.errors import NoSource
from protosec.lattice import BOTTOM, TOP, meet
from protosec.terms import EPSILON, Enc, Sort, Substitution, Variable, concat
from protosec.witness import f_max_ik, f_prime, lower_bound_upsilon

X = Variable("X")
Y = Variable("Y", Sort.NONCE)
Z = Variable("Z")
T = Variable("T", Sort.NONCE)


def test_innermost_protective_key(server_ctx):
    m = concat(A, B, Enc(concat(A, B, S, Enc(concat(S, SEC), KA)), KB))
    assert f_max_ik(SEC, m, server_ctx) == levels("A", "S")


def test_weak_inner_key_is_skipped(server_ctx):
    # kb^-1 is held by B only, which does not cover {A, S}
    assert f_max_ik(SEC, Enc(Enc(SEC, KB), KS), server_ctx) == levels("S")


def test_unprotected_is_bottom(server_ctx):
    assert f_max_ik(SEC, Enc(concat(A, SEC), KB), server_ctx) == BOTTOM
    assert f_max_ik(SEC, concat(A, SEC), server_ctx) == BOTTOM


def test_absent_is_top(server_ctx):
    assert f_max_ik(SEC, Enc(NA, KB), server_ctx) == TOP


def test_variable_keys_never_protect(server_ctx):
    key = Variable("K", Sort.KEY)
    assert f_max_ik(NA, Enc(NA, key), server_ctx) == BOTTOM


def test_f_prime_ignores_other_variables(server_ctx):
    received = concat(Enc(concat(B, A, S, Y), KB), Enc(concat(A, B, S, Z), KB))
    assert f_prime(Y, received, server_ctx) == levels("A", "B", "S")
    assert f_prime(NA, Enc(concat(NA, X), KB), server_ctx) == levels("B")


def test_f_prime_follows_variables_bound_to_the_atom(server_ctx):
    m = Enc(concat(B, X, A), KA)
    expected = levels("A", "B")
    assert f_prime(SEC, m, server_ctx, Substitution({X: SEC})) == expected
    assert f_prime(SEC, m, server_ctx, Substitution({X: NA})) == TOP
    assert f_prime(SEC, m, server_ctx) == TOP


def test_lower_bound_from_one_source(server_ctx, server_patterns):
    # Z sits next to Y under ka but is a variable, so only B, A and S join ka^-1
    sent = Enc(concat(B, Z, A, Y, S), KA)
    bound = lower_bound_upsilon(Y, sent, server_patterns, server_ctx)
    assert bound.level == levels("A", "B", "S")
    assert [s.pattern_index for s in bound.sources] == [5]


def test_lower_bound_over_every_source(server_ctx, server_patterns):
    sent = concat(
        Enc(concat(B, A, S, T), KB),
        Enc(concat(A, B, S, Enc(concat(S, SEC), KA)), KB),
    )
    bound = lower_bound_upsilon(T, sent, server_patterns, server_ctx)
    assert bound.level == levels("A", "B", "S")
    assert [s.pattern_index for s in bound.sources] == [3, 7]
    assert bound.sources[0].neighborhood == "{B.A.S.Y3}kb"


def test_ground_components_are_measured_directly(server_ctx, server_patterns):
    sent = Enc(concat(A, B, S, Enc(concat(S, SEC), KA)), KB)
    bound = lower_bound_upsilon(SEC, sent, server_patterns, server_ctx)
    assert bound.level == levels("A", "S")
    assert bound.sources[0].pattern_index is None


def test_no_source(server_ctx, server_patterns):
    q = Variable("Q", Sort.NONCE)
    with pytest.raises(NoSource):
        lower_bound_upsilon(q, Enc(concat(A, q), KS), server_patterns, server_ctx)


def test_nothing_received_is_top(server_ctx):
    assert f_prime(NA_I, EPSILON, server_ctx) == TOP


def test_ground_first_message(server_ctx, server_patterns):
    sent = Enc(concat(A, NA_I, S, B), KS)
    assert lower_bound_upsilon(NA_I, sent, server_patterns, server_ctx).level == levels("A", "B", "S")


def test_received_variable_of_b(server_ctx):
    received = concat(Enc(concat(B, A, S, Y), KB), Enc(concat(A, B, S, Z), KB))
    assert f_prime(Z, received, server_ctx) == levels("A", "B", "S")


def test_forwarded_variable_of_b(server_ctx, server_patterns):
    sent = Enc(concat(B, Z, A, Y, S), KA)
    bound = lower_bound_upsilon(Z, sent, server_patterns, server_ctx)
    assert bound.level == levels("A", "B", "S")
    assert [s.pattern_index for s in bound.sources] == [5]
    assert bound.sources[0].neighborhood == "{B.Z5.A.Y.S}ka"


def test_server_request(server_ctx):
    request = Enc(concat(A, T, S, B), KS)
    assert f_prime(T, request, server_ctx) == levels("A", "B", "S")
    assert f_prime(SEC, request, server_ctx) == TOP


def test_shared_key_neighbours(cd_ctx):
    first = f_prime(ALPHA, Enc(concat(ALPHA, A, X), KCD), cd_ctx)
    second = f_prime(ALPHA, Enc(concat(ALPHA, Variable("Y", Sort.IDENTITY), B), KCD), cd_ctx)
    assert first == levels("A", "C", "D")
    assert second == levels("B", "C", "D")
    assert meet(first, second) == levels("A", "B", "C", "D")
    assert f_max_ik(ALPHA, Enc(concat(ALPHA, C, D), KCD), cd_ctx) == levels("C", "D")
