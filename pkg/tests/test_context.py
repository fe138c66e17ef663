import pytest
from conftest import ALPHA, KA, KB, KCD, NA, NA_I, SEC, A, levels

from protosec.errors import UnassignedLevel, UnknownKey
from protosec.lattice import BOTTOM
from protosec.terms import Atom, Enc, Sort


def test_identities_are_public(server_ctx):
    assert server_ctx.level_of(A) == BOTTOM


def test_declared_levels(server_ctx):
    assert server_ctx.level_of(NA) == levels("A", "B", "S")
    assert server_ctx.level_of(SEC) == levels("A", "S")


def test_session_labels_are_ignored(server_ctx):
    assert server_ctx.level_of(NA_I) == server_ctx.level_of(NA)


def test_public_key_levels(server_ctx):
    assert server_ctx.level_of(KA) == BOTTOM
    assert server_ctx.level_of(KA.inverse()) == levels("A")
    assert server_ctx.inverse_key(KB) == KB.inverse()


def test_shared_key_levels(cd_ctx):
    assert cd_ctx.level_of(KCD) == levels("C", "D")
    assert cd_ctx.level_of(KCD.inverse()) == levels("C", "D")
    assert cd_ctx.key_entry(KCD.inverse()).symmetric


def test_unassigned_level(server_ctx):
    with pytest.raises(UnassignedLevel):
        server_ctx.level_of(Atom("Nb", Sort.NONCE))
    assert not server_ctx.has_level(Atom("Nb", Sort.NONCE))
    assert server_ctx.has_level(ALPHA) is False


def test_unknown_key(server_ctx):
    with pytest.raises(UnknownKey):
        server_ctx.key_entry(Atom("kz", Sort.KEY, owner="A"))
    with pytest.raises(UnknownKey):
        server_ctx.key_entry(NA)


def test_honest_agents(server_ctx):
    assert server_ctx.honest_agents == ("A", "B", "S")
    assert server_ctx.intruder == "I"


def test_agent_knowledge(server_ctx):
    assert server_ctx.agent_can_derive("B", Enc(A, KB))
    assert not server_ctx.agent_can_derive("B", KA.inverse())
    assert KA.inverse() not in server_ctx.intruder_knowledge


def test_context_atoms(server_ctx):
    atoms = server_ctx.atoms()
    assert {NA, SEC, KA, KA.inverse(), Atom("I", Sort.IDENTITY)} <= atoms
