import pytest
from pathlib import Path

from protosec.context import VerificationContext, public_key, shared_key
from protosec.dsl import parse_file
from protosec.lattice import SecurityLevel
from protosec.roles import encryption_patterns, extract_generalized_roles
from protosec.terms import Atom, Sort

REPO_ROOT = Path(__file__).parents[1]
PROTOCOLS = REPO_ROOT / "protocols"

A = Atom("A", Sort.IDENTITY)
B = Atom("B", Sort.IDENTITY)
C = Atom("C", Sort.IDENTITY)
D = Atom("D", Sort.IDENTITY)
S = Atom("S", Sort.IDENTITY)
KA = Atom("ka", Sort.KEY, owner="A")
KB = Atom("kb", Sort.KEY, owner="B")
KS = Atom("ks", Sort.KEY, owner="S")
KCD = Atom("kcd", Sort.KEY, owner="C")
NA = Atom("Na", Sort.NONCE)
NA_I = Atom("Na", Sort.NONCE, session_index="i")
SEC = Atom("sec", Sort.SECRET)
ALPHA = Atom("alpha", Sort.SECRET)


def levels(*names):
    return SecurityLevel.of(names)


@pytest.fixture(scope="session")
def server():
    """(context, spec) of the three-party key-server protocol."""
    return parse_file(PROTOCOLS / "key_server.proto")


@pytest.fixture(scope="session")
def server_ctx(server):
    return server[0]


@pytest.fixture(scope="session")
def server_spec(server):
    return server[1]


@pytest.fixture(scope="session")
def server_roles(server_ctx, server_spec):
    return extract_generalized_roles(server_spec, server_ctx)


@pytest.fixture(scope="session")
def server_patterns(server_roles):
    return encryption_patterns(server_roles)


@pytest.fixture(scope="session")
def leaky():
    return parse_file(PROTOCOLS / "key_server_leaky.proto")


@pytest.fixture(scope="session")
def cd_ctx():
    """A context with one key shared by C and D and a secret alpha."""
    keys = [shared_key("kcd", "C", "D"), public_key("ka", "A")]
    return VerificationContext(
        principals=("A", "B", "C", "D", "I"),
        intruder="I",
        keys={entry.key: entry for entry in keys},
        atom_levels={ALPHA: levels("A", "B", "C", "D")},
        knowledge={"I": frozenset({A, B, C, D})},
    )
