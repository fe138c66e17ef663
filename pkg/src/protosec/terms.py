"""Message algebra: sorted atoms, variables, concatenation and encryption.

Values are immutable. Concatenation is an associative, non-commutative n-ary
list that is always kept flat; the empty concatenation is the empty message ε.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

from .errors import SortError


class Sort(str, Enum):
    IDENTITY = "identity"
    NONCE = "nonce"
    KEY = "key"
    SECRET = "secret"
    ANY = "any"


@dataclass(frozen=True)
class Atom:
    """An indivisible name.

    ``session_index`` is a session label: ``"i"`` for the symbolic session of a
    generalized role, ``"1"``, ``"2"``... for concrete runs of the attack search.
    """

    name: str
    sort: Sort
    session_index: str | None = None
    owner: str | None = None
    is_inverse: bool = False

    def __post_init__(self):
        if (self.owner is not None) != (self.sort is Sort.KEY):
            raise SortError(f"atom {self.name}: an owner is required on keys and only on keys")
        if self.is_inverse and self.sort is not Sort.KEY:
            raise SortError(f"atom {self.name}: only keys have an inverse")

    def inverse(self) -> "Atom":
        if self.sort is not Sort.KEY:
            raise SortError(f"{render(self)} is not a key")
        return replace(self, is_inverse=not self.is_inverse)


@dataclass(frozen=True)
class Variable:
    """A variable; ``pattern_index`` is the renaming subscript of encryption patterns.

    Key variables may be linked to the identity variable of their owner, so that
    ``K_A5`` unified with ``ka`` also binds ``A5`` to ``A``. ``inverse`` marks a
    variable standing for the private half of a key pair.
    """

    name: str
    sort: Sort = Sort.ANY
    pattern_index: int | None = None
    key_owner_link: "Variable | None" = field(default=None, compare=False)
    inverse: bool = False

    def __post_init__(self):
        if self.key_owner_link is not None and self.sort is not Sort.KEY:
            raise SortError(f"variable {self.name}: only key variables carry an owner link")


@dataclass(frozen=True)
class Concat:
    parts: tuple["Message", ...]

    def __post_init__(self):
        if any(isinstance(part, Concat) for part in self.parts):
            raise SortError("concatenations are flat; use concat() to build them")


@dataclass(frozen=True)
class Enc:
    body: "Message"
    key: "Message"

    def __post_init__(self):
        if not (isinstance(self.key, (Atom, Variable)) and self.key.sort is Sort.KEY):
            raise SortError(f"cannot encrypt with {render(self.key)}: not a key")


Message = Union[Atom, Variable, Concat, Enc]
Subject = Union[Atom, Variable]

EPSILON = Concat(())


def concat(*parts: Message) -> Message:
    """Flatten ``parts`` into one message; drops ε and unwraps singletons."""
    flat: list[Message] = []
    for part in parts:
        if isinstance(part, Concat):
            flat.extend(part.parts)
        else:
            flat.append(part)
    if len(flat) == 1:
        return flat[0]
    return Concat(tuple(flat))


def components(m: Message) -> tuple[Message, ...]:
    """Top-level components of ``m`` (ε has none)."""
    if isinstance(m, Concat):
        return m.parts
    return (m,)


def invert(key: Message) -> Message:
    if isinstance(key, Atom):
        return key.inverse()
    if isinstance(key, Variable) and key.sort is Sort.KEY:
        return replace(key, inverse=not key.inverse)
    raise SortError(f"{render(key)} is not a key")


def subterms(m: Message) -> Iterator[Message]:
    yield m
    if isinstance(m, Concat):
        for part in m.parts:
            yield from subterms(part)
    elif isinstance(m, Enc):
        yield from subterms(m.body)
        yield from subterms(m.key)


def atoms_of(m: Message) -> frozenset[Atom]:
    """A(m): every atom of ``m``, keys included."""
    return frozenset(t for t in subterms(m) if isinstance(t, Atom))


def vars_of(m: Message) -> frozenset[Variable]:
    return frozenset(t for t in subterms(m) if isinstance(t, Variable))


def is_ground(m: Message) -> bool:
    return not any(isinstance(t, Variable) for t in subterms(m))


def occurs(x: Message, m: Message) -> bool:
    return any(t == x for t in subterms(m))


def occurrences(subject: Subject, m: Message) -> Iterator[tuple[Enc, ...]]:
    """Yield, per occurrence of ``subject``, its enclosing ciphertexts outermost first.

    Key positions are not occurrences: a ciphertext does not reveal its key.
    """

    def walk(node: Message, chain: tuple[Enc, ...]) -> Iterator[tuple[Enc, ...]]:
        if node == subject:
            yield chain
        elif isinstance(node, Concat):
            for part in node.parts:
                yield from walk(part, chain)
        elif isinstance(node, Enc):
            yield from walk(node.body, chain + (node,))

    yield from walk(m, ())


class Substitution:
    """A finite, sort-respecting map from variables to messages."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: Mapping[Variable, Message] | None = None):
        self._bindings: dict[Variable, Message] = dict(bindings or {})
        for var, value in self._bindings.items():
            if not accepts(var, value):
                raise SortError(f"{render(var)} ({var.sort.value}) cannot be bound to {render(value)}")

    def get(self, var: Variable, default: Message | None = None) -> Message | None:
        return self._bindings.get(var, default)

    def items(self):
        return self._bindings.items()

    def without(self, *variables: Variable) -> "Substitution":
        return Substitution({v: t for v, t in self._bindings.items() if v not in variables})

    def __contains__(self, var: object) -> bool:
        return var in self._bindings

    def __len__(self) -> int:
        return len(self._bindings)

    def __iter__(self):
        return iter(self._bindings)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Substitution) and self._bindings == other._bindings

    def __hash__(self) -> int:
        return hash(frozenset(self._bindings.items()))

    def __repr__(self) -> str:
        return f"Substitution({render_substitution(self)})"


def accepts(var: Variable, value: Message) -> bool:
    """Whether ``var`` may be bound to ``value`` without a sort clash."""
    if var.sort is Sort.ANY:
        return value != EPSILON
    if isinstance(value, Variable):
        if var.sort is Sort.KEY:
            return value.sort is Sort.KEY and value.inverse == var.inverse
        return value.sort is var.sort
    if isinstance(value, Atom):
        if var.sort is Sort.KEY:
            return value.sort is Sort.KEY and value.is_inverse == var.inverse
        return value.sort is var.sort
    return False


def _substitute(m: Message, bindings: Mapping[Variable, Message]) -> Message:
    if isinstance(m, Variable):
        return bindings.get(m, m)
    if isinstance(m, Concat):
        return concat(*(_substitute(part, bindings) for part in m.parts))
    if isinstance(m, Enc):
        return Enc(_substitute(m.body, bindings), _substitute(m.key, bindings))
    return m


def apply_subst(m: Message, sigma: Substitution) -> Message:
    """m σ, re-flattened."""
    if not len(sigma):
        return m
    return _substitute(m, sigma._bindings)


def _owner_atom(key: Atom) -> Atom:
    return Atom(key.owner, Sort.IDENTITY)


def _orient(left: Message, right: Message, rigid: frozenset[Variable]):
    if isinstance(left, Variable) and left not in rigid and accepts(left, right):
        return left, right
    if isinstance(right, Variable) and right not in rigid and accepts(right, left):
        return right, left
    return None


def unify(m1: Message, m2: Message, *, rigid: frozenset[Variable] = frozenset()) -> Substitution | None:
    """Most general sort-respecting syntactic unifier of ``m1`` and ``m2``.

    Variables in ``rigid`` behave as constants. Concatenations unify positionally
    and only when their lengths agree. Returns ``None`` when no unifier exists.
    """
    bindings: dict[Variable, Message] = {}
    pending: list[tuple[Message, Message]] = [(m1, m2)]
    while pending:
        left, right = pending.pop()
        left = _substitute(left, bindings)
        right = _substitute(right, bindings)
        if left == right:
            continue
        if isinstance(left, Variable) or isinstance(right, Variable):
            binding = _orient(left, right, rigid)
            if binding is None:
                return None
            var, value = binding
            if occurs(var, value):
                return None
            step = {var: value}
            bindings = {v: _substitute(t, step) for v, t in bindings.items()}
            bindings[var] = value
            link = var.key_owner_link
            if link is not None:
                if isinstance(value, Atom):
                    pending.append((link, _owner_atom(value)))
                elif isinstance(value, Variable) and value.key_owner_link is not None:
                    pending.append((link, value.key_owner_link))
            continue
        if isinstance(left, Concat) and isinstance(right, Concat):
            if len(left.parts) != len(right.parts):
                return None
            pending.extend(reversed(list(zip(left.parts, right.parts))))
            continue
        if isinstance(left, Enc) and isinstance(right, Enc):
            pending.append((left.key, right.key))
            pending.append((left.body, right.body))
            continue
        return None
    return Substitution(bindings)


def _erase(m: Message, keep: Variable | None) -> Message:
    if isinstance(m, Variable):
        return m if m == keep else EPSILON
    if isinstance(m, Concat):
        return concat(*(_erase(part, keep) for part in m.parts))
    if isinstance(m, Enc):
        body = _erase(m.body, keep)
        if body == EPSILON:
            return EPSILON
        # the key position is structural and survives erasure
        return Enc(body, m.key)
    return m


def derive(m: Message) -> Message:
    """∂m: erase every variable; a ciphertext left with an empty body disappears."""
    return _erase(m, None)


def derive_keep(m: Message, keep: Variable) -> Message:
    """∂[X]m: erase every variable except ``keep``."""
    return _erase(m, keep)


def _rename_key(key: Atom | Variable, index: int) -> Variable:
    if isinstance(key, Atom):
        owner = Variable(key.owner, Sort.IDENTITY, index)
        return Variable(f"K_{key.owner}", Sort.KEY, index, key_owner_link=owner, inverse=key.is_inverse)
    link = key.key_owner_link
    renamed_link = replace(link, pattern_index=index) if link is not None else None
    return Variable(key.name, Sort.KEY, index, key_owner_link=renamed_link, inverse=key.inverse)


def rename_with_index(m: Message, index: int) -> Message:
    """Replace every atom and variable by a variable carrying ``index``.

    ``{B.Z.A.Y.S}ka`` with index 5 becomes ``{B5.Z5.A5.Y5.S5}K_A5``.
    """
    if isinstance(m, Atom):
        if m.sort is Sort.KEY:
            return _rename_key(m, index)
        return Variable(m.name, m.sort, index)
    if isinstance(m, Variable):
        if m.sort is Sort.KEY:
            return _rename_key(m, index)
        return Variable(m.name, m.sort, index)
    if isinstance(m, Concat):
        return concat(*(rename_with_index(part, index) for part in m.parts))
    return Enc(rename_with_index(m.body, index), rename_with_index(m.key, index))


def render(m: Message) -> str:
    """Compact notation: ``{A.Na^i.S.B}ks``, ``K_A5``, ``ka^-1``, ``ε``."""
    if isinstance(m, Atom):
        text = m.name
        if m.session_index is not None:
            text += f"^{m.session_index}"
        if m.is_inverse:
            text += "^-1"
        return text
    if isinstance(m, Variable):
        text = m.name
        if m.pattern_index is not None:
            text += str(m.pattern_index)
        if m.inverse:
            text += "^-1"
        return text
    if isinstance(m, Concat):
        if not m.parts:
            return "ε"
        return ".".join(render(part) for part in m.parts)
    return "{" + render(m.body) + "}" + render(m.key)


def render_substitution(sigma: Substitution) -> str:
    pairs = sorted((render(v), render(t)) for v, t in sigma.items())
    return "{" + ", ".join(f"{v} ↦ {t}" for v, t in pairs) + "}"


def to_dsl(m: Message) -> str:
    """Protocol-language notation, readable back by :mod:`protosec.dsl`."""
    if isinstance(m, Atom):
        text = m.name
        if m.session_index is not None:
            text += f"^{m.session_index}"
        if m.is_inverse:
            return f"inv({text})"
        return text
    if isinstance(m, Variable):
        if m.inverse:
            return f"inv({m.name})"
        return m.name
    if isinstance(m, Concat):
        return " . ".join(to_dsl(part) for part in m.parts)
    return f"enc({to_dsl(m.body)}, {to_dsl(m.key)})"


def sort_key(m: Message) -> tuple[int, str]:
    """Stable ordering: atoms before variables before compound messages."""
    rank = 0 if isinstance(m, Atom) else 1 if isinstance(m, Variable) else 2
    return rank, render(m)
