"""The protocol description language.

::

    principals A, B, S ;
    intruder I ;
    keys   { ka: pub(A); kb: pub(B); ks: pub(S); }
    fresh  { A: Na; S: sec; }
    levels { Na = {A,B,S}; sec = {A,S}; }
    knows  { A: A,B,S,ka,kb,ks,inv(ka); I: A,B,S,ka,kb,ks; }
    protocol {
      1. A -> S : enc( A . Na . S . B , ks ) ;
    }
    roles { vars X: secret; A { 1. A -> I(S) : enc(A . Na^i . S . B, ks) ; } }

Parsing happens in two passes: pyparsing builds a raw tree that keeps source
offsets, then names are resolved against the declarations so that an unknown
identifier is reported where it is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import pyparsing as pp

from .context import KeyEntry, VerificationContext, public_key, shared_key
from .errors import ParseError
from .lattice import SecurityLevel
from .roles import GeneralizedRole, ProtocolSpec, RoleRule, Step
from .terms import EPSILON, Atom, Enc, Message, Sort, Variable, concat, subterms

pp.ParserElement.enable_packrat()

LPAR, RPAR, LBRACE, RBRACE, SEMI, COLON, COMMA, DOT, EQUALS = map(pp.Suppress, "(){};:,.=")
ARROW = pp.Suppress("->")
IDENT = pp.Regex(r"[A-Za-z_][A-Za-z0-9_']*")
INTEGER = pp.Regex(r"\d+")

SORT_NAMES = {s.value: s for s in Sort}


@dataclass(frozen=True)
class RawName:
    name: str
    loc: int
    index: str | None = None
    inverse: bool = False


@dataclass(frozen=True)
class RawEnc:
    body: tuple
    key: RawName
    loc: int


@dataclass(frozen=True)
class RawEndpoint:
    """``A``, or ``I(A)`` for the intruder posing as A."""

    agent: str
    loc: int
    intruder: str | None = None


@dataclass(frozen=True)
class RawStep:
    id: int
    sender: RawEndpoint
    receiver: RawEndpoint
    message: tuple
    loc: int


def _name(loc, toks):
    return RawName(toks[0], loc, toks[1] if len(toks) > 1 else None)


def _inverse(loc, toks):
    return RawName(toks[0].name, loc, toks[0].index, inverse=True)


def _endpoint(loc, toks):
    if len(toks) == 2:
        return RawEndpoint(toks[1], loc, intruder=toks[0])
    return RawEndpoint(toks[0], loc)


def _term_elements():
    term = pp.Forward()
    plain = (IDENT + pp.Optional(pp.Suppress("^") + (IDENT | INTEGER))).set_parse_action(_name)
    inverse = (pp.Suppress(pp.Keyword("inv")) + LPAR + plain + RPAR).set_parse_action(_inverse)
    enc = (pp.Suppress(pp.Keyword("enc")) + LPAR + pp.Group(term) + COMMA + (inverse | plain) + RPAR).set_parse_action(
        lambda loc, toks: RawEnc(tuple(toks[0]), toks[1], loc)
    )
    primary = enc | inverse | plain
    term <<= primary + pp.ZeroOrMore(DOT + primary)
    return term, plain, inverse


def _grammar() -> pp.ParserElement:
    term, plain, inverse = _term_elements()

    principals = pp.Keyword("principals").suppress() + pp.Group(pp.DelimitedList(IDENT)) + SEMI
    intruder = pp.Keyword("intruder").suppress() + plain + SEMI

    key_kind = pp.Group(pp.Keyword("pub") + LPAR + IDENT + RPAR) | pp.Group(
        pp.Keyword("shared") + LPAR + IDENT + COMMA + IDENT + RPAR
    )
    key_decl = pp.Group(plain + COLON + key_kind + SEMI)
    keys = pp.Keyword("keys").suppress() + LBRACE + pp.Group(pp.ZeroOrMore(key_decl)) + RBRACE

    fresh_item = pp.Group(pp.Optional(pp.Keyword("nonce") | pp.Keyword("secret"), default="") + plain)
    fresh_decl = pp.Group(plain + COLON + pp.Group(pp.DelimitedList(fresh_item)) + SEMI)
    fresh = pp.Keyword("fresh").suppress() + LBRACE + pp.Group(pp.ZeroOrMore(fresh_decl)) + RBRACE

    members = pp.Group(pp.Optional(pp.DelimitedList(IDENT)))
    level_decl = pp.Group((inverse | plain) + EQUALS + LBRACE + members + RBRACE + SEMI)
    levels = pp.Keyword("levels").suppress() + LBRACE + pp.Group(pp.ZeroOrMore(level_decl)) + RBRACE

    knows_decl = pp.Group(plain + COLON + pp.Group(pp.DelimitedList(inverse | plain)) + SEMI)
    knows = pp.Keyword("knows").suppress() + LBRACE + pp.Group(pp.ZeroOrMore(knows_decl)) + RBRACE

    endpoint = (IDENT + pp.Optional(LPAR + IDENT + RPAR)).set_parse_action(_endpoint)
    step = (INTEGER + DOT + endpoint + ARROW + endpoint + COLON + pp.Group(term) + SEMI).set_parse_action(
        lambda loc, toks: RawStep(int(toks[0]), toks[1], toks[2], tuple(toks[3]), loc)
    )
    protocol = pp.Keyword("protocol").suppress() + LBRACE + pp.Group(pp.OneOrMore(step)) + RBRACE

    var_decl = pp.Group(plain + COLON + pp.one_of(list(SORT_NAMES)))
    role_vars = pp.Keyword("vars").suppress() + pp.DelimitedList(var_decl) + SEMI
    role_block = pp.Group(plain + LBRACE + pp.Group(pp.OneOrMore(step)) + RBRACE)
    roles = (
        pp.Keyword("roles").suppress()
        + LBRACE
        + pp.Group(pp.Optional(role_vars))
        + pp.Group(pp.OneOrMore(role_block))
        + RBRACE
    )

    document = (
        pp.Group(principals)("principals")
        + pp.Group(intruder)("intruder")
        + pp.Optional(pp.Group(keys)("keys"))
        + pp.Optional(pp.Group(fresh)("fresh"))
        + pp.Optional(pp.Group(levels)("levels"))
        + pp.Optional(pp.Group(knows)("knows"))
        + pp.Group(protocol)("protocol")
        + pp.Optional(pp.Group(roles)("roles"))
    )
    document.ignore(pp.python_style_comment)
    return document


def _term_grammar() -> pp.ParserElement:
    term, _, _ = _term_elements()
    return term


DOCUMENT = _grammar()
TERM = _term_grammar()


def default_sort(name: str) -> Sort:
    """Fresh atoms named like ``Na`` or ``n1`` are nonces; anything else is a secret."""
    return Sort.NONCE if name[:1] in ("N", "n") else Sort.SECRET


@dataclass
class Names:
    """Declared identifiers of one description."""

    text: str
    principals: tuple[str, ...] = ()
    keys: dict[str, KeyEntry] = field(default_factory=dict)
    fresh: dict[str, Atom] = field(default_factory=dict)
    variables: dict[str, Variable] = field(default_factory=dict)

    def fail(self, message: str, loc: int) -> ParseError:
        return ParseError(message, pp.lineno(loc, self.text), pp.col(loc, self.text))

    def declared(self, name: str) -> bool:
        return name in self.principals or name in self.keys or name in self.fresh or name in self.variables

    def atom(self, raw: RawName, *, allow_variables: bool = False) -> Atom | Variable:
        if allow_variables and raw.name in self.variables:
            var = self.variables[raw.name]
            if raw.inverse:
                if var.sort is not Sort.KEY:
                    raise self.fail(f"inv() applied to non-key variable {raw.name}", raw.loc)
                return Variable(var.name, var.sort, var.pattern_index, inverse=True)
            return var
        if raw.name in self.keys:
            key = self.keys[raw.name].key
            return key.inverse() if raw.inverse else key
        if raw.inverse:
            raise self.fail(f"inv() applied to {raw.name}, which is not a declared key", raw.loc)
        if raw.name in self.principals:
            return Atom(raw.name, Sort.IDENTITY)
        if raw.name in self.fresh:
            atom = self.fresh[raw.name]
            if raw.index is not None:
                return Atom(atom.name, atom.sort, session_index=raw.index)
            return atom
        raise self.fail(f"undeclared identifier {raw.name}", raw.loc)

    def principal(self, name: str, loc: int) -> str:
        if name not in self.principals:
            raise self.fail(f"undeclared principal {name}", loc)
        return name

    def term(self, raw: tuple, *, allow_variables: bool = False) -> Message:
        parts = []
        for node in raw:
            if isinstance(node, RawEnc):
                body = self.term(node.body, allow_variables=allow_variables)
                key = self.atom(node.key, allow_variables=allow_variables)
                if key.sort is not Sort.KEY:
                    raise self.fail(f"{node.key.name} is not a key", node.key.loc)
                parts.append(Enc(body, key))
            else:
                parts.append(self.atom(node, allow_variables=allow_variables))
        return concat(*parts)


def _parse(grammar: pp.ParserElement, text: str) -> pp.ParseResults:
    try:
        return grammar.parse_string(text, parse_all=True)
    except pp.ParseBaseException as exc:
        raise ParseError(exc.msg, exc.lineno, exc.col) from None


def _section(tree: pp.ParseResults, name: str):
    return tree[name][0] if name in tree else []


def _declare_keys(names: Names, decls) -> None:
    for raw, kind in decls:
        if names.declared(raw.name):
            raise names.fail(f"{raw.name} declared twice", raw.loc)
        owners = [names.principal(owner, raw.loc) for owner in kind[1:]]
        if kind[0] == "pub":
            names.keys[raw.name] = public_key(raw.name, owners[0])
        else:
            names.keys[raw.name] = shared_key(raw.name, owners[0], owners[1])


def _declare_fresh(names: Names, decls) -> dict[str, frozenset[Atom]]:
    fresh: dict[str, set[Atom]] = {}
    for raw_agent, items in decls:
        agent = names.principal(raw_agent.name, raw_agent.loc)
        for kind, raw in items:
            if names.declared(raw.name):
                raise names.fail(f"{raw.name} declared twice", raw.loc)
            atom = Atom(raw.name, Sort(kind) if kind else default_sort(raw.name))
            names.fresh[raw.name] = atom
            fresh.setdefault(agent, set()).add(atom)
    return {agent: frozenset(atoms) for agent, atoms in fresh.items()}


def _levels(names: Names, decls) -> dict[Atom, SecurityLevel]:
    levels = {}
    for raw, members in decls:
        atom = names.atom(raw)
        if atom.sort is Sort.IDENTITY:
            raise names.fail(f"identities are public; {atom.name} cannot be given a level", raw.loc)
        levels[atom] = SecurityLevel.of(names.principal(p, raw.loc) for p in members)
    return levels


def _knowledge(names: Names, decls) -> dict[str, frozenset[Atom]]:
    knowledge: dict[str, set[Atom]] = {}
    for raw_agent, items in decls:
        agent = names.principal(raw_agent.name, raw_agent.loc)
        atoms = knowledge.setdefault(agent, set())
        for raw in items:
            atom = names.atom(raw)
            atoms.add(atom)
            if atom.sort is Sort.KEY and names.keys[atom.name].symmetric:
                atoms.add(atom.inverse())
    return {agent: frozenset(atoms) for agent, atoms in knowledge.items()}


def _steps(names: Names, raw_steps) -> tuple[Step, ...]:
    steps = []
    for raw in raw_steps:
        if raw.sender.intruder or raw.receiver.intruder:
            raise names.fail("protocol steps are written between honest principals", raw.loc)
        sender = names.principal(raw.sender.agent, raw.sender.loc)
        receiver = names.principal(raw.receiver.agent, raw.receiver.loc)
        steps.append(Step(raw.id, sender, receiver, names.term(raw.message)))
    return tuple(steps)


def _declare_variables(names: Names, decls) -> None:
    for raw, sort_name in decls:
        if names.declared(raw.name):
            raise names.fail(f"{raw.name} declared twice", raw.loc)
        names.variables[raw.name] = Variable(raw.name, SORT_NAMES[sort_name])


def _role(names: Names, intruder: str, raw_agent: RawName, raw_steps) -> GeneralizedRole:
    agent = names.principal(raw_agent.name, raw_agent.loc)
    rules: list[RoleRule] = []
    pending: list[Message] = []
    pending_from: str | None = None
    for raw in raw_steps:
        for end in (raw.sender, raw.receiver):
            if end.intruder is not None and end.intruder != intruder:
                raise names.fail(f"{end.intruder} is not the intruder", end.loc)
            names.principal(end.agent, end.loc)
        message = names.term(raw.message, allow_variables=True)
        if raw.receiver.agent == agent and raw.receiver.intruder is None:
            pending.append(message)
            pending_from = pending_from or raw.sender.agent
        elif raw.sender.agent == agent and raw.sender.intruder is None:
            rules.append(RoleRule(concat(*pending), message, pending_from, raw.receiver.agent))
            pending, pending_from = [], None
        else:
            raise names.fail(f"role {agent}: step {raw.id} is neither sent nor received by {agent}", raw.loc)
    if pending:
        rules.append(RoleRule(concat(*pending), EPSILON, pending_from, None))
    variables: dict[Variable, None] = {}
    for rule in rules:
        for node in subterms(rule.received):
            if isinstance(node, Variable):
                variables.setdefault(node, None)
    return GeneralizedRole(agent, tuple(rules), tuple(variables))


def parse_dsl(text: str) -> tuple[VerificationContext, ProtocolSpec]:
    """Parse a protocol description into its verification context and steps."""
    if not text.strip():
        raise ParseError("empty protocol description")
    tree = _parse(DOCUMENT, text)
    names = Names(text)
    intruder = tree["intruder"][0].name
    names.principals = tuple(dict.fromkeys([*tree["principals"][0], intruder]))
    _declare_keys(names, _section(tree, "keys"))
    fresh = _declare_fresh(names, _section(tree, "fresh"))
    ctx = VerificationContext(
        principals=names.principals,
        intruder=intruder,
        keys={entry.key: entry for entry in names.keys.values()},
        atom_levels=_levels(names, _section(tree, "levels")),
        knowledge=_knowledge(names, _section(tree, "knows")),
    )
    steps = _steps(names, tree["protocol"][0])
    roles: tuple[GeneralizedRole, ...] = ()
    if "roles" in tree:
        raw_vars, raw_roles = tree["roles"][0], tree["roles"][1]
        _declare_variables(names, raw_vars)
        roles = tuple(_role(names, intruder, raw_agent, raw_steps) for raw_agent, raw_steps in raw_roles)
    return ctx, ProtocolSpec(steps, fresh, roles)


def parse_file(path: str | Path) -> tuple[VerificationContext, ProtocolSpec]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        before = exc.object[: exc.start]
        line = before.count(b"\n") + 1
        column = exc.start - before.rfind(b"\n")
        raise ParseError(f"{path} is not UTF-8 text", line, column) from exc
    return parse_dsl(text)


def parse_term(
    text: str,
    ctx: VerificationContext,
    spec: ProtocolSpec,
    variables: dict[str, Variable] | None = None,
) -> Message:
    """Read one message in protocol-language notation against a parsed description."""
    if not text.strip():
        return EPSILON
    names = Names(
        text,
        principals=ctx.principals,
        keys={entry.key.name: entry for entry in ctx.keys.values()},
        fresh={a.name: a for a in spec.fresh_atoms()},
        variables=dict(variables or {}),
    )
    raw = _parse(TERM, text)
    return names.term(tuple(raw), allow_variables=True)
