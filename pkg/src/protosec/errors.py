"""Exceptions raised by the analyzer.

Everything the package raises on purpose derives from ``ProtosecError`` so the
command line and the HTTP service can turn it into a diagnostic in one place.
"""

from __future__ import annotations

from typing import Any


class ProtosecError(Exception):
    """Base class for every analyzer error."""


class SortError(ProtosecError):
    """A term or a substitution puts a message where its sort forbids it."""


class UnassignedLevel(ProtosecError):
    """The verification context has no security level for an atom."""

    def __init__(self, atom: Any):
        super().__init__(f"no security level assigned to {atom}")
        self.atom = atom


class UnknownKey(ProtosecError):
    """The atom is not a key of the context's key table."""

    def __init__(self, atom: Any):
        super().__init__(f"{atom} is not a key of the verification context")
        self.atom = atom


class JoinWithUnknowns(ProtosecError):
    """Join is only defined on levels without symbolic contributions."""


class MalformedSpec(ProtosecError):
    """The protocol or an explicit role cannot be analyzed as written."""


class ParseError(ProtosecError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class NoSource(ProtosecError):
    """A sent component unifies with none of the protocol's encryption patterns."""

    def __init__(self, component: Any, subject: Any = None):
        super().__init__(f"no encryption pattern is a source of {component}")
        self.component = component
        self.subject = subject


class SearchBudgetExceeded(ProtosecError):
    def __init__(self, nodes: int):
        super().__init__(f"attack search gave up after {nodes} nodes")
        self.nodes = nodes


class ConfigError(ProtosecError):
    """A setting from the environment or the command line is out of range or not a number."""
