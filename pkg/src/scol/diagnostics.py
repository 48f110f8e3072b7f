"""Diagnostics and the obligation catalogue."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

# Obligation id -> rule it enforces.
OBLIGATIONS = {
    "ALLOC": "create x: ensures x.open, x.owner = Void, x.observers = {}",
    "UNWRAP-PRE": "x.unwrap requires x.wrapped",
    "UPDATE-OPEN": "x.a := y requires x.open",
    "UPDATE-GUARD": "x.a := y requires all o in x.observers : o.open or guard(x.a := y, o)",
    "WRAP-PRE-OPEN": "x.wrap requires x.open",
    "WRAP-PRE-INV": "x.wrap requires x.inv",
    "WRAP-PRE-OWNS": "x.wrap requires all o in x.owns : o.wrapped",
    "A1": "admissibility: inv reads only Current, owns and subjects",
    "A2": "admissibility: every subject has Current among its observers",
    "A3": "admissibility: inv is preserved by subject updates that satisfy their guard",
    "A4": "admissibility: inv does not mention closed or owner",
    "RC": "logical function reads stay within its read clause",
    "CALL-PRE": "a call happens in a state satisfying the callee's precondition",
    "CALL-POST": "a call terminates in a state satisfying the callee's postcondition",
    "FRAME": "every instruction writes only objects in the modify clause's ownership domains",
}

# Diagnostics that are not proof obligations.
NON_OBLIGATIONS = {
    "IO": "input file cannot be read",
    "PARSE": "lexical or syntax error",
    "NAME": "unresolved or duplicate name",
    "TYPE": "type mismatch",
    "DEFAULTS": "default annotation suppressed by an explicit annotation",
    "EXEC": "execution error (Void target, step limit, invalid ghost state)",
    "G1": "global validity: a closed object violates its invariant",
    "G2": "global validity: a closed owner has an owned object that is open or points elsewhere",
}


@dataclass(frozen=True)
class Diagnostic:
    obligation_id: str
    message: str
    file: Optional[str] = None
    line: Optional[int] = None
    column: Optional[int] = None
    snapshot_id: Optional[int] = None
    severity: str = "error"
    tainted: bool = False

    def to_json(self):
        return asdict(self)

    def __str__(self):
        where = self.file or "<input>"
        if self.line is not None:
            where += f":{self.line}:{self.column}"
        tag = self.obligation_id
        if self.severity != "error":
            tag = f"{self.severity} {tag}"
        extra = " (tainted)" if self.tainted else ""
        return f"{where}: {tag}: {self.message}{extra}"


class SourceError(Exception):
    """Load-time failure carrying a location."""

    def __init__(self, code, message, file=None, line=None, column=None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.file = file
        self.line = line
        self.column = column

    def diagnostic(self):
        return Diagnostic(self.code, self.message, self.file, self.line, self.column)


def at(code, message, loc, file=None, **kw):
    """Build a diagnostic at an optional ``Loc``."""
    line = loc.line if loc is not None else None
    col = loc.column if loc is not None else None
    return Diagnostic(code, message, file, line, col, **kw)
