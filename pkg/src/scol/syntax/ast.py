"""AST for the specification language.

All nodes are frozen dataclasses holding tuples, so a parsed ``Program`` is
immutable and hashable.  Source locations never take part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class Loc:
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


def _loc():
    return field(default=None, compare=False, repr=False)


# --------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class VoidLit:
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class CurrentRef:
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class ResultRef:
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Name:
    """Unqualified identifier, optionally applied to arguments.

    Resolved at evaluation time: bound variable, then a feature of Current,
    then a built-in attribute or shorthand of Current.
    """

    name: str
    args: Optional[Tuple["Expr", ...]] = None
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Member:
    """``target.name`` or ``target.name (args)``."""

    target: "Expr"
    name: str
    args: Optional[Tuple["Expr", ...]] = None
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Index:
    target: "Expr"
    index: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "-"
    operand: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class IfExpr:
    cond: "Expr"
    then: "Expr"
    else_: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Quant:
    kind: str  # "all" | "some"
    var: str
    domain: "Expr"
    body: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Old:
    expr: "Expr"
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class SetLit:
    elems: Tuple["Expr", ...] = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class SeqLit:
    elems: Tuple["Expr", ...] = ()
    loc: Optional[Loc] = _loc()


Expr = Union[
    IntLit, BoolLit, VoidLit, CurrentRef, ResultRef, Name, Member, Index,
    Unary, Binary, IfExpr, Quant, Old, SetLit, SeqLit,
]


# --------------------------------------------------------------------------
# Instructions


@dataclass(frozen=True)
class Create:
    target: Expr  # Name or Member
    ctor: Optional[str] = None
    args: Tuple[Expr, ...] = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Assign:
    target: Expr  # Name or Member
    value: Expr
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class CallInstr:
    target: Optional[Expr]  # None means Current
    name: str
    args: Tuple[Expr, ...] = ()
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Wrap:
    target: Optional[Expr] = None
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Unwrap:
    target: Optional[Expr] = None
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class WrapAll:
    objects: Expr
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class UnwrapAll:
    objects: Expr
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class If:
    branches: Tuple[Tuple[Expr, Tuple["Instr", ...]], ...]
    else_body: Optional[Tuple["Instr", ...]] = None
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class Across:
    domain: Expr
    var: str
    body: Tuple["Instr", ...] = ()
    loc: Optional[Loc] = _loc()


Instr = Union[Create, Assign, CallInstr, Wrap, Unwrap, WrapAll, UnwrapAll, If, Across]


# --------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class TypeRef:
    name: str
    args: Tuple["TypeRef", ...] = ()
    loc: Optional[Loc] = _loc()

    def __str__(self):
        if not self.args:
            return self.name
        return f"{self.name} [{', '.join(str(a) for a in self.args)}]"


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeRef
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    type: TypeRef
    is_ghost: bool = False
    guard: Optional[Expr] = None
    exports: Optional[Tuple[str, ...]] = None
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class FunctionDecl:
    """Logical function: side-effect free definition plus read clause."""

    name: str
    params: Tuple[Param, ...]
    type: TypeRef
    definition: Expr
    read: Tuple[Expr, ...] = ()
    is_ghost: bool = True
    exports: Optional[Tuple[str, ...]] = None
    loc: Optional[Loc] = _loc()


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: Tuple[Param, ...] = ()
    result_type: Optional[TypeRef] = None
    require: Tuple[Expr, ...] = ()
    ensure: Tuple[Expr, ...] = ()
    # None: no modify clause written
    modify: Optional[Tuple[Expr, ...]] = None
    locals: Tuple[Param, ...] = ()
    body: Tuple[Instr, ...] = ()
    exports: Optional[Tuple[str, ...]] = None
    is_ghost: bool = False
    # suppressed default groups: "contracts", "wrapping", "modify"
    explicit: Tuple[str, ...] = ()
    loc: Optional[Loc] = _loc()

    @property
    def is_function(self):
        return self.result_type is not None

    @property
    def is_public(self):
        return self.exports is None or self.exports == ("ANY",)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    generics: Tuple[str, ...] = ()
    creators: Tuple[str, ...] = ()
    attributes: Tuple[AttributeDecl, ...] = ()
    functions: Tuple[FunctionDecl, ...] = ()
    methods: Tuple[MethodDecl, ...] = ()
    invariant: Tuple[Expr, ...] = ()
    # built-in ghost sets assigned from their defining conjunct at wrap time
    implicit_sets: Tuple[Tuple[str, Expr], ...] = ()
    loc: Optional[Loc] = _loc()

    def attribute(self, name):
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def function(self, name):
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def method(self, name):
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class Program:
    classes: Tuple[ClassDecl, ...] = ()
    entry: Optional[MethodDecl] = None

    def cls(self, name):
        for c in self.classes:
            if c.name == name:
                return c
        return None


# built-in ghost attributes every object carries
GHOST_SETS = ("owns", "subjects", "observers")
BUILTIN_ATTRS = ("closed", "owner") + GHOST_SETS
SHORTHANDS = ("open", "free", "wrapped", "inv")
BUILTIN_TYPES = ("INTEGER", "BOOLEAN", "SET", "SEQUENCE", "ANY")


def iter_subexprs(e):
    """Yield the direct sub-expressions of ``e``."""
    if isinstance(e, (Name,)):
        yield from e.args or ()
    elif isinstance(e, Member):
        yield e.target
        yield from e.args or ()
    elif isinstance(e, Index):
        yield e.target
        yield e.index
    elif isinstance(e, Unary):
        yield e.operand
    elif isinstance(e, Binary):
        yield e.left
        yield e.right
    elif isinstance(e, IfExpr):
        yield e.cond
        yield e.then
        yield e.else_
    elif isinstance(e, Quant):
        yield e.domain
        yield e.body
    elif isinstance(e, Old):
        yield e.expr
    elif isinstance(e, (SetLit, SeqLit)):
        yield from e.elems


def walk(e):
    """Pre-order traversal of an expression tree."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(list(iter_subexprs(node))))


def conjuncts(e):
    """Split top-level ``and`` chains."""
    if isinstance(e, Binary) and e.op == "and":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]
