"""Default annotations as an AST-to-AST pass.

Public procedures get wrapped-ness contracts on Current, its observers and
reference arguments, plus unwrap/wrap bracketing of the body.  Procedures
modify Current and functions nothing.  Built-in ghost sets that the class
never mentions are pinned to the empty set, and a set defined by a single
invariant clause ``s = expr`` becomes implicit: wrap assigns it first.

Explicit annotations win.  A method may opt out of default groups with
``note explicit: contracts, wrapping, modify``; writing ``open`` in a
public procedure's precondition also suppresses the wrapped contracts.
"""

from __future__ import annotations

from dataclasses import replace

from scol.diagnostics import at
from scol.syntax import ast as A

_CURRENT = A.CurrentRef()
_BUILTIN_TYPE_NAMES = ("INTEGER", "BOOLEAN", "SET", "SEQUENCE")


def _wrapped(e):
    return A.Member(e, "wrapped")


def _is_current(e):
    return e is None or isinstance(e, A.CurrentRef)


def _current_set_mentions(expr, name):
    """Number of references to Current's attribute ``name`` inside ``expr``."""
    n = 0
    for node in A.walk(expr):
        if isinstance(node, A.Name) and node.name == name and node.args is None:
            n += 1
        elif isinstance(node, A.Member) and node.name == name and isinstance(node.target, A.CurrentRef):
            n += 1
    return n


def _instr_exprs(ins):
    if isinstance(ins, A.Create):
        yield ins.target
        yield from ins.args
    elif isinstance(ins, A.Assign):
        yield ins.target
        yield ins.value
    elif isinstance(ins, A.CallInstr):
        if ins.target is not None:
            yield ins.target
        yield from ins.args
    elif isinstance(ins, (A.Wrap, A.Unwrap)):
        if ins.target is not None:
            yield ins.target
    elif isinstance(ins, (A.WrapAll, A.UnwrapAll)):
        yield ins.objects
    elif isinstance(ins, A.If):
        for cond, body in ins.branches:
            yield cond
            for i in body:
                yield from _instr_exprs(i)
        for i in ins.else_body or ():
            yield from _instr_exprs(i)
    elif isinstance(ins, A.Across):
        yield ins.domain
        for i in ins.body:
            yield from _instr_exprs(i)


def _walk_instrs(body):
    for ins in body:
        yield ins
        if isinstance(ins, A.If):
            for _, b in ins.branches:
                yield from _walk_instrs(b)
            yield from _walk_instrs(ins.else_body or ())
        elif isinstance(ins, A.Across):
            yield from _walk_instrs(ins.body)


def _class_mentions(c, name):
    """Whether the class text refers to Current's built-in set ``name``."""
    exprs = list(c.invariant)
    for m in c.methods:
        exprs += [*m.require, *m.ensure, *(m.modify or ())]
        for ins in m.body:
            exprs += list(_instr_exprs(ins))
    for f in c.functions:
        exprs += [f.definition, *f.read]
    return any(_current_set_mentions(e, name) for e in exprs)


def _set_definition(conj, name):
    """``expr`` when ``conj`` has the shape ``name = expr``."""
    if not (isinstance(conj, A.Binary) and conj.op == "="):
        return None
    left = conj.left
    is_name = isinstance(left, A.Name) and left.name == name and left.args is None
    is_member = isinstance(left, A.Member) and left.name == name and isinstance(left.target, A.CurrentRef)
    if not (is_name or is_member) or _current_set_mentions(conj.right, name):
        return None
    return conj.right


def implicit_sets(invariant):
    """Built-in ghost sets mentioned only in one invariant clause ``s = expr``."""
    flat = [c for clause in invariant for c in A.conjuncts(clause)]
    out = []
    for s in A.GHOST_SETS:
        hits = [c for c in flat if _current_set_mentions(c, s)]
        if len(hits) == 1:
            d = _set_definition(hits[0], s)
            if d is not None:
                out.append((s, d))
    return tuple(out)


def _fresh_var(m, base="o"):
    taken = {p.name for p in (*m.params, *m.locals)}
    name = base
    while name in taken:
        name += "_"
    return name


def _has_current_wrapping(body):
    return any(
        isinstance(i, (A.Wrap, A.Unwrap)) and _is_current(i.target) for i in _walk_instrs(body)
    )


def _mentions_open(require):
    for e in require:
        for c in A.conjuncts(e):
            if isinstance(c, A.Name) and c.name == "open" and c.args is None:
                return True
            if isinstance(c, A.Member) and c.name == "open" and isinstance(c.target, A.CurrentRef):
                return True
    return False


def _is_ref_param(p, class_names):
    return p.type.name not in _BUILTIN_TYPE_NAMES and (p.type.name in class_names or p.type.name == "ANY")


def _add(existing, extra):
    out = list(existing)
    for e in extra:
        if e not in out:
            out.append(e)
    return tuple(out)


def _desugar_method(m, c, class_names, filename, notes):
    changes = {}
    if m.modify is None and "modify" not in m.explicit:
        changes["modify"] = () if m.is_function else (_CURRENT,)
    is_ctor = m.name in c.creators
    if m.is_public and not m.is_function:
        refs = [A.Name(p.name) for p in m.params if _is_ref_param(p, class_names)]
        if "contracts" not in m.explicit:
            if is_ctor:
                pre = [A.Name("open")] + [_wrapped(r) for r in refs]
                post = [_wrapped(_CURRENT)] + [_wrapped(r) for r in refs]
                changes["require"] = _add(m.require, pre)
                changes["ensure"] = _add(m.ensure, post)
            elif _mentions_open(m.require):
                notes.append(at(
                    "DEFAULTS",
                    f"{c.name}.{m.name} requires Current open; wrapped defaults suppressed",
                    m.loc, filename, severity="note",
                ))
            else:
                o = _fresh_var(m)
                obs = A.Quant("all", o, A.Name("observers"), _wrapped(A.Name(o)))
                both = [_wrapped(_CURRENT), obs] + [_wrapped(r) for r in refs]
                changes["require"] = _add(m.require, both)
                changes["ensure"] = _add(m.ensure, both)
        if "wrapping" not in m.explicit and not _has_current_wrapping(m.body):
            loc = m.loc
            if is_ctor:
                changes["body"] = m.body + (A.Wrap(None, loc=loc),)
            elif not (_mentions_open(m.require) and "contracts" not in m.explicit):
                changes["body"] = (A.Unwrap(None, loc=loc),) + m.body + (A.Wrap(None, loc=loc),)
    return replace(m, **changes) if changes else m


def _desugar_class(c, class_names, filename, notes):
    invariant = list(c.invariant)
    for s in A.GHOST_SETS:
        if not _class_mentions(c, s):
            invariant.append(A.Binary("=", A.Name(s), A.SetLit(()), loc=c.loc))
    methods = tuple(_desugar_method(m, c, class_names, filename, notes) for m in c.methods)
    invariant = tuple(invariant)
    return replace(c, methods=methods, invariant=invariant, implicit_sets=implicit_sets(invariant))


def desugar_with_notes(program, enabled=True, filename=None):
    """(desugared program, informational notes)."""
    if not enabled:
        return program, []
    notes = []
    names = {c.name for c in program.classes}
    classes = tuple(_desugar_class(c, names, filename, notes) for c in program.classes)
    return replace(program, classes=classes), notes


def desugar_defaults(program, enabled=True):
    return desugar_with_notes(program, enabled)[0]
