"""Load-time checks: names, light static typing, syntactic admissibility."""

from __future__ import annotations

from collections import deque

from scol.diagnostics import SourceError, at
from scol.syntax import ast as A
from scol.syntax.parser import parse
from scol.syntax.symbols import SymbolTable
from scol.values import VALUE_MEMBERS, value_member_type

BOOL, INT, ANY, VOIDT = "BOOLEAN", "INTEGER", "ANY", "VOID"
_GHOST_TYPES = {"closed": BOOL, "owner": ANY, "owns": "SET", "subjects": "SET", "observers": "SET"}
_SHORTHAND_TYPES = {"open": BOOL, "free": BOOL, "wrapped": BOOL, "inv": BOOL}


def _base(t):
    return t.split("[", 1)[0] if t else t


def _elem(t):
    if t and "[" in t:
        return t[t.index("[") + 1 : -1]
    return None


class Scope:
    def __init__(self, cls, vars, *, result=None, old_ok=False, is_guard=False):
        self.cls = cls  # ClassInfo or None (entry routine)
        self.vars = dict(vars)
        self.result = result
        self.old_ok = old_ok
        self.is_guard = is_guard

    def bind(self, name, typ):
        s = Scope(self.cls, self.vars, result=self.result, old_ok=self.old_ok, is_guard=self.is_guard)
        s.vars[name] = typ
        return s


class Checker:
    def __init__(self, program, filename=None):
        self.program = program
        self.filename = filename
        self.symbols = SymbolTable(program)
        self.diags = []

    def err(self, code, msg, loc):
        self.diags.append(at(code, msg, loc, self.filename))

    # -- types -------------------------------------------------------------

    def resolve_type(self, t: A.TypeRef, cls=None):
        name = t.name
        if name in (INT, BOOL, ANY):
            return name
        if name in ("SET", "SEQUENCE"):
            if t.args:
                inner = self.resolve_type(t.args[0], cls)
                return f"{name}[{inner}]" if inner not in (None, ANY) else name
            return name
        if cls is not None and name in cls.generics:
            return ANY
        if name in self.symbols.classes:
            for a in t.args:
                self.resolve_type(a, cls)
            return name
        self.err("NAME", f"unknown type '{name}'", t.loc)
        return None

    def is_ref(self, t):
        return t is None or t in (ANY, VOIDT) or t in self.symbols.classes

    def compatible(self, expected, actual):
        if expected is None or actual is None:
            return True
        # generic parameters are erased to ANY, which may hold any value
        if ANY in (expected, actual):
            return True
        if self.is_ref(expected) and self.is_ref(actual):
            return expected in (ANY,) or actual in (ANY, VOIDT) or expected == actual
        if _base(expected) == _base(actual) and _base(expected) in ("SET", "SEQUENCE"):
            return True
        return expected == actual

    def expect(self, t, want, loc, what):
        if t is not None and not self.compatible(want, t):
            self.err("TYPE", f"{what}: expected {want}, found {t}", loc)

    # -- program -----------------------------------------------------------

    def run(self):
        seen = {}
        for c in self.program.classes:
            if c.name in seen:
                self.err("NAME", f"duplicate class name '{c.name}'", c.loc)
            seen[c.name] = c
            if c.name in A.BUILTIN_TYPES:
                self.err("NAME", f"class name '{c.name}' is reserved", c.loc)
        for c in self.program.classes:
            self.check_class(self.symbols[c.name] if self.symbols[c.name].decl is c else None, c)
        if self.program.entry is not None:
            self.check_method(None, self.program.entry)
        return self.diags

    def check_class(self, info, c):
        if info is None:
            return
        names = {}
        for f in (*c.attributes, *c.functions, *c.methods):
            if f.name in names:
                self.err("NAME", f"duplicate feature name '{f.name}' in class {c.name}", f.loc)
            names[f.name] = f
            if f.name in A.BUILTIN_ATTRS or f.name in A.SHORTHANDS or f.name in ("wrap", "unwrap"):
                self.err("NAME", f"feature name '{f.name}' is reserved", f.loc)
        for cr in c.creators:
            if cr not in info.methods:
                self.err("NAME", f"creation procedure '{cr}' is not a method of {c.name}", c.loc)
        for a in c.attributes:
            t = self.resolve_type(a.type, info)
            if a.guard is not None:
                scope = Scope(info, {"y": t, "o": ANY}, is_guard=True)
                self.expect(self.expr(a.guard, scope), BOOL, a.guard.loc, f"guard of {a.name}")
        for f in c.functions:
            params = self.params(f.params, info)
            rt = self.resolve_type(f.type, info)
            scope = Scope(info, params)
            self.expect(self.expr(f.definition, scope), rt, f.definition.loc, f"definition of {f.name}")
            for r in f.read:
                self.expect_objects(self.expr(r, scope), r.loc, f"read clause of {f.name}")
        for m in c.methods:
            self.check_method(info, m)
        scope = Scope(info, {})
        for e in c.invariant:
            self.expect(self.expr(e, scope), BOOL, e.loc, f"invariant of {c.name}")

    def expect_objects(self, t, loc, what):
        if t is None or self.is_ref(t) or _base(t) in ("SET", "SEQUENCE"):
            return
        self.err("TYPE", f"{what}: expected an object or object set, found {t}", loc)

    def params(self, params, info):
        out = {}
        for p in params:
            if p.name in out:
                self.err("NAME", f"duplicate name '{p.name}'", p.loc)
            out[p.name] = self.resolve_type(p.type, info)
        return out

    def check_method(self, info, m):
        params = self.params(m.params, info)
        locals_ = self.params(m.locals, info)
        for n in locals_:
            if n in params:
                self.err("NAME", f"local '{n}' shadows a parameter", m.loc)
        rt = self.resolve_type(m.result_type, info) if m.result_type else None
        bad = set(m.explicit) - {"contracts", "wrapping", "modify"}
        for b in sorted(bad):
            self.err("NAME", f"unknown explicit note '{b}'", m.loc)
        pre = Scope(info, params)
        for e in m.require:
            self.expect(self.expr(e, pre), BOOL, e.loc, f"precondition of {m.name}")
        for e in m.modify or ():
            self.expect_objects(self.expr(e, pre), e.loc, f"modify clause of {m.name}")
        # the entry routine's postcondition may inspect its locals
        post_vars = params if info is not None else {**params, **locals_}
        post = Scope(info, post_vars, result=rt, old_ok=True)
        for e in m.ensure:
            self.expect(self.expr(e, post), BOOL, e.loc, f"postcondition of {m.name}")
        body = Scope(info, {**params, **locals_}, result=rt)
        self.instrs(m.body, body, frozenset(params), frozenset())

    # -- instructions ------------------------------------------------------

    def instrs(self, body, scope, readonly, cursors):
        for ins in body:
            self.instr(ins, scope, readonly, cursors)

    def target_type(self, target, scope, readonly, cursors, loc):
        if isinstance(target, A.ResultRef):
            if scope.result is None:
                self.err("NAME", "Result used outside a function", loc)
            return scope.result
        if isinstance(target, A.Name):
            if target.name in cursors:
                self.err("NAME", f"loop cursor '{target.name}' cannot be assigned", loc)
                return None
            if target.name in readonly:
                self.err("NAME", f"parameter '{target.name}' cannot be assigned", loc)
                return None
            if target.name in scope.vars:
                return scope.vars[target.name]
            if scope.cls is not None:
                a = scope.cls.attributes.get(target.name)
                if a is not None:
                    return self.resolve_type(a.type, scope.cls)
                if target.name in A.GHOST_SETS:
                    return "SET"
            self.err("NAME", f"unknown variable or attribute '{target.name}'", loc)
            return None
        tt = self.expr(target.target, scope)
        return self.member_type(tt, target.name, None, scope, loc, assign=True)

    def instr(self, ins, scope, readonly, cursors):
        loc = ins.loc
        if isinstance(ins, A.Assign):
            want = self.target_type(ins.target, scope, readonly, cursors, loc)
            got = self.expr(ins.value, scope, allow_method=True)
            self.expect(got, want, loc, "assignment")
        elif isinstance(ins, A.Create):
            t = self.target_type(ins.target, scope, readonly, cursors, loc)
            if t is not None and t not in self.symbols.classes:
                self.err("TYPE", f"cannot create an object of type {t}", loc)
                return
            info = self.symbols.get(t) if t else None
            for a in ins.args:
                self.expr(a, scope)
            if ins.ctor is not None and info is not None:
                m = info.methods.get(ins.ctor)
                if m is None:
                    self.err("NAME", f"class {t} has no method '{ins.ctor}'", loc)
                elif info.decl.creators and ins.ctor not in info.decl.creators:
                    self.err("NAME", f"'{ins.ctor}' is not a creation procedure of {t}", loc)
                elif len(m.params) != len(ins.args):
                    self.err("TYPE", f"'{ins.ctor}' expects {len(m.params)} arguments", loc)
        elif isinstance(ins, A.CallInstr):
            if ins.target is None:
                if scope.cls is None:
                    self.err("NAME", f"unknown routine '{ins.name}'", loc)
                    return
                tt = scope.cls.name
            else:
                tt = self.expr(ins.target, scope)
            for a in ins.args:
                self.expr(a, scope)
            self.check_call(tt, ins.name, len(ins.args), loc)
        elif isinstance(ins, (A.Wrap, A.Unwrap)):
            if ins.target is None:
                if scope.cls is None:
                    self.err("NAME", "wrap/unwrap of Current outside a class", loc)
            else:
                t = self.expr(ins.target, scope)
                if t is not None and not self.is_ref(t):
                    self.err("TYPE", f"cannot wrap or unwrap a value of type {t}", loc)
        elif isinstance(ins, (A.WrapAll, A.UnwrapAll)):
            t = self.expr(ins.objects, scope)
            if t is not None and _base(t) not in ("SET", "SEQUENCE"):
                self.err("TYPE", f"expected an object set, found {t}", loc)
        elif isinstance(ins, A.If):
            for cond, body in ins.branches:
                self.expect(self.expr(cond, scope), BOOL, cond.loc, "condition")
                self.instrs(body, scope, readonly, cursors)
            if ins.else_body is not None:
                self.instrs(ins.else_body, scope, readonly, cursors)
        elif isinstance(ins, A.Across):
            t = self.expr(ins.domain, scope)
            if t is not None and _base(t) not in ("SET", "SEQUENCE"):
                self.err("TYPE", f"across domain must be a set or sequence, found {t}", loc)
            inner = scope.bind(ins.var, _elem(t))
            self.instrs(ins.body, inner, readonly, cursors | {ins.var})

    def check_call(self, tt, name, nargs, loc):
        if tt is None or tt == ANY:
            if name not in self.symbols.member_names:
                self.err("NAME", f"no class has a method '{name}'", loc)
            return
        info = self.symbols.get(tt)
        if info is None:
            self.err("TYPE", f"cannot call '{name}' on a value of type {tt}", loc)
            return
        m = info.methods.get(name)
        if m is None:
            self.err("NAME", f"class {tt} has no method '{name}'", loc)
        elif len(m.params) != nargs:
            self.err("TYPE", f"'{name}' expects {len(m.params)} arguments, got {nargs}", loc)

    # -- expressions -------------------------------------------------------

    def expr(self, e, scope, allow_method=False):
        """Static type of ``e`` (None when unknown); records diagnostics."""
        loc = e.loc
        if isinstance(e, A.IntLit):
            return INT
        if isinstance(e, A.BoolLit):
            return BOOL
        if isinstance(e, A.VoidLit):
            return VOIDT
        if isinstance(e, A.CurrentRef):
            if scope.cls is None:
                return VOIDT
            return scope.cls.name
        if isinstance(e, A.ResultRef):
            if scope.result is None:
                self.err("NAME", "Result used outside a function", loc)
            return scope.result
        if isinstance(e, A.Name):
            return self.name_type(e, scope, allow_method)
        if isinstance(e, A.Member):
            tt = self.expr(e.target, scope)
            nargs = None if e.args is None else len(e.args)
            for a in e.args or ():
                self.expr(a, scope)
            return self.member_type(tt, e.name, nargs, scope, loc, allow_method=allow_method)
        if isinstance(e, A.Index):
            tt = self.expr(e.target, scope)
            self.expect(self.expr(e.index, scope), INT, e.index.loc, "index")
            if tt is not None and _base(tt) != "SEQUENCE":
                self.err("TYPE", f"cannot index a value of type {tt}", loc)
            return _elem(tt)
        if isinstance(e, A.Unary):
            t = self.expr(e.operand, scope)
            want = BOOL if e.op == "not" else INT
            self.expect(t, want, loc, f"operand of '{e.op}'")
            return want
        if isinstance(e, A.Binary):
            return self.binary_type(e, scope)
        if isinstance(e, A.IfExpr):
            self.expect(self.expr(e.cond, scope), BOOL, e.cond.loc, "condition")
            t1 = self.expr(e.then, scope)
            t2 = self.expr(e.else_, scope)
            if t1 is not None and t2 is not None and not (self.compatible(t1, t2) or self.compatible(t2, t1)):
                self.err("TYPE", f"branches have types {t1} and {t2}", loc)
            if t1 == VOIDT:
                return t2
            return t1 if t1 is not None else t2
        if isinstance(e, A.Quant):
            dt = self.expr(e.domain, scope)
            if dt is not None and _base(dt) not in ("SET", "SEQUENCE"):
                self.err("TYPE", f"quantifier domain must be a set or sequence, found {dt}", e.domain.loc)
            inner = scope.bind(e.var, _elem(dt))
            self.expect(self.expr(e.body, inner), BOOL, e.body.loc, "quantifier body")
            return BOOL
        if isinstance(e, A.Old):
            if not scope.old_ok:
                self.err("NAME", "'old' is allowed only in postconditions", loc)
            return self.expr(e.expr, scope)
        if isinstance(e, A.SetLit):
            elem = None
            for x in e.elems:
                t = self.expr(x, scope)
                if t is not None and not self.is_ref(t):
                    self.err("TYPE", f"set elements must be references, found {t}", x.loc)
                elif t not in (None, ANY, VOIDT):
                    elem = t if elem in (None, t) else ANY
            return f"SET[{elem}]" if elem not in (None, ANY) else "SET"
        if isinstance(e, A.SeqLit):
            for x in e.elems:
                self.expr(x, scope)
            return "SEQUENCE"
        raise AssertionError(f"unknown expression {e!r}")

    def binary_type(self, e, scope):
        op = e.op
        lt = self.expr(e.left, scope)
        rt = self.expr(e.right, scope)
        if op in ("and", "or", "implies"):
            self.expect(lt, BOOL, e.left.loc, f"operand of '{op}'")
            self.expect(rt, BOOL, e.right.loc, f"operand of '{op}'")
            return BOOL
        if op in ("=", "/="):
            if lt is not None and rt is not None and not (
                self.compatible(lt, rt) or self.compatible(rt, lt)
            ):
                self.err("TYPE", f"cannot compare {lt} with {rt}", e.loc)
            return BOOL
        if op == "in":
            if rt is not None and _base(rt) not in ("SET", "SEQUENCE"):
                self.err("TYPE", f"right operand of 'in' must be a set or sequence, found {rt}", e.loc)
            return BOOL
        kinds = {_base(lt), _base(rt)} - {None}
        if op in ("<", "<=", ">", ">="):
            if len(kinds) > 1 or not kinds <= {INT, "SET"}:
                self.err("TYPE", f"cannot apply '{op}' to {lt} and {rt}", e.loc)
            return BOOL
        # + - *
        if not kinds:
            return None
        if len(kinds) > 1:
            self.err("TYPE", f"cannot apply '{op}' to {lt} and {rt}", e.loc)
            return None
        (k,) = kinds
        if k == INT or k == "SET" or (k == "SEQUENCE" and op == "+"):
            return lt if lt is not None and "[" in lt else (rt or lt)
        self.err("TYPE", f"cannot apply '{op}' to {lt} and {rt}", e.loc)
        return None

    def name_type(self, e, scope, allow_method):
        name = e.name
        nargs = None if e.args is None else len(e.args)
        for a in e.args or ():
            self.expr(a, scope)
        if name in scope.vars:
            if nargs is not None:
                self.err("TYPE", f"'{name}' is not a function", e.loc)
            return scope.vars[name]
        if scope.cls is None:
            self.err("NAME", f"unknown name '{name}'", e.loc)
            return None
        return self.member_type(scope.cls.name, name, nargs, scope, e.loc, allow_method=allow_method)

    def member_type(self, tt, name, nargs, scope, loc, allow_method=False, assign=False):
        base = _base(tt)
        if base in ("SET", "SEQUENCE"):
            spec = VALUE_MEMBERS.get(name)
            if spec is None or base not in spec[1] or assign:
                self.err("NAME", f"{base} has no member '{name}'", loc)
                return None
            if (nargs or 0) != spec[0]:
                self.err("TYPE", f"'{name}' expects {spec[0]} arguments", loc)
            return value_member_type(name, tt)
        if tt in (INT, BOOL):
            self.err("TYPE", f"a value of type {tt} has no member '{name}'", loc)
            return None
        if name in _GHOST_TYPES:
            if nargs is not None:
                self.err("TYPE", f"'{name}' takes no arguments", loc)
            return _GHOST_TYPES[name]
        if name in _SHORTHAND_TYPES and not assign:
            if nargs is not None:
                self.err("TYPE", f"'{name}' takes no arguments", loc)
            return _SHORTHAND_TYPES[name]
        if tt in (None, ANY, VOIDT):
            if name not in self.symbols.member_names:
                self.err("NAME", f"no class has a feature '{name}'", loc)
            return None
        info = self.symbols.get(tt)
        if info is None:
            return None
        a = info.attributes.get(name)
        if a is not None:
            if nargs is not None:
                self.err("TYPE", f"attribute '{name}' takes no arguments", loc)
            return self.resolve_type(a.type, info)
        if assign:
            self.err("NAME", f"class {tt} has no attribute '{name}'", loc)
            return None
        f = info.functions.get(name)
        if f is not None:
            if (nargs or 0) != len(f.params):
                self.err("TYPE", f"'{name}' expects {len(f.params)} arguments", loc)
            return self.resolve_type(f.type, info)
        m = info.methods.get(name)
        if m is not None:
            if not allow_method:
                self.err("NAME", f"method '{name}' cannot be called inside an expression", loc)
            elif (nargs or 0) != len(m.params):
                self.err("TYPE", f"'{name}' expects {len(m.params)} arguments", loc)
            return self.resolve_type(m.result_type, info) if m.result_type else None
        self.err("NAME", f"class {tt} has no feature '{name}'", loc)
        return None


def check_program(program, filename=None):
    """Well-formedness diagnostics (names and types) for a parsed program."""
    return Checker(program, filename).run()


def parse_program(source, filename=None):
    """Parse and check ``source``.

    Returns the ``Program`` when there are no errors, otherwise the list of
    diagnostics.
    """
    try:
        program = parse(source, filename)
    except SourceError as exc:
        return [exc.diagnostic()]
    diags = check_program(program, filename)
    return diags if diags else program


# -- syntactic admissibility -------------------------------------------------

_FORBIDDEN = {
    "closed": "closed",
    "owner": "owner",
    "open": "closed (via open)",
    "free": "owner (via free)",
    "wrapped": "closed and owner (via wrapped)",
}


def _mentions(symbols, expr, cls_name, static_type):
    """Breadth-first search for a forbidden attribute, expanding functions.

    ``static_type(expr, cls_name)`` gives the class of a receiver when known.
    Returns (mention, chain) or None.
    """
    queue = deque([(expr, cls_name, ())])
    seen = set()
    while queue:
        e, cname, chain = queue.popleft()
        for node in A.walk(e):
            if isinstance(node, (A.Name, A.Member)):
                if node.name in _FORBIDDEN:
                    return _FORBIDDEN[node.name], chain
                if isinstance(node, A.Name):
                    owners = [cname] if cname else []
                else:
                    t = static_type(node.target, cname)
                    owners = [t] if t in symbols.classes else None
                targets = []
                if owners is None:
                    targets = [
                        (info.name, f) for info, f in symbols.function_names.get(node.name, [])
                    ]
                    if node.name == "inv":
                        targets += [(n, None) for n in symbols.classes]
                else:
                    for o in owners:
                        info = symbols.get(o)
                        if info is None:
                            continue
                        if node.name in info.functions:
                            targets.append((o, info.functions[node.name]))
                        elif node.name == "inv":
                            targets.append((o, None))
                for owner, f in targets:
                    key = (owner, f.name if f else "inv")
                    if key in seen:
                        continue
                    seen.add(key)
                    label = f"{owner}.{key[1]}"
                    if f is None:
                        for c in symbols[owner].invariant:
                            queue.append((c, owner, chain + (label,)))
                    else:
                        queue.append((f.definition, owner, chain + (label,)))
    return None


def check_syntactic_admissibility(program, filename=None):
    """One A4 diagnostic per invariant conjunct mentioning closed or owner.

    The language has no expression for allocation status, so that part of
    the condition holds by construction.
    """
    symbols = SymbolTable(program)
    checker = Checker(program, filename)
    out = []

    def static_type(expr, cname):
        info = symbols.get(cname) if cname else None
        checker.diags = []
        t = checker.expr(expr, Scope(info, {}))
        return t

    for c in program.classes:
        info = symbols.get(c.name)
        if info is None or info.decl is not c:
            continue
        for conj in info.invariant:
            hit = _mentions(symbols, conj, c.name, static_type)
            if hit is None:
                continue
            mention, chain = hit
            via = f" through {' -> '.join(chain)}" if chain else ""
            out.append(at("A4", f"invariant of {c.name} mentions {mention}{via}", conj.loc, filename))
    return out
