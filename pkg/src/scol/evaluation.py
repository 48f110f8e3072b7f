"""Side-effect free evaluation of expressions over a heap.

Expressions are compiled once per (node, class) into closures taking a
``_Ctx``.  When ``ctx.reads`` is a set, every primitive heap access adds its
target object to it, which gives the read set of the evaluated expression.
Short-circuit operators contribute only the operands that were evaluated.
Void is never modified, so it is left out of read sets.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional

from scol.heap import GHOST_FIELDS, HeapError, Overlay, ownership_domain
from scol.syntax import ast as A
from scol.syntax.symbols import SymbolTable
from scol.values import VALUE_MEMBERS, VOID, Ref, kind_of, sorted_refs, values_equal

DEFAULT_DEPTH_BOUND = 1024

if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)


class EvalError(Exception):
    kind = "error"


class VoidDereference(EvalError):
    kind = "void"


class DepthExceeded(EvalError):
    kind = "depth"


class EvalTypeError(EvalError):
    kind = "type"


class ReadClauseViolation(EvalError):
    """A logical function read objects outside its read clause."""

    kind = "rc"

    def __init__(self, cls_name, function, extra):
        self.cls_name = cls_name
        self.function = function
        self.extra = frozenset(extra)
        super().__init__(
            f"{cls_name}.{function} reads {', '.join(map(repr, sorted_refs(self.extra)))} "
            f"outside its read clause"
        )


@dataclass
class Env:
    current: Ref = VOID
    vars: dict = field(default_factory=dict)
    old: Optional[object] = None
    result: object = None


class _Ctx:
    __slots__ = ("heap", "current", "vars", "old", "reads", "depth")

    def __init__(self, heap, current, vars, old, reads, depth):
        self.heap = heap
        self.current = current
        self.vars = vars
        self.old = old
        self.reads = reads
        self.depth = depth


_MISSING = object()


def _as_bool(v, what):
    if not isinstance(v, bool):
        raise EvalTypeError(f"{what} is not a boolean: {v!r}")
    return v


def _as_int(v, what):
    if isinstance(v, bool) or not isinstance(v, int):
        raise EvalTypeError(f"{what} is not an integer: {v!r}")
    return v


def _as_ref(v, what):
    if not isinstance(v, Ref):
        raise EvalTypeError(f"{what} is not an object: {v!r}")
    return v


def _iter_domain(v):
    if isinstance(v, frozenset):
        return sorted_refs(v)
    if isinstance(v, tuple):
        return v
    raise EvalTypeError(f"quantifier domain is not a set or sequence: {v!r}")


def flatten_objects(v):
    """Objects denoted by a value used in a modify or read clause."""
    if isinstance(v, Ref):
        return {v}
    if isinstance(v, (frozenset, tuple)):
        out = set()
        for x in v:
            if not isinstance(x, Ref):
                raise EvalTypeError(f"not an object: {x!r}")
            out.add(x)
        return out
    raise EvalTypeError(f"not an object or object set: {v!r}")


class Evaluator:
    def __init__(self, program_or_symbols, depth_bound=DEFAULT_DEPTH_BOUND, check_read_clauses=True):
        if isinstance(program_or_symbols, SymbolTable):
            self.symbols = program_or_symbols
        else:
            self.symbols = SymbolTable(program_or_symbols)
        self.depth_bound = depth_bound
        self.check_read_clauses = check_read_clauses
        self._cache = {}
        self._inv_fns = {}

    # -- public API ----------------------------------------------------------

    def _ctx(self, heap, env, reads=None):
        vars = dict(env.vars)
        if env.result is not None:
            vars["Result"] = env.result
        return _Ctx(heap, env.current, vars, env.old, reads, 0)

    def _cls(self, heap, ref):
        if ref == VOID:
            return None
        return self.symbols.get(heap.class_of(ref))

    def eval(self, heap, env, expr):
        """Value of ``expr`` in ``heap`` under ``env``."""
        fn = self.compile(expr, self._cls(heap, env.current))
        return self._run(fn, self._ctx(heap, env))

    def eval_with_reads(self, heap, env, expr):
        reads = set()
        fn = self.compile(expr, self._cls(heap, env.current))
        value = self._run(fn, self._ctx(heap, env, reads))
        return value, frozenset(reads)

    def read_set(self, heap, env, expr):
        return self.eval_with_reads(heap, env, expr)[1]

    def _run(self, fn, ctx):
        try:
            return fn(ctx)
        except RecursionError:
            raise DepthExceeded("evaluation nested too deeply") from None
        except HeapError as exc:
            raise EvalError(str(exc)) from None

    def invariant_conjuncts(self, heap, x):
        info = self._cls(heap, x)
        return info.invariant if info is not None else ()

    def eval_conjunct(self, heap, x, conj, reads=None):
        fn = self.compile(conj, self._cls(heap, x))
        return _as_bool(self._run(fn, _Ctx(heap, x, {}, None, reads, 0)), "invariant")

    def invariant(self, heap, x, reads=None):
        """Whether x's class invariant holds (raises EvalError on failure to evaluate)."""
        info = self._cls(heap, x)
        if info is None:
            return True
        ctx = _Ctx(heap, x, {}, None, reads, 0)
        for fn in self._invariant_fns(info):
            if not _as_bool(self._run(fn, ctx), "invariant"):
                return False
        return True

    def _invariant_fns(self, info):
        fns = self._inv_fns.get(info.name)
        if fns is None or fns[0] is not info:
            fns = self._inv_fns[info.name] = (info, [self.compile(c, info) for c in info.invariant])
        return fns[1]

    def invariant_reads(self, heap, x):
        reads = set()
        value = self.invariant(heap, x, reads)
        return value, frozenset(reads)

    def first_false_conjunct(self, heap, x):
        """(index, conjunct, error) of the first failing conjunct, or None."""
        info = self._cls(heap, x)
        if info is None:
            return None
        for i, conj in enumerate(info.invariant):
            try:
                ok = self.eval_conjunct(heap, x, conj)
            except EvalError as exc:
                return i, conj, exc
            if not ok:
                return i, conj, None
        return None

    def eval_guard(self, heap, cls_name, attr, x, y, o):
        """guard(x.attr := y, o) in ``heap``; never mutates ``heap``."""
        if attr in ("owns", "subjects"):
            return True
        if attr == "observers":
            return o in y
        info = self.symbols[cls_name]
        decl = info.attributes[attr]
        if decl.guard is not None:
            fn = self.compile(decl.guard, info)
            ctx = _Ctx(heap, x, {"y": y, "o": o}, None, None, 0)
            return _as_bool(self._run(fn, ctx), "guard")
        # default: inv(o) implies inv(o) in h[x.attr -> y]
        if not self.invariant(heap, o):
            return True
        return self.invariant(Overlay(heap, x, attr, y), o)

    def modify_objects(self, heap, env, method):
        """Objects denoted by ``method``'s modify clause, flattened."""
        out = set()
        if method.modify is None:
            return out
        for e in method.modify:
            out |= flatten_objects(self.eval(heap, env, e))
        return out

    def frame(self, heap, env, method):
        """Union of ownership domains of the modify clause objects."""
        out = set()
        for o in self.modify_objects(heap, env, method):
            out |= ownership_domain(heap, o)
        return frozenset(out)

    def write_set(self, heap, env, ins):
        """Objects an instruction may write, evaluated in ``heap``."""
        if isinstance(ins, A.Assign):
            t = ins.target
            if isinstance(t, A.ResultRef):
                return frozenset()
            if isinstance(t, A.Name):
                if t.name in env.vars:
                    return frozenset()
                return frozenset([env.current])
            x = _as_ref(self.eval(heap, env, t.target), "assignment target")
            return frozenset([x])
        if isinstance(ins, A.Create):
            if isinstance(ins.target, A.Name) and ins.target.name not in env.vars:
                return frozenset([env.current])
            return frozenset()
        if isinstance(ins, (A.Wrap, A.Unwrap)):
            x = env.current if ins.target is None else _as_ref(self.eval(heap, env, ins.target), "target")
            return frozenset({x} | heap.state(x).owns)
        if isinstance(ins, (A.WrapAll, A.UnwrapAll)):
            out = set()
            for x in flatten_objects(self.eval(heap, env, ins.objects)):
                out |= {x} | heap.state(x).owns
            return frozenset(out)
        if isinstance(ins, A.CallInstr):
            x = env.current if ins.target is None else _as_ref(self.eval(heap, env, ins.target), "target")
            info = self._cls(heap, x)
            if info is None or ins.name not in info.methods:
                raise EvalError(f"no method '{ins.name}' on {x!r}")
            m = info.methods[ins.name]
            args = [self.eval(heap, env, a) for a in ins.args]
            callee = Env(x, {p.name: v for p, v in zip(m.params, args)})
            return self.frame(heap, callee, m)
        if isinstance(ins, A.If):
            out = set()
            for _, body in ins.branches:
                for i in body:
                    out |= self.write_set(heap, env, i)
            for i in ins.else_body or ():
                out |= self.write_set(heap, env, i)
            return frozenset(out)
        if isinstance(ins, A.Across):
            out = set()
            for v in _iter_domain(self.eval(heap, env, ins.domain)):
                inner = Env(env.current, {**env.vars, ins.var: v}, env.old)
                for i in ins.body:
                    out |= self.write_set(heap, inner, i)
            return frozenset(out)
        raise TypeError(f"unknown instruction {ins!r}")

    # -- compilation ---------------------------------------------------------

    def compile(self, node, cls):
        key = (id(node), cls.name if cls is not None else None)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is node:
            return hit[1]
        fn = self._compile(node, cls)
        self._cache[key] = (node, fn)
        return fn

    def _compile(self, e, cls):
        c = self.compile
        if isinstance(e, A.IntLit):
            v = e.value
            return lambda ctx: v
        if isinstance(e, A.BoolLit):
            v = e.value
            return lambda ctx: v
        if isinstance(e, A.VoidLit):
            return lambda ctx: VOID
        if isinstance(e, A.CurrentRef):
            return lambda ctx: ctx.current
        if isinstance(e, A.ResultRef):
            def result(ctx):
                v = ctx.vars.get("Result", _MISSING)
                if v is _MISSING:
                    raise EvalError("Result is not available here")
                return v
            return result
        if isinstance(e, A.Name):
            return self._compile_name(e, cls)
        if isinstance(e, A.Member):
            return self._compile_member(e, cls)
        if isinstance(e, A.Index):
            tf, ixf = c(e.target, cls), c(e.index, cls)

            def index(ctx):
                s = tf(ctx)
                i = ixf(ctx)
                if not isinstance(s, tuple):
                    raise EvalTypeError(f"cannot index {s!r}")
                try:
                    return VALUE_MEMBERS["item"][1]["SEQUENCE"](s, i)
                except IndexError as exc:
                    raise EvalError(str(exc)) from None
            return index
        if isinstance(e, A.Unary):
            f = c(e.operand, cls)
            if e.op == "not":
                return lambda ctx: not _as_bool(f(ctx), "operand of not")
            return lambda ctx: -_as_int(f(ctx), "operand of -")
        if isinstance(e, A.Binary):
            return self._compile_binary(e, cls)
        if isinstance(e, A.IfExpr):
            cf, tf, ef = c(e.cond, cls), c(e.then, cls), c(e.else_, cls)
            return lambda ctx: tf(ctx) if _as_bool(cf(ctx), "condition") else ef(ctx)
        if isinstance(e, A.Quant):
            df, bf, var = c(e.domain, cls), c(e.body, cls), e.var
            universal = e.kind == "all"

            def quant(ctx):
                dom = _iter_domain(df(ctx))
                vars = ctx.vars
                saved = vars.get(var, _MISSING)
                try:
                    for v in dom:
                        vars[var] = v
                        if _as_bool(bf(ctx), "quantifier body") != universal:
                            return not universal
                    return universal
                finally:
                    if saved is _MISSING:
                        vars.pop(var, None)
                    else:
                        vars[var] = saved
            return quant
        if isinstance(e, A.Old):
            f = c(e.expr, cls)

            def old(ctx):
                if ctx.old is None:
                    raise EvalError("'old' has no pre-state here")
                return f(_Ctx(ctx.old, ctx.current, ctx.vars, None, None, ctx.depth))
            return old
        if isinstance(e, A.SetLit):
            fs = [c(x, cls) for x in e.elems]

            def setlit(ctx):
                return frozenset(_as_ref(f(ctx), "set element") for f in fs)
            return setlit
        if isinstance(e, A.SeqLit):
            fs = [c(x, cls) for x in e.elems]
            return lambda ctx: tuple(f(ctx) for f in fs)
        raise TypeError(f"unknown expression {e!r}")

    def _compile_binary(self, e, cls):
        lf, rf = self.compile(e.left, cls), self.compile(e.right, cls)
        op = e.op
        if op == "and":
            return lambda ctx: _as_bool(lf(ctx), "operand of and") and _as_bool(rf(ctx), "operand of and")
        if op == "or":
            return lambda ctx: _as_bool(lf(ctx), "operand of or") or _as_bool(rf(ctx), "operand of or")
        if op == "implies":
            return lambda ctx: (not _as_bool(lf(ctx), "operand of implies")) or _as_bool(rf(ctx), "operand of implies")
        if op == "=":
            return lambda ctx: values_equal(lf(ctx), rf(ctx))
        if op == "/=":
            return lambda ctx: not values_equal(lf(ctx), rf(ctx))
        if op == "in":
            def member(ctx):
                x, s = lf(ctx), rf(ctx)
                if not isinstance(s, (frozenset, tuple)):
                    raise EvalTypeError(f"right operand of 'in' is not a collection: {s!r}")
                return any(values_equal(x, v) for v in s) if isinstance(s, tuple) else x in s
            return member

        def arith(ctx):
            a, b = lf(ctx), rf(ctx)
            ka, kb = kind_of(a), kind_of(b)
            if ka != kb:
                raise EvalTypeError(f"cannot apply '{op}' to {a!r} and {b!r}")
            if ka == "INTEGER":
                if op == "+":
                    return a + b
                if op == "-":
                    return a - b
                if op == "*":
                    return a * b
                if op == "<":
                    return a < b
                if op == "<=":
                    return a <= b
                if op == ">":
                    return a > b
                if op == ">=":
                    return a >= b
            elif ka == "SET":
                if op == "+":
                    return a | b
                if op == "-":
                    return a - b
                if op == "*":
                    return a & b
                if op == "<":
                    return a < b
                if op == "<=":
                    return a <= b
                if op == ">":
                    return a > b
                if op == ">=":
                    return a >= b
            elif ka == "SEQUENCE" and op == "+":
                return a + b
            raise EvalTypeError(f"cannot apply '{op}' to {a!r} and {b!r}")
        return arith

    def _compile_name(self, e, cls):
        name = e.name
        argfs = None if e.args is None else [self.compile(a, cls) for a in e.args]
        current = A.CurrentRef()
        feature = self._feature_access(lambda ctx: ctx.current, name, argfs, cls, statically_current=True)

        def lookup(ctx):
            v = ctx.vars.get(name, _MISSING)
            if v is not _MISSING and argfs is None:
                return v
            return feature(ctx)
        del current
        return lookup

    def _compile_member(self, e, cls):
        tf = self.compile(e.target, cls)
        argfs = None if e.args is None else [self.compile(a, cls) for a in e.args]
        return self._feature_access(tf, e.name, argfs, cls)

    def _feature_access(self, tf, name, argfs, cls, statically_current=False):
        """Closure reading feature ``name`` of the value produced by ``tf``."""
        symbols = self.symbols
        spec = VALUE_MEMBERS.get(name)
        nargs = 0 if argfs is None else len(argfs)

        def access(ctx):
            t = tf(ctx)
            if not isinstance(t, Ref):
                if spec is not None and isinstance(t, (frozenset, tuple)):
                    impl = spec[1].get("SET" if isinstance(t, frozenset) else "SEQUENCE")
                    if impl is not None and spec[0] == nargs:
                        args = [f(ctx) for f in argfs or ()]
                        try:
                            return impl(t, *args)
                        except IndexError as exc:
                            raise EvalError(str(exc)) from None
                raise EvalTypeError(f"{t!r} has no member '{name}'")
            heap = ctx.heap
            reads = ctx.reads
            if name in GHOST_FIELDS:
                if reads is not None and t != VOID:
                    reads.add(t)
                return heap.state(t).get(name)
            if name == "open":
                if reads is not None and t != VOID:
                    reads.add(t)
                return not heap.state(t).closed
            if name in ("free", "wrapped"):
                s = heap.state(t)
                if reads is not None:
                    if t != VOID:
                        reads.add(t)
                    if s.owner != VOID:
                        reads.add(s.owner)
                free = not heap.state(s.owner).closed
                return free if name == "free" else (free and s.closed)
            if name == "inv":
                if t == VOID:
                    return True
                return self._call_inv(ctx, t)
            if t == VOID:
                raise VoidDereference(f"feature '{name}' accessed on Void")
            info = symbols.classes.get(heap.class_of(t))
            if info is None:
                raise EvalError(f"object {t!r} has no class")
            if name in info.attributes:
                if reads is not None:
                    reads.add(t)
                return heap.state(t).attrs[name]
            f = info.functions.get(name)
            if f is not None:
                args = [a(ctx) for a in argfs or ()]
                return self._call_function(ctx, info, f, t, args)
            if name in info.methods:
                raise EvalError(f"method '{name}' cannot be evaluated inside an expression")
            raise EvalError(f"{info.name} has no feature '{name}'")
        return access

    def _enter(self, ctx):
        depth = ctx.depth + 1
        if depth > self.depth_bound:
            raise DepthExceeded(f"evaluation depth bound {self.depth_bound} exceeded")
        return depth

    def _call_inv(self, ctx, t):
        depth = self._enter(ctx)
        info = self.symbols.classes.get(ctx.heap.class_of(t))
        if info is None:
            return True
        inner = _Ctx(ctx.heap, t, {}, None, ctx.reads, depth)
        for fn in self._invariant_fns(info):
            if not _as_bool(fn(inner), "invariant"):
                return False
        return True

    def _call_function(self, ctx, info, f, t, args):
        depth = self._enter(ctx)
        vars = {p.name: v for p, v in zip(f.params, args)}
        body_reads = set() if self.check_read_clauses else None
        inner = _Ctx(ctx.heap, t, vars, None, body_reads, depth)
        value = self.compile(f.definition, info)(inner)
        if ctx.reads is None and not self.check_read_clauses:
            return value
        clause = set()
        rc_ctx = _Ctx(ctx.heap, t, dict(vars), None, None, depth)
        for r in f.read:
            clause |= flatten_objects(self.compile(r, info)(rc_ctx))
        clause.discard(VOID)
        if body_reads is not None and not body_reads <= clause:
            raise ReadClauseViolation(info.name, f.name, body_reads - clause)
        if ctx.reads is not None:
            ctx.reads |= clause
        return value
