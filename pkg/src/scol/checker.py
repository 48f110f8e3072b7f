"""Instruction-by-instruction execution with every protocol obligation checked.

A ``ProtocolChecker`` owns one heap and one trace.  Heap-update steps
(create, update, wrap, unwrap) each produce a new snapshot; call and return
steps reuse the current one, so the pre-snapshot of every step is the
post-snapshot of the previous step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from scol.diagnostics import Diagnostic, at
from scol.evaluation import (
    DepthExceeded, Env, EvalError, Evaluator, ReadClauseViolation, flatten_objects,
)
from scol.heap import GHOST_FIELDS, Heap, HeapError, Overlay, ownership_domain, schema_of
from scol.syntax import ast as A
from scol.syntax.printer import expr_str
from scol.syntax.symbols import SymbolTable
from scol.values import VOID, Ref, default_value, fmt, sorted_refs

HEAP_KINDS = ("create", "update", "wrap", "unwrap")
A3_INTS = range(-2, 4)


@dataclass
class Options:
    a3_mode: str = "instance"  # or "bounded"
    oracle: bool = False  # check G1/G2 after every heap-update step
    keep_going: bool = False
    max_steps: int = 100_000
    depth_bound: int = 1024
    # obligation ids whose checks are switched off (checker self-mutation)
    disabled: frozenset = frozenset()


@dataclass
class Verdict:
    obligation_id: str
    ok: bool
    tainted: bool = False


@dataclass
class Step:
    kind: str  # create | update | wrap | unwrap | call | return
    target: Ref
    pre: int
    post: int
    verdicts: list = field(default_factory=list)
    attr: Optional[str] = None
    value: object = None
    method: Optional[str] = None
    loc: Optional[A.Loc] = None
    depth: int = 0
    write_set: Optional[frozenset] = None

    def describe(self):
        if self.kind == "update":
            return f"{self.target!r}.{self.attr} := {fmt(self.value)}"
        if self.kind in ("call", "return"):
            return f"{self.kind} {self.target!r}.{self.method}"
        return f"{self.kind} {self.target!r}"


class Trace:
    def __init__(self, initial: Heap):
        self.snapshots = [initial.snapshot()]
        self.steps: list = []

    @property
    def last_snapshot(self):
        return len(self.snapshots) - 1

    def heap(self, snapshot_id):
        return self.snapshots[snapshot_id]

    def heap_update_kinds(self):
        return [s.kind for s in self.steps if s.kind in HEAP_KINDS]

    def obligations_checked(self):
        return sum(len(s.verdicts) for s in self.steps)

    def summary(self):
        counts = {}
        for s in self.steps:
            counts[s.kind] = counts.get(s.kind, 0) + 1
        return {
            "steps": len(self.steps),
            "snapshots": len(self.snapshots),
            "obligations_checked": self.obligations_checked(),
            "kinds": dict(sorted(counts.items())),
        }


class Abort(Exception):
    """Stops the trace at the first failed obligation."""


class _Skip(Exception):
    """Abandons the current instruction (keep-going mode only)."""


class _Activation:
    __slots__ = ("method", "cls", "current", "vars", "types", "frame", "fresh")

    def __init__(self, method, cls, current, vars, types, frame):
        self.method = method
        self.cls = cls
        self.current = current
        self.vars = vars
        self.types = types
        self.frame = frame  # None: unrestricted (entry routine)
        self.fresh = set()

    def env(self, old=None):
        return Env(self.current, self.vars, old)


# -- admissibility -------------------------------------------------------------


def footprint(h, x):
    s = h.state(x)
    return {x} | set(s.owns) | set(s.subjects)


def a1_violations(h, x, reads):
    """Objects read by x's invariant outside {x} + owns + subjects."""
    return sorted_refs(set(reads) - footprint(h, x) - {VOID})


def a2_violations(h, x):
    """Subjects of x that do not list x among their observers."""
    return [s for s in sorted_refs(h.state(x).subjects) if x not in h.state(s).observers]


def _attr_domain(h, typ):
    if typ == "INTEGER":
        return list(A3_INTS)
    if typ == "BOOLEAN":
        return [False, True]
    if typ.startswith("SEQUENCE"):
        return []
    refs = [r for r in sorted_refs(h.refs()) if r != VOID]
    if typ.startswith("SET"):
        out = [frozenset()]
        out += [frozenset([r]) for r in refs]
        out += [frozenset(c) for c in itertools.combinations(refs, 2)]
        return out
    if typ == "ANY":
        return [VOID] + refs
    return [VOID] + [r for r in refs if h.class_of(r) == typ]


def a3_bounded_violations(ev, h, x):
    """(subject, attribute, witness value) triples breaking A3 on small domains."""
    out = []
    for s in sorted_refs(h.state(x).subjects):
        if s == VOID:
            continue
        info = ev.symbols.get(h.class_of(s))
        if info is None:
            continue
        for name, decl in info.attributes.items():
            if decl.guard is None:
                continue  # the default guard makes A3 hold by construction
            current = h.state(s).attrs[name]
            for y in _attr_domain(h, h.schema[info.name][name]):
                if y == current and type(y) is type(current):
                    continue
                try:
                    if not ev.eval_guard(h, info.name, name, s, y, x):
                        continue
                except EvalError:
                    continue
                try:
                    ok = ev.invariant(Overlay(h, s, name, y), x)
                except EvalError:
                    ok = False
                if not ok:
                    out.append((s, name, y))
                    break
    return out


def check_admissibility(program, h, x, a3_mode="instance", evaluator=None):
    """A1, A2 (and bounded A3) diagnostics for object ``x`` in heap ``h``."""
    ev = evaluator or Evaluator(program)
    out = []
    try:
        holds, reads = ev.invariant_reads(h, x)
    except ReadClauseViolation as exc:
        return [Diagnostic("RC", str(exc))]
    except EvalError as exc:
        return [Diagnostic("WRAP-PRE-INV", f"invariant of {x!r} cannot be evaluated: {exc}")]
    if not holds:
        return out
    for o in a1_violations(h, x, reads):
        out.append(Diagnostic("A1", f"invariant of {x!r} reads {o!r}, outside Current, owns and subjects"))
    for s in a2_violations(h, x):
        out.append(Diagnostic("A2", f"subject {s!r} of {x!r} does not list it among its observers"))
    if a3_mode == "bounded":
        for s, a, y in a3_bounded_violations(ev, h, x):
            out.append(Diagnostic(
                "A3", f"invariant of {x!r} is broken by {s!r}.{a} := {fmt(y)} although the guard holds"))
    return out


# -- the checker ---------------------------------------------------------------


class ProtocolChecker:
    def __init__(self, program, options=None, filename=None, heap=None):
        self.program = program
        self.options = options or Options()
        self.filename = filename
        self.symbols = SymbolTable(program)
        self.ev = Evaluator(self.symbols, depth_bound=self.options.depth_bound)
        self.heap = heap if heap is not None else Heap(schema_of(program))
        self.trace = Trace(self.heap)
        self.diags: list = []
        self.failed = False
        self.steps_executed = 0
        self.stack: list = []
        self._resolver = None

    # -- bookkeeping -------------------------------------------------------

    def _on(self, oid):
        return oid not in self.options.disabled

    def _ok(self, verdicts, oid):
        verdicts.append(Verdict(oid, True, self.failed))

    def _report(self, verdicts, oid, message, loc, severity="error"):
        d = at(oid, message, loc, self.filename, snapshot_id=self.trace.last_snapshot,
               severity=severity, tainted=self.failed)
        self.diags.append(d)
        if verdicts is not None:
            verdicts.append(Verdict(oid, False, self.failed))
        self.failed = True

    def _gate(self):
        if self.failed and not self.options.keep_going:
            raise Abort()

    def _fatal(self, message, loc):
        self._report(None, "EXEC", message, loc)
        raise Abort()

    def _exec_error(self, message, loc):
        self._report(None, "EXEC", message, loc)
        self._gate()
        raise _Skip()

    def _tick(self, loc):
        self.steps_executed += 1
        if self.steps_executed > self.options.max_steps:
            self._fatal(f"step limit {self.options.max_steps} exceeded", loc)

    def _commit(self, kind, target, verdicts, loc, **kw):
        pre = self.trace.last_snapshot
        self.trace.snapshots.append(self.heap.snapshot())
        step = Step(kind, target, pre, pre + 1, verdicts, loc=loc, depth=len(self.stack), **kw)
        self.trace.steps.append(step)
        if self.options.oracle:
            self._oracle(loc)
        return step

    def _mark(self, kind, target, method, loc):
        sid = self.trace.last_snapshot
        step = Step(kind, target, sid, sid, [], method=method, loc=loc, depth=len(self.stack))
        self.trace.steps.append(step)
        return step

    def _oracle(self, loc):
        from scol.oracle import check_global

        v = check_global(self.heap, self.ev)
        if not v.g1_holds:
            self._report(None, "G1", f"closed object {v.g1_counterexample!r} violates its invariant", loc)
        if not v.g2_holds:
            p, o = v.g2_counterexample
            self._report(None, "G2", f"closed {p!r} owns {o!r}, which is open or owned elsewhere", loc)
        self._gate()

    # -- evaluation helpers ------------------------------------------------

    def _env(self):
        if self.stack:
            return self.stack[-1].env()
        return Env(VOID, {})

    def _eval(self, e, loc, env=None):
        """Evaluate an instruction expression; failures are execution errors."""
        try:
            return self.ev.eval(self.heap, env or self._env(), e)
        except ReadClauseViolation as exc:
            self._report(None, "RC", str(exc), loc)
            self._gate()
            raise _Skip()
        except EvalError as exc:
            self._exec_error(f"cannot evaluate {expr_str(e)}: {exc}", loc)

    def _ref(self, e, loc, what="target"):
        v = self._eval(e, loc)
        if not isinstance(v, Ref):
            self._exec_error(f"{what} {expr_str(e)} is not an object", loc)
        if v == VOID:
            self._exec_error(f"{what} {expr_str(e)} is Void", loc)
        return v

    def _holds(self, verdicts, oid, clauses, env, loc, what):
        """Check assertion clauses in order; report the first false one."""
        for c in clauses:
            for conj in A.conjuncts(c):
                try:
                    v = self.ev.eval(self.heap, env, conj)
                except ReadClauseViolation as exc:
                    self._report(verdicts, "RC", str(exc), loc)
                    return False
                except DepthExceeded as exc:
                    self._report(verdicts, "EXEC", f"{what}: {exc}", loc)
                    return False
                except EvalError as exc:
                    self._report(verdicts, oid, f"{what}: cannot evaluate {expr_str(conj)}: {exc}", loc)
                    return False
                if v is not True:
                    self._report(verdicts, oid, f"{what}: {expr_str(conj)} does not hold", loc)
                    return False
        self._ok(verdicts, oid)
        return True

    def _frame_check(self, verdicts, write_set, loc, what):
        if not self.stack or not self._on("FRAME"):
            return
        act = self.stack[-1]
        if act.frame is None:
            return
        allowed = act.frame | act.fresh
        bad = sorted_refs(set(write_set) - allowed - {VOID})
        if bad:
            m = act.method.name
            for o in bad:
                self._report(verdicts, "FRAME",
                             f"{what} writes {o!r}, outside the modify clause of {act.cls}.{m}", loc)
            self._gate()
        else:
            self._ok(verdicts, "FRAME")

    # -- heap-update instructions -----------------------------------------

    def exec_create(self, class_name, loc=None):
        """Allocate a fresh open object; returns its reference."""
        self._tick(loc)
        try:
            x = self.heap.allocate(class_name)
        except HeapError as exc:
            self._exec_error(str(exc), loc)
        for act in self.stack:
            act.fresh.add(x)
        verdicts = []
        s = self.heap.state(x)
        if not s.closed and s.owner == VOID and not s.observers:
            self._ok(verdicts, "ALLOC")
        else:
            self._report(verdicts, "ALLOC", f"fresh object {x!r} is not open and free", loc)
        self._commit("create", x, verdicts, loc, write_set=frozenset())
        self._gate()
        return x

    def exec_unwrap(self, x, loc=None):
        self._tick(loc)
        h = self.heap
        verdicts = []
        ws = frozenset({x} | h.state(x).owns)
        self._frame_check(verdicts, ws, loc, f"{x!r}.unwrap")
        s = h.state(x)
        if self._on("UNWRAP-PRE"):
            if not s.closed:
                self._report(verdicts, "UNWRAP-PRE", f"unwrap of {x!r}, which is open", loc)
            elif h.state(s.owner).closed:
                self._report(verdicts, "UNWRAP-PRE", f"unwrap of {x!r}, whose owner {s.owner!r} is closed", loc)
            else:
                self._ok(verdicts, "UNWRAP-PRE")
            self._gate()
        self.heap.set(x, "closed", False)
        self._commit("unwrap", x, verdicts, loc, write_set=ws)

    def _guard_kind(self, cls_name, a):
        if a in A.GHOST_SETS:
            return "builtin"
        decl = self.symbols[cls_name].attributes[a]
        return "default" if decl.guard is None else "explicit"

    def exec_update(self, x, a, y, loc=None):
        """x.a := y with the update rule's obligations."""
        self._tick(loc)
        h = self.heap
        if x == VOID:
            self._exec_error(f"assignment to {a} of Void", loc)
        cls_name = h.class_of(x)
        info = self.symbols.get(cls_name)
        if a in ("closed", "owner"):
            self._exec_error(f"'{a}' changes only through wrap and unwrap", loc)
        if a not in A.GHOST_SETS and (info is None or a not in info.attributes):
            self._exec_error(f"{cls_name} has no attribute '{a}'", loc)
        if a in A.GHOST_SETS:
            if isinstance(y, tuple):
                y = frozenset(y)
            if not isinstance(y, frozenset) or not all(isinstance(r, Ref) for r in y):
                self._exec_error(f"{a} must be a set of objects, got {fmt(y)}", loc)
            if a == "owns" and VOID in y:
                self._exec_error(f"owns of {x!r} cannot contain Void", loc)
        verdicts = []
        self._frame_check(verdicts, {x}, loc, f"update of {x!r}.{a}")
        s = h.state(x)
        if self._on("UPDATE-OPEN"):
            if s.closed:
                self._report(verdicts, "UPDATE-OPEN", f"update of {x!r}.{a} while {x!r} is closed", loc)
            else:
                self._ok(verdicts, "UPDATE-OPEN")
            self._gate()
        if self._on("UPDATE-GUARD"):
            kind = self._guard_kind(cls_name, a)
            for o in sorted_refs(s.observers):
                if not h.state(o).closed:
                    continue
                self._observer_check(verdicts, x, cls_name, a, y, o, kind, loc)
            self._ok(verdicts, "UPDATE-GUARD")
        self.heap.set(x, a, y)
        return self._commit("update", x, verdicts, loc, attr=a, value=y, write_set=frozenset({x}))

    def _observer_check(self, verdicts, x, cls_name, a, y, o, kind, loc):
        h = self.heap
        try:
            g = self.ev.eval_guard(h, cls_name, a, x, y, o)
        except ReadClauseViolation as exc:
            self._report(verdicts, "RC", str(exc), loc)
            self._gate()
            return
        except EvalError as exc:
            self._report(verdicts, "UPDATE-GUARD", f"guard of {cls_name}.{a} for observer {o!r} "
                         f"cannot be evaluated: {exc}", loc)
            self._gate()
            return
        if not g:
            self._report(verdicts, "UPDATE-GUARD",
                         f"observer {o!r} is closed and the guard of {cls_name}.{a} "
                         f"fails for {x!r}.{a} := {fmt(y)}", loc)
            self._gate()
            return
        # instance check of A3 (and A1) for closed observers whose guard held
        try:
            before = self.ev.invariant(h, o)
        except EvalError:
            return
        if not before:
            return
        view = Overlay(h, x, a, y)
        try:
            after, reads = self.ev.invariant_reads(view, o)
        except EvalError as exc:
            after, reads = False, ()
            if kind == "default":
                return
            detail = f": {exc}"
        else:
            detail = ""
        if not after and kind != "default" and self._on("A3"):
            self._report(verdicts, "A3",
                         f"invariant of observer {o!r} is broken by {x!r}.{a} := {fmt(y)} "
                         f"although the guard of {cls_name}.{a} holds{detail}", loc)
            self._gate()
            return
        if after and self._on("A1"):
            for r in a1_violations(view, o, reads):
                self._report(verdicts, "A1",
                             f"after {x!r}.{a} := {fmt(y)} the invariant of {o!r} reads {r!r}, "
                             f"outside Current, owns and subjects", loc)
            self._gate()

    def exec_wrap(self, x, loc=None):
        self._tick(loc)
        h = self.heap
        verdicts = []
        if self._on("WRAP-PRE-OPEN"):
            if h.state(x).closed:
                self._report(verdicts, "WRAP-PRE-OPEN", f"wrap of {x!r}, which is already closed", loc)
            else:
                self._ok(verdicts, "WRAP-PRE-OPEN")
            self._gate()
        cls_name = h.class_of(x)
        info = self.symbols.get(cls_name)
        if info is not None:
            for s, expr in info.implicit_sets.items():
                v = self._eval(expr, loc, Env(x, {}))
                if isinstance(v, tuple):
                    v = frozenset(v)
                if v != h.state(x).get(s):
                    self.exec_update(x, s, v, loc)
        h = self.heap
        # the write set includes objects that implicit sets just made owned
        ws = frozenset({x} | h.state(x).owns)
        self._frame_check(verdicts, ws, loc, f"{x!r}.wrap")
        reads = set()
        if self._on("WRAP-PRE-INV"):
            self._wrap_inv(verdicts, x, info, reads, loc)
        owns = h.state(x).owns
        if self._on("WRAP-PRE-OWNS"):
            bad = [o for o in sorted_refs(owns) if not self._wrapped(o)]
            for o in bad:
                self._report(verdicts, "WRAP-PRE-OWNS", f"wrap of {x!r}: owned object {o!r} is not wrapped", loc)
            if not bad:
                self._ok(verdicts, "WRAP-PRE-OWNS")
            self._gate()
        if self._on("A1") and self._on("WRAP-PRE-INV"):
            bad = a1_violations(h, x, reads)
            for o in bad:
                self._report(verdicts, "A1", f"invariant of {cls_name} ({x!r}) reads {o!r}, "
                             f"outside Current, owns and subjects", loc)
            if not bad:
                self._ok(verdicts, "A1")
            self._gate()
        if self._on("A2"):
            bad = a2_violations(h, x)
            for s in bad:
                self._report(verdicts, "A2", f"subject {s!r} of {cls_name} ({x!r}) does not list "
                             f"it among its observers", loc)
            if not bad:
                self._ok(verdicts, "A2")
            self._gate()
        if self.options.a3_mode == "bounded" and self._on("A3"):
            bad = a3_bounded_violations(self.ev, h, x)
            for s, a, y in bad:
                self._report(verdicts, "A3", f"invariant of {cls_name} ({x!r}) is broken by "
                             f"{s!r}.{a} := {fmt(y)} although the guard holds", loc)
            if not bad:
                self._ok(verdicts, "A3")
            self._gate()
        # owners first, then closed
        for o in sorted_refs(owns):
            self.heap.set(o, "owner", x)
        self.heap.set(x, "closed", True)
        self._commit("wrap", x, verdicts, loc, write_set=ws)

    def _wrapped(self, o):
        s = self.heap.state(o)
        return s.closed and not self.heap.state(s.owner).closed

    def _wrap_inv(self, verdicts, x, info, reads, loc):
        if info is None:
            self._ok(verdicts, "WRAP-PRE-INV")
            return
        for conj in info.invariant:
            try:
                ok = self.ev.eval_conjunct(self.heap, x, conj, reads)
            except ReadClauseViolation as exc:
                self._report(verdicts, "RC", str(exc), loc)
                self._gate()
                return
            except EvalError as exc:
                self._report(verdicts, "WRAP-PRE-INV", f"wrap of {x!r}: invariant clause "
                             f"{expr_str(conj)} of {info.name} cannot be evaluated: {exc}", loc)
                self._gate()
                return
            if not ok:
                self._report(verdicts, "WRAP-PRE-INV", f"wrap of {x!r}: invariant clause "
                             f"{expr_str(conj)} of {info.name} does not hold", loc)
                self._gate()
                return
        self._ok(verdicts, "WRAP-PRE-INV")

    # -- calls ---------------------------------------------------------------

    def _type_name(self, t, info):
        if self._resolver is None:
            from scol.syntax.checks import Checker
            self._resolver = Checker(self.program)
        self._resolver.diags = []
        return self._resolver.resolve_type(t, info) or "ANY"

    def exec_call(self, x, name, args, loc=None):
        """Call method ``name`` on ``x``; returns the value of Result (or None)."""
        self._tick(loc)
        if not isinstance(x, Ref) or x == VOID:
            self._exec_error(f"call of {name} on Void", loc)
        cls_name = self.heap.class_of(x)
        info = self.symbols.get(cls_name)
        m = info.methods.get(name) if info is not None else None
        if m is None:
            self._exec_error(f"{cls_name} has no method '{name}'", loc)
        if len(m.params) != len(args):
            self._exec_error(f"{cls_name}.{name} expects {len(m.params)} arguments", loc)
        vars = {p.name: v for p, v in zip(m.params, args)}
        types = {p.name: self._type_name(p.type, info) for p in (*m.params, *m.locals)}
        for p in m.locals:
            vars[p.name] = default_value(types[p.name])
        if m.result_type is not None:
            rt = self._type_name(m.result_type, info)
            types["Result"] = rt
            vars["Result"] = default_value(rt)
        env = Env(x, vars)
        try:
            frame = self.ev.frame(self.heap, env, m) if m.modify is not None else frozenset()
        except EvalError as exc:
            self._exec_error(f"modify clause of {cls_name}.{name}: {exc}", loc)
        step = self._mark("call", x, name, loc)
        self._frame_check(step.verdicts, frame, loc, f"call of {cls_name}.{name}")
        step.write_set = frame
        pre_ok = self._holds(step.verdicts, "CALL-PRE", m.require, Env(x, dict(vars)), loc,
                             f"precondition of {cls_name}.{name}") if self._on("CALL-PRE") else True
        self._gate()
        if not pre_ok:
            return vars.get("Result")
        old = self.heap.snapshot()
        act = _Activation(m, cls_name, x, vars, types, frame)
        self.stack.append(act)
        try:
            self.exec_body(m.body)
        finally:
            self.stack.pop()
        for outer in self.stack:
            outer.fresh |= act.fresh
        ret = self._mark("return", x, name, loc)
        result = vars.get("Result")
        if self._on("CALL-POST"):
            post_env = Env(x, {**{p.name: a for p, a in zip(m.params, args)}, "Result": result}, old)
            self._holds(ret.verdicts, "CALL-POST", m.ensure, post_env, loc,
                        f"postcondition of {cls_name}.{name}")
            self._gate()
        return result

    # -- instruction dispatch ------------------------------------------------

    def exec_body(self, body):
        for ins in body:
            try:
                self.exec_instr(ins)
            except _Skip:
                continue

    def _current(self, loc):
        if not self.stack or self.stack[-1].current == VOID:
            self._exec_error("no Current object here", loc)
        return self.stack[-1].current

    def _target(self, e, loc):
        return self._current(loc) if e is None or isinstance(e, A.CurrentRef) else self._ref(e, loc)

    def _method_call_value(self, e, loc):
        """(True, result) when ``e`` is a call of a method; else (False, None)."""
        act = self.stack[-1] if self.stack else None
        if isinstance(e, A.Name) and (act is None or e.name not in act.vars):
            if act is None or act.current == VOID:
                return False, None
            info = self.symbols.get(act.cls)
            if info is not None and e.name in info.methods:
                args = [self._eval(a, loc) for a in e.args or ()]
                return True, self.exec_call(act.current, e.name, args, loc)
            return False, None
        if isinstance(e, A.Member):
            t = self._eval(e.target, loc)
            if isinstance(t, Ref) and t != VOID:
                info = self.symbols.get(self.heap.class_of(t))
                if info is not None and e.name in info.methods:
                    args = [self._eval(a, loc) for a in e.args or ()]
                    return True, self.exec_call(t, e.name, args, loc)
        return False, None

    def _assign(self, target, value, loc):
        act = self.stack[-1] if self.stack else None
        if isinstance(target, A.ResultRef):
            act.vars["Result"] = value
            return
        if isinstance(target, A.Name):
            if act is not None and target.name in act.vars:
                act.vars[target.name] = value
                return
            self.exec_update(self._current(loc), target.name, value, loc)
            return
        x = self._ref(target.target, loc)
        self.exec_update(x, target.name, value, loc)

    def _create_class(self, target, loc):
        act = self.stack[-1] if self.stack else None
        if isinstance(target, A.Name):
            if act is not None and target.name in act.types:
                return act.types[target.name]
            x = self._current(loc)
            schema = self.heap.schema.get(self.heap.class_of(x), {})
            if target.name in schema:
                return schema[target.name]
        self._exec_error(f"cannot determine the class to create for {expr_str(target)}", loc)

    def exec_instr(self, ins):
        loc = ins.loc
        if isinstance(ins, A.Assign):
            called, value = self._method_call_value(ins.value, loc)
            if not called:
                value = self._eval(ins.value, loc)
            self._assign(ins.target, value, loc)
        elif isinstance(ins, A.Create):
            cls_name = self._create_class(ins.target, loc)
            args = [self._eval(a, loc) for a in ins.args]
            x = self.exec_create(cls_name, loc)
            self._assign(ins.target, x, loc)
            if ins.ctor is not None:
                self.exec_call(x, ins.ctor, args, loc)
        elif isinstance(ins, A.CallInstr):
            x = self._target(ins.target, loc)
            args = [self._eval(a, loc) for a in ins.args]
            self.exec_call(x, ins.name, args, loc)
        elif isinstance(ins, A.Wrap):
            self.exec_wrap(self._target(ins.target, loc), loc)
        elif isinstance(ins, A.Unwrap):
            self.exec_unwrap(self._target(ins.target, loc), loc)
        elif isinstance(ins, (A.WrapAll, A.UnwrapAll)):
            v = self._eval(ins.objects, loc)
            try:
                objs = flatten_objects(v)
            except EvalError as exc:
                self._exec_error(str(exc), loc)
            ordered = v if isinstance(v, tuple) else sorted_refs(objs)
            for o in ordered:
                if o == VOID:
                    self._exec_error("wrap_all/unwrap_all over a set containing Void", loc)
                if isinstance(ins, A.WrapAll):
                    self.exec_wrap(o, loc)
                else:
                    self.exec_unwrap(o, loc)
        elif isinstance(ins, A.If):
            self._tick(loc)
            for cond, body in ins.branches:
                c = self._eval(cond, loc)
                if c is not True and c is not False:
                    self._exec_error(f"condition {expr_str(cond)} is not a boolean", loc)
                if c:
                    self.exec_body(body)
                    return
            if ins.else_body is not None:
                self.exec_body(ins.else_body)
        elif isinstance(ins, A.Across):
            self._tick(loc)
            dom = self._eval(ins.domain, loc)
            if isinstance(dom, frozenset):
                items = sorted_refs(dom)
            elif isinstance(dom, tuple):
                items = list(dom)
            else:
                self._exec_error(f"across domain {expr_str(ins.domain)} is not a set or sequence", loc)
            act = self.stack[-1] if self.stack else None
            vars = act.vars if act is not None else self._entry_vars
            saved = vars.get(ins.var, _MISSING)
            try:
                for item in items:
                    vars[ins.var] = item
                    self.exec_body(ins.body)
            finally:
                if saved is _MISSING:
                    vars.pop(ins.var, None)
                else:
                    vars[ins.var] = saved
        else:
            raise TypeError(f"unknown instruction {ins!r}")

    # -- entry -----------------------------------------------------------------

    def run_entry(self):
        entry = self.program.entry
        if entry is None:
            self._report(None, "EXEC", "program has no entry routine", None)
            return self.trace, self.diags
        types = {p.name: self._type_name(p.type, None) for p in entry.locals}
        vars = {}
        for p in entry.locals:
            vars[p.name] = default_value(types[p.name])
        self._entry_vars = vars
        self.stack.append(_Activation(entry, None, VOID, vars, types, None))
        try:
            self.exec_body(entry.body)
            if entry.ensure and self._on("CALL-POST"):
                verdicts = self._mark("return", VOID, entry.name, entry.loc).verdicts
                self._holds(verdicts, "CALL-POST", entry.ensure, Env(VOID, vars, self.trace.snapshots[0]),
                            entry.loc, f"postcondition of entry {entry.name}")
        except Abort:
            pass
        except RecursionError:
            self._report(None, "EXEC", "call nesting too deep", entry.loc)
        finally:
            self.stack.clear()
        return self.trace, self.diags


_MISSING = object()


def run_entry(program, options=None, filename=None):
    """Execute the entry routine from an empty heap: (trace, diagnostics)."""
    pc = ProtocolChecker(program, options, filename)
    return pc.run_entry()
