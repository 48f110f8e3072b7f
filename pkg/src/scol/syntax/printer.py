"""Pretty-printer producing re-parsable source in a normal form."""

from __future__ import annotations

from scol.syntax import ast as A

_BIN_PREC = {
    "implies": 1, "or": 2, "and": 3,
    "=": 5, "/=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5, "in": 5,
    "+": 6, "-": 6, "*": 7,
}
_POSTFIX = 9


def expr_str(e, prec=0):
    """Source text of an expression; parenthesised when binding looser than ``prec``."""
    text, own = _expr(e)
    return f"({text})" if own < prec else text


def _args(args):
    return "(" + ", ".join(expr_str(a) for a in args) + ")"


def _expr(e):
    if isinstance(e, A.IntLit):
        return str(e.value), (8 if e.value < 0 else 10)
    if isinstance(e, A.BoolLit):
        return ("True" if e.value else "False"), 10
    if isinstance(e, A.VoidLit):
        return "Void", 10
    if isinstance(e, A.CurrentRef):
        return "Current", 10
    if isinstance(e, A.ResultRef):
        return "Result", 10
    if isinstance(e, A.Name):
        if e.args is None:
            return e.name, 10
        return f"{e.name} {_args(e.args)}", 10
    if isinstance(e, A.Member):
        head = f"{expr_str(e.target, _POSTFIX)}.{e.name}"
        if e.args is not None:
            head += f" {_args(e.args)}"
        return head, _POSTFIX
    if isinstance(e, A.Index):
        return f"{expr_str(e.target, _POSTFIX)} [{expr_str(e.index)}]", _POSTFIX
    if isinstance(e, A.Unary):
        if e.op == "not":
            return f"not {expr_str(e.operand, 4)}", 4
        operand = expr_str(e.operand, 8)
        if isinstance(e.operand, A.IntLit) or operand.startswith("-"):
            # keep the parser from folding the sign into a literal
            operand = f"({operand})" if not operand.startswith("(") else operand
        return f"-{operand}", 8
    if isinstance(e, A.Binary):
        p = _BIN_PREC[e.op]
        if e.op == "implies":
            return f"{expr_str(e.left, p + 1)} implies {expr_str(e.right, p)}", p
        if p == 5:
            return f"{expr_str(e.left, p + 1)} {e.op} {expr_str(e.right, p + 1)}", p
        return f"{expr_str(e.left, p)} {e.op} {expr_str(e.right, p + 1)}", p
    if isinstance(e, A.IfExpr):
        return f"if {expr_str(e.cond)} then {expr_str(e.then)} else {expr_str(e.else_)} end", 10
    if isinstance(e, A.Quant):
        return f"{e.kind} {e.var} in {expr_str(e.domain, 6)} : {expr_str(e.body)}", 1
    if isinstance(e, A.Old):
        return f"old {expr_str(e.expr, _POSTFIX)}", 8
    if isinstance(e, A.SetLit):
        return "{" + ", ".join(expr_str(x) for x in e.elems) + "}", 10
    if isinstance(e, A.SeqLit):
        return "<<" + ", ".join(expr_str(x, 6) for x in e.elems) + ">>", 10
    raise TypeError(f"unknown expression {e!r}")


def _clause(e):
    text = expr_str(e)
    # a clause starting with '-' would continue the previous one
    return f"({text})" if text.startswith("-") else text


def _type(t):
    return str(t)


def _decls(ps, sep):
    return sep.join(f"{p.name}: {_type(p.type)}" for p in ps)


class _Writer:
    def __init__(self):
        self.lines = []

    def line(self, depth, text):
        self.lines.append("  " * depth + text)

    def instrs(self, body, d):
        for ins in body:
            self.instr(ins, d)

    def instr(self, ins, d):
        if isinstance(ins, A.Create):
            text = f"create {expr_str(ins.target, _POSTFIX)}"
            if ins.ctor is not None:
                text += f".{ins.ctor}"
                if ins.args:
                    text += f" {_args(ins.args)}"
            self.line(d, text)
        elif isinstance(ins, A.Assign):
            self.line(d, f"{expr_str(ins.target, _POSTFIX)} := {expr_str(ins.value)}")
        elif isinstance(ins, A.CallInstr):
            head = ins.name if ins.target is None else f"{expr_str(ins.target, _POSTFIX)}.{ins.name}"
            if ins.args:
                head += f" {_args(ins.args)}"
            self.line(d, head)
        elif isinstance(ins, (A.Wrap, A.Unwrap)):
            word = "wrap" if isinstance(ins, A.Wrap) else "unwrap"
            self.line(d, word if ins.target is None else f"{expr_str(ins.target, _POSTFIX)}.{word}")
        elif isinstance(ins, (A.WrapAll, A.UnwrapAll)):
            word = "wrap_all" if isinstance(ins, A.WrapAll) else "unwrap_all"
            self.line(d, f"{word} ({expr_str(ins.objects)})")
        elif isinstance(ins, A.If):
            for i, (cond, body) in enumerate(ins.branches):
                self.line(d, f"{'if' if i == 0 else 'elseif'} {expr_str(cond)} then")
                self.instrs(body, d + 1)
            if ins.else_body is not None:
                self.line(d, "else")
                self.instrs(ins.else_body, d + 1)
            self.line(d, "end")
        elif isinstance(ins, A.Across):
            self.line(d, f"across {expr_str(ins.domain)} as {ins.var} do")
            self.instrs(ins.body, d + 1)
            self.line(d, "end")
        else:
            raise TypeError(f"unknown instruction {ins!r}")

    def assertions(self, word, clauses, d):
        self.line(d, word)
        for c in clauses:
            self.line(d + 1, _clause(c))

    def method(self, m, d, header):
        self.line(d, header)
        if m.explicit:
            self.line(d + 1, "note explicit: " + ", ".join(m.explicit))
        if m.require:
            self.assertions("require", m.require, d + 1)
        if m.modify is not None:
            self.line(d + 1, ("modify " + ", ".join(expr_str(e) for e in m.modify)).rstrip())
        if m.locals:
            self.line(d + 1, "local " + _decls(m.locals, "; "))
        self.line(d + 1, "do")
        self.instrs(m.body, d + 2)
        if m.ensure:
            self.assertions("ensure", m.ensure, d + 1)
        self.line(d + 1, "end")

    def cls(self, c):
        head = f"class {c.name}"
        if c.generics:
            head += " [" + ", ".join(c.generics) + "]"
        if c.creators:
            head += " create " + ", ".join(c.creators)
        self.line(0, head)
        current = object()

        def section(exports):
            nonlocal current
            if exports != current:
                current = exports
                if exports is None:
                    self.line(0, "feature")
                else:
                    self.line(0, "feature {" + ", ".join(exports) + "}")

        for a in c.attributes:
            section(a.exports)
            text = ("ghost " if a.is_ghost else "") + f"{a.name}: {_type(a.type)}"
            if a.guard is not None:
                text += f" guard {expr_str(a.guard)}"
            self.line(1, text)
        for f in c.functions:
            section(f.exports)
            head = f"function {f.name}"
            if f.params:
                head += f" ({_decls(f.params, '; ')})"
            head += f": {_type(f.type)}"
            if f.read:
                head += " read " + ", ".join(expr_str(r) for r in f.read)
            self.line(1, f"{head} is {expr_str(f.definition)} end")
        for m in c.methods:
            section(m.exports)
            head = ("ghost " if m.is_ghost else "") + m.name
            if m.params:
                head += f" ({_decls(m.params, '; ')})"
            if m.result_type is not None:
                head += f": {_type(m.result_type)}"
            self.method(m, 1, head)
        if c.invariant:
            self.assertions("invariant", c.invariant, 0)
        self.line(0, "end")


def pretty_print(program: A.Program) -> str:
    w = _Writer()
    for i, c in enumerate(program.classes):
        if i:
            w.line(0, "")
        w.cls(c)
    if program.entry is not None:
        if program.classes:
            w.line(0, "")
        w.method(program.entry, 0, f"entry {program.entry.name}")
    return "\n".join(w.lines) + ("\n" if w.lines else "")
