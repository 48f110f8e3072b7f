"""Recursive-descent parser for ``.scol`` sources.

Expression precedence, loosest first::

    implies (right assoc, also '=>') < or < and < not
        < comparison (= /= < <= > >= in) < + - < * < unary - < postfix

Assertion clauses are juxtaposed: an expression ends at the first token that
cannot continue it.  Argument lists and index brackets must open on the line
of the callee, so a parenthesised clause on the next line starts a new
assertion.
"""

from __future__ import annotations

from scol.diagnostics import SourceError
from scol.syntax import ast as A
from scol.syntax.lexer import tokenize

_CMP_OPS = ("=", "/=", "<", "<=", ">", ">=")
_EXPR_START_KW = frozenset(
    ["True", "False", "Void", "Current", "Result", "not", "old", "all", "some", "if"]
)
_EXPR_START_OP = frozenset(["(", "{", "<<", "-"])
_INSTR_END_KW = frozenset(["end", "else", "elseif", "ensure"])
_METHOD_CLAUSE_KW = frozenset(["require", "modify", "local", "do", "note"])


class Parser:
    def __init__(self, source, filename=None):
        self.filename = filename
        self.tokens = tokenize(source, filename)
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self):
        return self.tokens[self.pos]

    def peek(self, k=1):
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self):
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message, tok=None):
        tok = tok or self.tok
        raise SourceError("PARSE", message, self.filename, tok.line, tok.column)

    def at_kw(self, *words):
        return self.tok.kind == "kw" and self.tok.text in words

    def at_op(self, *ops):
        return self.tok.kind == "op" and self.tok.text in ops

    def accept_kw(self, word):
        if self.at_kw(word):
            return self.advance()
        return None

    def accept_op(self, op):
        if self.at_op(op):
            return self.advance()
        return None

    def expect_kw(self, word):
        if not self.at_kw(word):
            self.error(f"expected '{word}', found {self.tok}")
        return self.advance()

    def expect_op(self, op):
        if not self.at_op(op):
            self.error(f"expected '{op}', found {self.tok}")
        return self.advance()

    def expect_ident(self):
        if self.tok.kind != "ident":
            self.error(f"expected identifier, found {self.tok}")
        return self.advance()

    def same_line_op(self, op):
        prev = self.tokens[self.pos - 1]
        return self.at_op(op) and self.tok.line == prev.line

    # -- program -----------------------------------------------------------

    def parse_program(self):
        classes = []
        entry = None
        while self.tok.kind != "eof":
            if self.at_kw("class"):
                classes.append(self.parse_class())
            elif self.at_kw("entry"):
                if entry is not None:
                    self.error("duplicate entry routine")
                entry = self.parse_entry()
            else:
                self.error(f"expected 'class' or 'entry', found {self.tok}")
        return A.Program(tuple(classes), entry)

    def parse_entry(self):
        start = self.expect_kw("entry")
        name = self.expect_ident().text
        m = self.parse_method_rest(name, (), None, None, False, start.loc)
        if m.params or m.result_type is not None:
            self.error("entry routine takes no parameters", start)
        return m

    def parse_class(self):
        start = self.expect_kw("class")
        name = self.expect_ident().text
        generics = []
        if self.accept_op("["):
            generics.append(self.expect_ident().text)
            while self.accept_op(","):
                generics.append(self.expect_ident().text)
            self.expect_op("]")
        creators = []
        if self.accept_kw("create"):
            creators.append(self.expect_ident().text)
            while self.accept_op(","):
                creators.append(self.expect_ident().text)
        attributes, functions, methods, invariant = [], [], [], []
        exports = None
        while True:
            if self.accept_kw("feature"):
                exports = None
                if self.accept_op("{"):
                    names = []
                    if not self.at_op("}"):
                        names.append(self.expect_ident().text)
                        while self.accept_op(","):
                            names.append(self.expect_ident().text)
                    self.expect_op("}")
                    exports = tuple(names)
                continue
            if self.accept_kw("invariant"):
                invariant.extend(self.parse_assertions())
                self.expect_kw("end")
                break
            if self.accept_kw("end"):
                break
            self.parse_feature(exports, attributes, functions, methods)
        return A.ClassDecl(
            name, tuple(generics), tuple(creators), tuple(attributes),
            tuple(functions), tuple(methods), tuple(invariant), loc=start.loc,
        )

    def parse_feature(self, exports, attributes, functions, methods):
        is_ghost = bool(self.accept_kw("ghost"))
        if self.at_kw("function"):
            functions.append(self.parse_function(exports))
            return
        first = self.expect_ident()
        if self.at_op(","):
            names = [first]
            while self.accept_op(","):
                names.append(self.expect_ident())
            self.expect_op(":")
            typ = self.parse_type()
            guard = self.parse_guard()
            for n in names:
                attributes.append(A.AttributeDecl(n.text, typ, is_ghost, guard, exports, loc=n.loc))
            return
        params = ()
        if self.at_op("("):
            params = self.parse_params()
        result_type = None
        if self.accept_op(":"):
            result_type = self.parse_type()
            if not params and not (self.tok.kind == "kw" and self.tok.text in _METHOD_CLAUSE_KW):
                guard = self.parse_guard()
                attributes.append(
                    A.AttributeDecl(first.text, result_type, is_ghost, guard, exports, loc=first.loc)
                )
                return
        methods.append(
            self.parse_method_rest(first.text, params, result_type, exports, is_ghost, first.loc)
        )

    def parse_guard(self):
        if self.accept_kw("guard"):
            return self.parse_expr()
        return None

    def parse_function(self, exports):
        start = self.expect_kw("function")
        name = self.expect_ident().text
        params = self.parse_params() if self.at_op("(") else ()
        self.expect_op(":")
        typ = self.parse_type()
        read = ()
        if self.accept_kw("read"):
            read = self.parse_expr_list()
        self.expect_kw("is")
        definition = self.parse_expr()
        self.expect_kw("end")
        return A.FunctionDecl(name, params, typ, definition, read, True, exports, loc=start.loc)

    def parse_params(self):
        self.expect_op("(")
        params = []
        if not self.at_op(")"):
            params = self.parse_decls(closing=")")
        self.expect_op(")")
        return tuple(params)

    def parse_decls(self, closing=None):
        decls = []
        while True:
            names = [self.expect_ident()]
            while self.accept_op(","):
                names.append(self.expect_ident())
            self.expect_op(":")
            typ = self.parse_type()
            decls.extend(A.Param(n.text, typ, loc=n.loc) for n in names)
            if self.accept_op(";") or self.accept_op(","):
                continue
            if closing is None and self.tok.kind == "ident":
                continue
            return decls

    def parse_type(self):
        t = self.expect_ident()
        args = []
        if self.same_line_op("["):
            self.advance()
            args.append(self.parse_type())
            while self.accept_op(","):
                args.append(self.parse_type())
            self.expect_op("]")
        return A.TypeRef(t.text, tuple(args), loc=t.loc)

    def parse_method_rest(self, name, params, result_type, exports, is_ghost, loc):
        require, modify, locals_, explicit = [], None, [], []
        while True:
            if self.accept_kw("note"):
                self.expect_kw("explicit")
                self.expect_op(":")
                explicit.append(self.expect_ident().text)
                while self.accept_op(","):
                    explicit.append(self.expect_ident().text)
            elif self.accept_kw("require"):
                require.extend(self.parse_assertions())
            elif self.accept_kw("modify"):
                modify = list(modify or [])
                if self.starts_expr():
                    modify.extend(self.parse_expr_list())
            elif self.accept_kw("local"):
                if self.tok.kind == "ident":
                    locals_.extend(self.parse_decls())
            else:
                break
        self.expect_kw("do")
        body = self.parse_instrs()
        ensure = []
        if self.accept_kw("ensure"):
            ensure = self.parse_assertions()
        self.expect_kw("end")
        return A.MethodDecl(
            name, tuple(params), result_type, tuple(require), tuple(ensure),
            None if modify is None else tuple(modify), tuple(locals_), body,
            exports, is_ghost, tuple(explicit), loc=loc,
        )

    def starts_expr(self):
        t = self.tok
        if t.kind in ("int", "ident"):
            return True
        if t.kind == "kw":
            return t.text in _EXPR_START_KW
        if t.kind == "op":
            return t.text in _EXPR_START_OP
        return False

    def parse_assertions(self):
        out = []
        while self.starts_expr():
            out.append(self.parse_expr())
            self.accept_op(";")
        return out

    def parse_expr_list(self):
        out = [self.parse_expr()]
        while self.accept_op(","):
            out.append(self.parse_expr())
        return tuple(out)

    # -- instructions ------------------------------------------------------

    def parse_instrs(self):
        out = []
        while True:
            while self.accept_op(";"):
                pass
            if self.tok.kind == "eof" or (self.tok.kind == "kw" and self.tok.text in _INSTR_END_KW):
                return tuple(out)
            out.append(self.parse_instr())

    def parse_instr(self):
        t = self.tok
        if self.accept_kw("create"):
            name = self.expect_ident()
            target = A.Name(name.text, loc=name.loc)
            ctor, args = None, ()
            if self.accept_op("."):
                ctor = self.expect_ident().text
                if self.same_line_op("("):
                    args = self.parse_args()
            return A.Create(target, ctor, args, loc=t.loc)
        if self.accept_kw("if"):
            branches = []
            cond = self.parse_expr()
            self.expect_kw("then")
            branches.append((cond, self.parse_instrs()))
            else_body = None
            while True:
                if self.accept_kw("elseif"):
                    cond = self.parse_expr()
                    self.expect_kw("then")
                    branches.append((cond, self.parse_instrs()))
                elif self.accept_kw("else"):
                    else_body = self.parse_instrs()
                    self.expect_kw("end")
                    break
                else:
                    self.expect_kw("end")
                    break
            return A.If(tuple(branches), else_body, loc=t.loc)
        if self.accept_kw("across"):
            domain = self.parse_expr()
            self.expect_kw("as")
            var = self.expect_ident().text
            self.expect_kw("do")
            body = self.parse_instrs()
            self.expect_kw("end")
            return A.Across(domain, var, body, loc=t.loc)
        for kw, node in (("wrap_all", A.WrapAll), ("unwrap_all", A.UnwrapAll)):
            if self.accept_kw(kw):
                self.expect_op("(")
                e = self.parse_expr()
                self.expect_op(")")
                return node(e, loc=t.loc)
        target = self.parse_postfix()
        if self.accept_op(":="):
            if isinstance(target, (A.Name, A.Member)) and target.args is None:
                if target.name in ("closed", "owner"):
                    raise SourceError(
                        "TYPE", f"'{target.name}' changes only through wrap and unwrap",
                        self.filename, t.line, t.column,
                    )
                return A.Assign(target, self.parse_expr(), loc=t.loc)
            if isinstance(target, A.ResultRef):
                return A.Assign(target, self.parse_expr(), loc=t.loc)
            self.error("invalid assignment target", t)
        if isinstance(target, A.Name):
            if target.name in ("wrap", "unwrap") and target.args is None:
                return (A.Wrap if target.name == "wrap" else A.Unwrap)(None, loc=t.loc)
            return A.CallInstr(None, target.name, target.args or (), loc=t.loc)
        if isinstance(target, A.Member):
            if target.name in ("wrap", "unwrap") and target.args is None:
                node = A.Wrap if target.name == "wrap" else A.Unwrap
                return node(target.target, loc=t.loc)
            return A.CallInstr(target.target, target.name, target.args or (), loc=t.loc)
        self.error("expected an instruction", t)

    # -- expressions -------------------------------------------------------

    def parse_expr(self):
        left = self.parse_or()
        if self.at_kw("implies") or self.at_op("=>"):
            t = self.advance()
            right = self.parse_expr()
            return A.Binary("implies", left, right, loc=left.loc or t.loc)
        return left

    def parse_or(self):
        left = self.parse_and()
        while self.at_kw("or"):
            self.advance()
            left = A.Binary("or", left, self.parse_and(), loc=left.loc)
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.at_kw("and"):
            self.advance()
            left = A.Binary("and", left, self.parse_not(), loc=left.loc)
        return left

    def parse_not(self):
        if self.at_kw("not"):
            t = self.advance()
            return A.Unary("not", self.parse_not(), loc=t.loc)
        return self.parse_cmp()

    def parse_cmp(self):
        left = self.parse_add()
        if self.at_op(*_CMP_OPS) or self.at_kw("in"):
            op = self.advance().text
            right = self.parse_add()
            return A.Binary(op, left, right, loc=left.loc)
        return left

    def parse_add(self):
        left = self.parse_mul()
        while self.at_op("+", "-"):
            op = self.advance().text
            left = A.Binary(op, left, self.parse_mul(), loc=left.loc)
        return left

    def parse_mul(self):
        left = self.parse_unary()
        while self.at_op("*"):
            self.advance()
            left = A.Binary("*", left, self.parse_unary(), loc=left.loc)
        return left

    def parse_unary(self):
        if self.at_op("-"):
            t = self.advance()
            if self.tok.kind == "int" and not self.peek().is_("op", ".") and not self.peek().is_("op", "["):
                return A.IntLit(-int(self.advance().text), loc=t.loc)
            return A.Unary("-", self.parse_unary(), loc=t.loc)
        return self.parse_postfix()

    def parse_args(self):
        self.expect_op("(")
        args = []
        if not self.at_op(")"):
            args = list(self.parse_expr_list())
        self.expect_op(")")
        return tuple(args)

    def parse_postfix(self):
        e = self.parse_primary()
        while True:
            if self.at_op("."):
                self.advance()
                name = self.expect_ident()
                args = self.parse_args() if self.same_line_op("(") else None
                e = A.Member(e, name.text, args, loc=e.loc)
            elif self.same_line_op("["):
                self.advance()
                idx = self.parse_expr()
                self.expect_op("]")
                e = A.Index(e, idx, loc=e.loc)
            else:
                return e

    def parse_primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(int(t.text), loc=t.loc)
        if t.kind == "ident":
            self.advance()
            args = self.parse_args() if self.same_line_op("(") else None
            return A.Name(t.text, args, loc=t.loc)
        if t.kind == "kw":
            if t.text in ("True", "False"):
                self.advance()
                return A.BoolLit(t.text == "True", loc=t.loc)
            if t.text == "Void":
                self.advance()
                return A.VoidLit(loc=t.loc)
            if t.text == "Current":
                self.advance()
                return A.CurrentRef(loc=t.loc)
            if t.text == "Result":
                self.advance()
                return A.ResultRef(loc=t.loc)
            if t.text == "old":
                self.advance()
                return A.Old(self.parse_postfix(), loc=t.loc)
            if t.text in ("all", "some"):
                self.advance()
                var = self.expect_ident().text
                self.expect_kw("in")
                domain = self.parse_add()
                self.expect_op(":")
                body = self.parse_expr()
                return A.Quant(t.text, var, domain, body, loc=t.loc)
            if t.text == "if":
                self.advance()
                cond = self.parse_expr()
                self.expect_kw("then")
                then = self.parse_expr()
                self.expect_kw("else")
                else_ = self.parse_expr()
                self.expect_kw("end")
                return A.IfExpr(cond, then, else_, loc=t.loc)
        if t.kind == "op":
            if t.text == "(":
                self.advance()
                e = self.parse_expr()
                self.expect_op(")")
                return e
            if t.text == "{":
                self.advance()
                elems = () if self.at_op("}") else self.parse_expr_list()
                self.expect_op("}")
                return A.SetLit(tuple(elems), loc=t.loc)
            if t.text == "<<":
                self.advance()
                elems = () if self.at_op(">>") else self.parse_expr_list()
                self.expect_op(">>")
                return A.SeqLit(tuple(elems), loc=t.loc)
        self.error(f"expected an expression, found {t}")


def parse(source, filename=None):
    """Parse ``source`` into a ``Program``; raises ``SourceError`` on syntax errors."""
    return Parser(source, filename).parse_program()


def parse_expression(source):
    p = Parser(source)
    e = p.parse_expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok} after expression")
    return e
