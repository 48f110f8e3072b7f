"""Lookup tables over a parsed program."""

from __future__ import annotations

from functools import cached_property

from scol.syntax import ast as A


class ClassInfo:
    def __init__(self, decl: A.ClassDecl):
        self.decl = decl
        self.name = decl.name
        self.generics = frozenset(decl.generics)
        self.attributes = {a.name: a for a in decl.attributes}
        self.functions = {f.name: f for f in decl.functions}
        self.methods = {m.name: m for m in decl.methods}
        self.invariant = tuple(c for clause in decl.invariant for c in A.conjuncts(clause))
        self.implicit_sets = dict(decl.implicit_sets)

    def feature(self, name):
        return self.attributes.get(name) or self.functions.get(name) or self.methods.get(name)


class SymbolTable:
    def __init__(self, program: A.Program):
        self.program = program
        self.classes = {}
        for c in program.classes:
            # first declaration wins; duplicates are reported by the checker
            self.classes.setdefault(c.name, ClassInfo(c))

    def __getitem__(self, name) -> ClassInfo:
        return self.classes[name]

    def get(self, name):
        return self.classes.get(name)

    @cached_property
    def function_names(self):
        out = {}
        for info in self.classes.values():
            for f in info.functions.values():
                out.setdefault(f.name, []).append((info, f))
        return out

    @cached_property
    def member_names(self):
        names = set()
        for info in self.classes.values():
            names.update(info.attributes)
            names.update(info.functions)
            names.update(info.methods)
        return names
