"""Load, desugar and check one source; run the whole corpus."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from scol import corpus as C
from scol.checker import Options, ProtocolChecker
from scol.diagnostics import Diagnostic
from scol.oracle import check_global
from scol.syntax import ast as A
from scol.syntax.checks import check_syntactic_admissibility, parse_program
from scol.syntax.defaults import desugar_with_notes
from scol.syntax.lexer import tokenize
from scol.syntax.printer import pretty_print


@dataclass
class RunConfig:
    mode: str = "check"  # check | fuzz | audit | corpus
    defaults_enabled: bool = True
    a3_mode: str = "instance"
    oracle_every_step: bool = False
    keep_going: bool = False
    max_steps: int = 100_000
    seed: Optional[int] = None
    format: str = "text"

    def options(self, **override):
        opts = Options(
            a3_mode=self.a3_mode,
            oracle=self.oracle_every_step,
            keep_going=self.keep_going,
            max_steps=self.max_steps,
        )
        return replace(opts, **override) if override else opts


@dataclass
class CheckResult:
    file: str
    status: str  # pass | fail | error (load failure)
    diagnostics: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    trace: object = None
    program: object = None
    evaluator: object = None
    final_global: object = None

    @property
    def obligation_ids(self):
        return sorted({d.obligation_id for d in self.diagnostics})

    @property
    def exit_code(self):
        return {"pass": 0, "fail": 1}.get(self.status, 2)


def load(source, filename=None, defaults=True):
    """(program, notes) or (None, load diagnostics)."""
    p = parse_program(source, filename)
    if isinstance(p, list):
        return None, p
    q, notes = desugar_with_notes(p, defaults, filename)
    return q, notes


def check_source(source, filename="<input>", config=None, **option_overrides):
    config = config or RunConfig()
    p = parse_program(source, filename)
    if isinstance(p, list):
        return CheckResult(filename, "error", diagnostics=p)
    diags = check_syntactic_admissibility(p, filename)
    program, notes = desugar_with_notes(p, config.defaults_enabled, filename)
    result = CheckResult(filename, "pass", notes=notes, program=program)
    if diags and not config.keep_going:
        result.diagnostics = diags
        result.status = "fail"
        return result
    pc = ProtocolChecker(program, config.options(**option_overrides), filename)
    pc.failed = bool(diags)
    trace, run_diags = pc.run_entry()
    result.diagnostics = diags + run_diags
    result.trace = trace
    result.evaluator = pc.ev
    result.final_global = check_global(pc.heap, pc.ev, trace.last_snapshot)
    if result.diagnostics:
        result.status = "fail"
    return result


def check_file(path, config=None, **option_overrides):
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    return check_source(source, str(path), config, **option_overrides)


# -- token overhead --------------------------------------------------------------


def _strip_instrs(body, ghost_attrs):
    out = []
    for ins in body:
        if isinstance(ins, (A.Wrap, A.Unwrap, A.WrapAll, A.UnwrapAll)):
            continue
        if isinstance(ins, A.Assign):
            t = ins.target
            if isinstance(t, (A.Name, A.Member)) and (t.name in A.GHOST_SETS or t.name in ghost_attrs):
                continue
        if isinstance(ins, A.If):
            ins = replace(ins, branches=tuple((c, _strip_instrs(b, ghost_attrs)) for c, b in ins.branches),
                          else_body=None if ins.else_body is None else _strip_instrs(ins.else_body, ghost_attrs))
        elif isinstance(ins, A.Across):
            ins = replace(ins, body=_strip_instrs(ins.body, ghost_attrs))
        out.append(ins)
    return tuple(out)


def executable_part(program):
    """The program with every specification element removed."""
    ghost = {a.name for c in program.classes for a in c.attributes if a.is_ghost}
    classes = []
    for c in program.classes:
        methods = tuple(
            replace(m, require=(), ensure=(), modify=None, explicit=(),
                    body=_strip_instrs(m.body, ghost))
            for m in c.methods if not m.is_ghost
        )
        attrs = tuple(replace(a, guard=None) for a in c.attributes if not a.is_ghost)
        classes.append(replace(c, attributes=attrs, functions=(), methods=methods, invariant=()))
    entry = program.entry
    if entry is not None:
        entry = replace(entry, require=(), ensure=(), modify=None, body=_strip_instrs(entry.body, ghost))
    return replace(program, classes=tuple(classes), entry=entry)


def token_count(program):
    return len(tokenize(pretty_print(program))) - 1


def token_overhead(source, filename=None):
    """(specification tokens, code tokens, overhead ratio) of a source as written."""
    p = parse_program(source, filename)
    if isinstance(p, list):
        raise ValueError(f"cannot parse {filename}: {p[0]}")
    total = token_count(p)
    code = token_count(executable_part(p))
    spec = total - code
    return spec, code, spec / code


# -- corpus ------------------------------------------------------------------------


@dataclass
class CorpusRow:
    name: str
    kind: str  # original | mutant
    expected: str
    got: list
    steps: int
    obligations: int
    ok: bool

    @property
    def verdict(self):
        return "clean" if not self.got else ",".join(self.got)


@dataclass
class CorpusSummary:
    rows: list
    overhead: dict

    @property
    def ok(self):
        return all(r.ok for r in self.rows)

    def covered_ids(self):
        return {r.expected for r in self.rows if r.kind == "mutant" and r.ok}


def _row(name, kind, expected, res):
    got = res.obligation_ids
    steps = len(res.trace.steps) if res.trace else 0
    obls = res.trace.obligations_checked() if res.trace else 0
    ok = (not got and res.status == "pass") if expected == "clean" else (got == [expected])
    return CorpusRow(name, kind, expected, got, steps, obls, ok)


def run_corpus(config=None, root=None):
    """Check every original (oracle on) and every mutant of the corpus."""
    config = config or RunConfig(oracle_every_step=True)
    rows = []
    for e in C.ENTRIES:
        res = check_source(C.read_source(e.filename, root), f"corpus/{e.filename}", config, oracle=True)
        rows.append(_row(e.name, "original", e.expected, res))
    for m in C.MUTANTS:
        res = check_source(C.mutant_source(m, root), f"corpus/{m.filename}", config, **m.options)
        rows.append(_row(m.id, "mutant", m.expected, res))
    overhead = {}
    for name in ("observer", C.DEFAULTS_VARIANT):
        spec, code, ratio = token_overhead(C.read_source(f"{name}.scol", root), name)
        overhead[name] = {"spec_tokens": spec, "code_tokens": code, "overhead": round(ratio, 3)}
    return CorpusSummary(rows, overhead)


__all__ = [
    "RunConfig", "CheckResult", "check_source", "check_file", "load", "token_overhead",
    "executable_part", "run_corpus", "CorpusSummary", "CorpusRow", "Diagnostic",
]
