"""Randomized soundness harness.

Each trace draws a small program (classes with an integer ``v``, an optional
subject link ``s`` and an optional owned link ``r``, invariants from a
template pool) and a random sequence of heap-update instructions, then drives
the protocol checker directly.  After every accepted instruction the global
validity oracle runs; an *incident* is an accepted step after which G1 or G2
fails.  Every trace is also replayed through the lemma hypotheses audit.

The instruction generator is biased toward instructions that can succeed
(wrapping objects whose invariant holds, registering observers before
wrapping them) so that accepted traces are long, but it never consults the
update guards: those are the checker's job.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from scol.checker import Abort, Options, ProtocolChecker, _Skip
from scol.evaluation import EvalError
from scol.oracle import check_global, lemma_hypotheses_audit
from scol.syntax import ast as A
from scol.syntax.parser import parse_expression
from scol.syntax.printer import pretty_print
from scol.values import VOID


@dataclass(frozen=True)
class SizeBounds:
    max_classes: int = 4
    max_attributes: int = 3
    max_steps: int = 40
    max_objects: int = 8


@dataclass
class Incident:
    trace: int
    trace_seed: str
    step: int
    g1_counterexample: object
    g2_counterexample: object
    program: str
    steps: list

    def to_dict(self):
        return {
            "trace": self.trace,
            "trace_seed": self.trace_seed,
            "step": self.step,
            "g1_counterexample": None if self.g1_counterexample is None else repr(self.g1_counterexample),
            "g2_counterexample": None if self.g2_counterexample is None else [repr(r) for r in self.g2_counterexample],
            "program": self.program,
            "steps": list(self.steps),
        }

    def to_text(self):
        what = []
        if self.g1_counterexample is not None:
            what.append(f"G1 fails at {self.g1_counterexample!r}")
        if self.g2_counterexample is not None:
            p, o = self.g2_counterexample
            what.append(f"G2 fails at ({p!r}, {o!r})")
        lines = [f"incident in trace {self.trace} (seed {self.trace_seed}) after step {self.step}: "
                 + "; ".join(what), "program:"]
        lines += ["  " + ln for ln in self.program.splitlines()]
        lines.append("steps:")
        lines += [f"  {i}: {s}" for i, s in enumerate(self.steps)]
        return "\n".join(lines)


@dataclass
class SoundnessReport:
    seed: int
    traces: int = 0
    steps_checked: int = 0
    accepted_traces: int = 0
    rejections: dict = field(default_factory=dict)
    incidents: list = field(default_factory=list)
    audit_failures: list = field(default_factory=list)
    disabled: tuple = ()
    elapsed: float = 0.0

    @property
    def ok(self):
        return not self.incidents and not self.audit_failures

    def to_dict(self):
        return {
            "seed": self.seed,
            "traces": self.traces,
            "steps_checked": self.steps_checked,
            "accepted_traces": self.accepted_traces,
            "rejections": dict(sorted(self.rejections.items())),
            "incidents": [i.to_dict() for i in self.incidents],
            "audit_failures": list(self.audit_failures),
            "disabled": list(self.disabled),
        }

    def to_text(self):
        lines = [
            f"seed: {self.seed}",
            f"traces: {self.traces}",
            f"steps checked: {self.steps_checked}",
            f"traces accepted to the end: {self.accepted_traces}",
            f"incidents: {len(self.incidents)}",
            f"audit failures: {len(self.audit_failures)}",
        ]
        if self.disabled:
            lines.append(f"disabled obligations: {', '.join(self.disabled)}")
        if self.rejections:
            lines.append("rejections: " + ", ".join(f"{k}={v}" for k, v in sorted(self.rejections.items())))
        for inc in self.incidents[:5]:
            lines.append(inc.to_text())
        if len(self.incidents) > 5:
            lines.append(f"... {len(self.incidents) - 5} more incidents")
        for f_ in self.audit_failures[:5]:
            lines.append(f"audit: {f_}")
        return "\n".join(lines)


# -- program generation ----------------------------------------------------------


@lru_cache(maxsize=None)
def _expr(text):
    return parse_expression(text)


_GUARDS = ((None, 0.4), ("y >= v", 0.3), ("True", 0.15), ("False", 0.15))
_RELATIONS = ("=", "<=", ">=")


def _pick(rng, weighted):
    r = rng.random()
    for value, w in weighted:
        r -= w
        if r < 0:
            return value
    return weighted[-1][0]


def random_program(rng, bounds=SizeBounds()):
    """A program whose invariants all come from the template pool."""
    names = [f"C{i}" for i in range(rng.randint(1, max(1, bounds.max_classes)))]
    classes = []
    for name in names:
        guard = _pick(rng, _GUARDS)
        attrs = [A.AttributeDecl("v", A.TypeRef("INTEGER"), guard=None if guard is None else _expr(guard))]
        inv = []
        if rng.random() < 0.3:
            inv.append(rng.choice(("v >= 0", "v <= 3")))
        if bounds.max_attributes >= 2 and rng.random() < 0.75:
            attrs.append(A.AttributeDecl("s", A.TypeRef(rng.choice(names))))
            inv.append(f"s /= Void implies v {rng.choice(_RELATIONS)} s.v")
            if rng.random() < 0.9:
                inv.append("s /= Void implies subjects.has (s)")
            if rng.random() < 0.6:
                inv.append("s /= Void implies s.observers.has (Current)")
        if len(attrs) < bounds.max_attributes and rng.random() < 0.5:
            attrs.append(A.AttributeDecl("r", A.TypeRef(rng.choice(names))))
            if rng.random() < 0.9:
                inv.append("r /= Void implies owns.has (r)")
            if rng.random() < 0.8:
                inv.append("r /= Void implies r.v <= 3")
        classes.append(A.ClassDecl(name, attributes=tuple(attrs), invariant=tuple(_expr(t) for t in inv)))
    return A.Program(classes=tuple(classes))


# -- instruction generation -----------------------------------------------------


class _Driver:
    MISTAKE = 0.03  # chance of ignoring the bias

    def __init__(self, rng, program, bounds, options):
        self.rng = rng
        self.bounds = bounds
        self.pc = ProtocolChecker(program, options, "<fuzz>")
        self.classes = {c.name: {a.name: a.type.name for a in c.attributes} for c in program.classes}
        self.objects = []
        self.pending = []

    # heap queries used only to bias the generator
    def _st(self, o):
        return self.pc.heap.state(o)

    def _inv(self, o):
        try:
            return self.pc.ev.invariant(self.pc.heap, o)
        except EvalError:
            return False

    def _free(self, o):
        return not self._st(self._st(o).owner).closed

    def _wrappable(self, o):
        st = self._st(o)
        return (not st.closed and self._inv(o)
                and all(self._st(r).closed and self._free(r) for r in st.owns)
                and all(o in self._st(t).observers for t in st.subjects))

    def _of_class(self, cls):
        return [o for o in self.objects if self.pc.heap.class_of(o) == cls]

    def _attrs(self, o):
        return self.classes[self.pc.heap.class_of(o)]

    def _prefer(self, items, good):
        """Mostly a ``good`` item, sometimes any item."""
        pool = [o for o in items if good(o)]
        if self.rng.random() < self.MISTAKE or not pool:
            return self.rng.choice(items) if items and self.rng.random() < self.MISTAKE else None
        return self.rng.choice(pool)

    def next_instruction(self):
        if self.pending:
            return self.pending.pop(0)()
        rng = self.rng
        if len(self.objects) < 2 or (len(self.objects) < self.bounds.max_objects and rng.random() < 0.12):
            return ("create", rng.choice(sorted(self.classes)))
        r = rng.random()
        if r < 0.15:
            return self._plan_observe()
        if r < 0.25:
            return self._plan_own()
        if r < 0.4:
            return self._plan_bump()
        if r < 0.55:
            o = self._prefer(self.objects, self._wrappable)
            if o is not None:
                return ("wrap", o)
        if r < 0.65:
            o = self._prefer(self.objects, lambda o: self._st(o).closed and self._free(o))
            if o is not None:
                return ("unwrap", o)
        return self._random_update()

    def _random_update(self):
        rng = self.rng
        x = self._prefer(self.objects, lambda o: not self._st(o).closed)
        if x is None:
            if len(self.objects) < self.bounds.max_objects:
                return ("create", rng.choice(sorted(self.classes)))
            x = self._prefer(self.objects, lambda o: self._st(o).closed and self._free(o))
            return ("unwrap", x or rng.choice(self.objects))
        st = self._st(x)
        attrs = self._attrs(x)
        a = rng.choice(sorted(attrs) + ["owns", "subjects", "observers"])
        if a == "v":
            cands = [st.attrs["v"] + 1, st.attrs["v"] - 1, rng.randint(-1, 4)]
            s = st.attrs.get("s", VOID)
            if s != VOID:
                cands.append(self._st(s).attrs["v"])
            return ("update", x, "v", rng.choice(cands))
        if a in ("s", "r"):
            return ("update", x, a, rng.choice([VOID] + self._of_class(attrs[a])))
        cur = set(st.get(a))
        if cur and rng.random() < 0.4:
            cur.discard(rng.choice(sorted(cur, key=lambda r: r.id)))
        else:
            cur.add(rng.choice(self.objects))
        return ("update", x, a, frozenset(cur))

    def _plan_observe(self):
        """Link an open observer to a subject, register it on both sides, wrap it."""
        cands = [o for o in self.objects if "s" in self._attrs(o) and not self._st(o).closed]
        if not cands:
            return self._random_update()
        x = self.rng.choice(cands)
        subs = self._of_class(self._attrs(x)["s"])
        if not subs:
            return self._random_update()
        t = self._prefer(subs, lambda o: not self._st(o).closed or self._free(o))
        if t is None:
            return self._random_update()
        steps = []
        if self._st(t).closed and self._free(t):
            steps.append(lambda: ("unwrap", t))
        steps += [
            lambda: ("update", x, "s", t),
            lambda: ("update", x, "subjects", frozenset(self._st(x).subjects | {t})),
            lambda: ("update", t, "observers", frozenset(self._st(t).observers | {x})),
            lambda: ("update", x, "v", self._st(t).attrs["v"]),
        ]
        if t != x and self.rng.random() < 0.5:
            steps.append(lambda: ("wrap", t))
        steps.append(lambda: ("wrap", x))
        self.pending = steps[1:]
        return steps[0]()

    def _plan_own(self):
        """Make an open owner own a wrapped object through ``r``, then wrap it."""
        cands = [o for o in self.objects if "r" in self._attrs(o) and not self._st(o).closed]
        if not cands:
            return self._random_update()
        x = self.rng.choice(cands)
        reps = [o for o in self._of_class(self._attrs(x)["r"]) if o != x]
        if not reps:
            return self._random_update()
        t = self._prefer(reps, lambda o: self._free(o) and (self._st(o).closed or self._wrappable(o)))
        if t is None:
            return self._random_update()
        steps = [] if self._st(t).closed else [lambda: ("wrap", t)]
        steps += [
            lambda: ("update", x, "r", t),
            lambda: ("update", x, "owns", frozenset(self._st(x).owns | {t})),
            lambda: ("wrap", x),
        ]
        self.pending = steps[1:]
        return steps[0]()

    def _plan_bump(self):
        """Open an observed subject and change its ``v``."""
        t = self._prefer(self.objects, lambda o: self._st(o).observers and
                         (not self._st(o).closed or self._free(o)))
        if t is None:
            return self._random_update()
        step = lambda: ("update", t, "v", self._st(t).attrs["v"] + self.rng.choice((1, 1, -1)))  # noqa: E731
        if self._st(t).closed:
            self.pending = [step]
            return ("unwrap", t)
        return step()

    def execute(self, ins):
        pc = self.pc
        kind = ins[0]
        if kind == "create":
            self.objects.append(pc.exec_create(ins[1]))
        elif kind == "wrap":
            pc.exec_wrap(ins[1])
        elif kind == "unwrap":
            pc.exec_unwrap(ins[1])
        else:
            pc.exec_update(ins[1], ins[2], ins[3])


def run_trace(seed, index, bounds=SizeBounds(), disabled=frozenset()):
    """Run one trace; returns (steps checked, accepted, rejection id, incident, audit)."""
    trace_seed = f"{seed}/{index}"
    rng = random.Random(trace_seed)
    program = random_program(rng, bounds)
    d = _Driver(rng, program, bounds, Options(disabled=frozenset(disabled)))
    checked, rejected, incident = 0, None, None
    for n in range(bounds.max_steps):
        ins = d.next_instruction()
        try:
            d.execute(ins)
        except (Abort, _Skip):
            rejected = d.pc.diags[-1].obligation_id if d.pc.diags else "EXEC"
            break
        checked += 1
        v = check_global(d.pc.heap, d.pc.ev)
        if not v.ok:
            incident = Incident(index, trace_seed, n, v.g1_counterexample, v.g2_counterexample,
                                pretty_print(program), [s.describe() for s in d.pc.trace.steps])
            break
    audit = lemma_hypotheses_audit(d.pc.trace, d.pc.ev)
    return checked, rejected is None and incident is None, rejected, incident, audit


def _run_range(seed, lo, hi, bounds, disabled, deadline=None):
    report = SoundnessReport(seed=seed, disabled=tuple(sorted(disabled)))
    for i in range(lo, hi):
        if deadline is not None and time.perf_counter() > deadline:
            break
        checked, accepted, rejected, incident, audit = run_trace(seed, i, bounds, disabled)
        report.traces += 1
        report.steps_checked += checked
        report.accepted_traces += accepted
        if rejected is not None:
            report.rejections[rejected] = report.rejections.get(rejected, 0) + 1
        if incident is not None:
            report.incidents.append(incident)
        report.audit_failures += [f"trace {i}: {f}" for f in audit.failures]
    return report


def merge_reports(reports):
    """Combine shard reports; the result does not depend on shard order."""
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to merge")
    out = SoundnessReport(seed=reports[0].seed, disabled=reports[0].disabled)
    for r in reports:
        if r.seed != out.seed or r.disabled != out.disabled:
            raise ValueError("cannot merge reports of different runs")
        out.traces += r.traces
        out.steps_checked += r.steps_checked
        out.accepted_traces += r.accepted_traces
        for k, v in r.rejections.items():
            out.rejections[k] = out.rejections.get(k, 0) + v
        out.incidents += r.incidents
        out.audit_failures += r.audit_failures
        out.elapsed = max(out.elapsed, r.elapsed)
    out.incidents.sort(key=lambda i: i.trace)
    out.audit_failures.sort(key=lambda f: int(f.split()[1].rstrip(":")))
    return out


def soundness_fuzz(seed=0, n_traces=10_000, size_bounds=SizeBounds(), disabled=frozenset(),
                   workers=1, time_budget: Optional[float] = None):
    """Run ``n_traces`` random traces; deterministic in ``seed``.

    Trace ``i`` draws everything from the string seed ``f"{seed}/{i}"``, so
    sharding over ``workers`` processes yields the same report as one
    process.  ``time_budget`` (seconds, single worker only) truncates the run.
    """
    disabled = frozenset(disabled)
    start = time.perf_counter()
    if workers <= 1 or n_traces < 2 * workers:
        deadline = None if time_budget is None else start + time_budget
        report = _run_range(seed, 0, n_traces, size_bounds, disabled, deadline)
    else:
        from concurrent.futures import ProcessPoolExecutor

        cuts = [n_traces * k // workers for k in range(workers + 1)]
        with ProcessPoolExecutor(workers) as pool:
            futs = [pool.submit(_run_range, seed, lo, hi, size_bounds, disabled)
                    for lo, hi in zip(cuts, cuts[1:])]
            report = merge_reports(f.result() for f in futs)
    report.elapsed = time.perf_counter() - start
    return report


__all__ = [
    "SizeBounds", "Incident", "SoundnessReport", "random_program", "run_trace", "soundness_fuzz",
    "merge_reports",
]
