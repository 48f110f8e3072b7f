"""Acceptance suite: one test per primary criterion.

Each test prints a single ``PASS``/``FAIL`` line; the lines are repeated in
the pytest terminal summary so they survive without ``-s``.
"""

import random
import time

import pytest

import gen
from scol import corpus as C
from scol.checker import check_admissibility
from scol.diagnostics import OBLIGATIONS
from scol.evaluation import Evaluator
from scol.fuzz import soundness_fuzz
from scol.oracle import global_validity_per_step
from scol.runner import RunConfig, check_source, run_corpus, token_overhead
from scol.values import Ref

FUZZ_SEED = 20261014
FUZZ_TRACES = 10_000

LINES = []


def record(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def _not_raised():
    """Ids that no source program can trigger (checked separately below)."""
    return {"ALLOC"}


def test_corpus_soundness():
    t0 = time.perf_counter()
    bad = []
    snaps = 0
    for name in C.NAMES:
        res = check_source(C.read_source(f"{name}.scol"), name, RunConfig(oracle_every_step=True))
        per_step = global_validity_per_step(res.trace, res.evaluator) if res.trace else []
        snaps += len(per_step)
        if res.status != "pass" or res.diagnostics or not per_step or not all(v.ok for v in per_step):
            bad.append(name)
    dt = time.perf_counter() - t0
    record("corpus soundness", not bad and dt < 10,
           f"{len(C.NAMES) - len(bad)}/{len(C.NAMES)} clean, G1 and G2 at {snaps} snapshots, {dt:.2f}s (< 10s)")


def test_mutant_kill():
    summary = run_corpus()
    mutants = [r for r in summary.rows if r.kind == "mutant"]
    killed = [r for r in mutants if r.ok]
    missing = set(OBLIGATIONS) - summary.covered_ids() - _not_raised()
    record("mutant kill", len(killed) == len(mutants) and not missing and summary.ok,
           f"{len(killed)}/{len(mutants)} mutants fail with their expected id; "
           f"{len(summary.covered_ids())} ids covered, missing {sorted(missing) or 'none'}")


def test_alloc_check_is_live(monkeypatch):
    """ALLOC guards the allocator, so it is exercised by breaking the allocator."""
    from scol.heap import Heap

    real = Heap.allocate

    def broken(self, cls):
        r = real(self, cls)
        self.set(r, "closed", True)
        return r

    monkeypatch.setattr(Heap, "allocate", broken)
    res = check_source(C.read_source("observer.scol"), "observer")
    assert res.obligation_ids == ["ALLOC"]


@pytest.fixture(scope="module")
def fuzz_clean():
    return soundness_fuzz(FUZZ_SEED, FUZZ_TRACES)


def test_fuzz_soundness(fuzz_clean):
    r = fuzz_clean
    record("fuzz soundness", r.ok and not r.incidents and not r.audit_failures and r.elapsed < 60,
           f"seed {r.seed}, {r.traces} traces, {r.steps_checked} steps, {len(r.incidents)} incidents, "
           f"{len(r.audit_failures)} audit failures, {r.elapsed:.1f}s (< 60s)")


def test_harness_sensitivity():
    r = soundness_fuzz(FUZZ_SEED, FUZZ_TRACES, disabled=frozenset({"UPDATE-GUARD"}))
    first = r.incidents[0] if r.incidents else None
    record("harness sensitivity", len(r.incidents) >= 1,
           f"UPDATE-GUARD disabled: {len(r.incidents)} incidents in {r.traces} traces"
           + (f", first in trace {first.trace}" if first else ""))


def test_read_set_soundness():
    rng = random.Random("read-set")
    ev = Evaluator(gen.node_program())
    pairs = trials = violations = 0
    while pairs < 1000:
        trials += 1
        bad = gen.read_set_trial(rng, ev, gen.node_program())
        if bad is None:
            continue
        pairs += 1
        violations += len(bad)
    record("read-set soundness", violations == 0,
           f"{pairs} pairs ({trials} drawn), {violations} value changes from outside perturbations")


def _clock_trace(res):
    tr = res.trace
    ticks, i, steps = [], 0, tr.steps
    while i < len(steps):
        s = steps[i]
        if s.kind == "call" and s.method == "tick":
            j = i + 1
            while not (steps[j].kind == "return" and steps[j].depth == s.depth and steps[j].method == "tick"):
                j += 1
            ticks.append(steps[i:j + 1])
            i = j
        i += 1
    return ticks


def test_guard_semantics():
    res = check_source(C.read_source("master_clock.scol"), "master_clock", RunConfig(oracle_every_step=True))
    ticks = _clock_trace(res)
    problems = []
    for body in ticks:
        heap = res.trace.snapshots[body[-1].post]
        clocks = [r for r in heap.refs() if r != Ref(0) and heap.class_of(r) == "CLOCK"]
        if any(s.kind == "unwrap" and s.target in clocks for s in body):
            problems.append("slave unwrapped in tick")
        for c in clocks:
            if not heap.state(c).closed or res.evaluator.invariant(heap, c) is not True:
                problems.append(f"{c!r} not closed with a true invariant")
    mut = check_source(C.mutant_source(C.mutant("master_clock_reset_no_open")), "reset_no_open")
    ok = res.status == "pass" and len(ticks) == 3 and not problems and mut.obligation_ids == ["UPDATE-GUARD"]
    record("guard semantics", ok,
           f"{len(ticks)} ticks with no slave unwrap, slaves closed and valid: {not problems}; "
           f"reset without opening slaves -> {mut.obligation_ids}; corrected reset -> {res.status}")


def test_defaults_equivalence():
    full = check_source(C.read_source("observer.scol"), "observer",
                        RunConfig(defaults_enabled=False, oracle_every_step=True))
    lean = check_source(C.read_source(f"{C.DEFAULTS_VARIANT}.scol"), C.DEFAULTS_VARIANT,
                        RunConfig(oracle_every_step=True))
    kinds_full = [s.kind for s in full.trace.steps]
    kinds_lean = [s.kind for s in lean.trace.steps]
    o_full = token_overhead(C.read_source("observer.scol"))[2]
    o_lean = token_overhead(C.read_source(f"{C.DEFAULTS_VARIANT}.scol"))[2]
    ok = full.status == lean.status == "pass" and kinds_full == kinds_lean and o_lean < o_full
    record("defaults equivalence", ok,
           f"both {full.status}/{lean.status}, {len(kinds_full)} identical step kinds: "
           f"{kinds_full == kinds_lean}; overhead {o_lean:.3f} with defaults < {o_full:.3f} without")


def _final_heap(res):
    return res.trace.snapshots[-1]


def test_admissibility_precision():
    notes = []
    a1 = check_source(C.mutant_source(C.mutant("observer_reads_list")), "reads_list")
    h = _final_heap(a1)
    subj = next(r for r in h.refs() if r != Ref(0) and h.class_of(r) == "SUBJECT")
    lst = h.state(subj).attrs["subscribers"]
    ok1 = [d.obligation_id for d in a1.diagnostics] == ["A1"] and f"reads {lst!r}" in a1.diagnostics[0].message
    notes.append(f"A1 {a1.obligation_ids} names list {lst!r}: {ok1}")

    a2 = check_source(C.mutant_source(C.mutant("observer_unaware_subject")), "unaware_subject")
    h = _final_heap(a2)
    obs = next(r for r in h.refs() if r != Ref(0) and h.class_of(r) == "OBSERVER")
    s = h.state(obs).attrs["subject"]
    ok2 = [d.obligation_id for d in a2.diagnostics] == ["A2"] and f"subject {s!r}" in a2.diagnostics[0].message
    notes.append(f"A2 {a2.obligation_ids} names subject {s!r}: {ok2}")

    extra = 0
    checked = 0
    for name in ("observer", "iterator"):
        res = check_source(C.read_source(f"{name}.scol"), name)
        extra += len(res.diagnostics)
        for st in res.trace.steps:
            if st.kind == "wrap":
                checked += 1
                extra += len(check_admissibility(res.program, res.trace.snapshots[st.post],
                                                 st.target, evaluator=res.evaluator))
    notes.append(f"observer and iterator: {extra} diagnostics over {checked} wrapped states")
    record("admissibility precision", ok1 and ok2 and extra == 0, "; ".join(notes))
