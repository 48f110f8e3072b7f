import pytest
from hypothesis import given, strategies as st

from scol import corpus as C
from scol.checker import HEAP_KINDS, Abort, Options, ProtocolChecker, check_admissibility
from scol.heap import is_wrapped, serialize
from scol.runner import RunConfig, check_source, load
from scol.syntax.checks import parse_program
from scol.values import VOID

SIMPLE = """
class T create make
feature
  n: INTEGER
  peer: T
  make do end
  bump
    require wrapped and False
    modify Current
    do
      unwrap
      n := n + 1
      wrap
    end
  poke (t: T)
    modify Current
    do
      t.n := 5
    end
invariant
  n >= 0
end
"""


def program(src=SIMPLE, defaults=False):
    p, notes = load(src, defaults=defaults)
    assert p is not None, notes
    return p


def checker(src=SIMPLE, **opts):
    return ProtocolChecker(program(src), Options(**opts))


def ids(pc):
    return [d.obligation_id for d in pc.diags]


def test_create_single_step():
    pc = checker()
    x = pc.exec_create("T")
    assert len(pc.trace.steps) == 1 and pc.diags == []
    assert not is_wrapped(pc.heap, x)


def test_create_then_wrap():
    pc = checker()
    x = pc.exec_create("T")
    pc.exec_wrap(x)
    assert is_wrapped(pc.heap, x) and pc.trace.heap_update_kinds() == ["create", "wrap"]


def test_unwrap_changes_only_closed():
    pc = checker()
    x = pc.exec_create("T")
    pc.exec_wrap(x)
    before = pc.heap.snapshot()
    pc.exec_unwrap(x)
    assert pc.heap.changed_objects(before) == {x}
    assert before.state(x).with_value("closed", False) == pc.heap.state(x)


def test_unwrap_open_fails():
    pc = checker()
    x = pc.exec_create("T")
    with pytest.raises(Abort):
        pc.exec_unwrap(x)
    assert ids(pc) == ["UNWRAP-PRE"]


def test_unwrap_with_closed_owner_fails():
    pc = checker()
    x, p = pc.exec_create("T"), pc.exec_create("T")
    pc.exec_wrap(x)
    pc.exec_update(p, "owns", frozenset({x}))
    pc.exec_wrap(p)
    with pytest.raises(Abort):
        pc.exec_unwrap(x)
    assert ids(pc) == ["UNWRAP-PRE"] and "owner" in pc.diags[0].message


def test_update_without_observers():
    pc = checker()
    x = pc.exec_create("T")
    pc.exec_update(x, "n", 9)
    assert pc.diags == [] and pc.heap.state(x).attrs["n"] == 9


def test_update_closed_fails():
    pc = checker()
    x = pc.exec_create("T")
    pc.exec_wrap(x)
    with pytest.raises(Abort):
        pc.exec_update(x, "n", 1)
    assert ids(pc) == ["UPDATE-OPEN"]


def test_wrap_false_invariant():
    pc = checker()
    x = pc.exec_create("T")
    pc.exec_update(x, "n", -1)
    with pytest.raises(Abort):
        pc.exec_wrap(x)
    assert ids(pc) == ["WRAP-PRE-INV"]


def test_call_false_precondition_skips_body():
    pc = checker()
    x = pc.exec_create("T")
    pc.exec_wrap(x)
    pc.options = Options(keep_going=True)
    pc.exec_call(x, "bump", [])
    assert ids(pc) == ["CALL-PRE"] and pc.heap.state(x).attrs["n"] == 0
    assert [s.kind for s in pc.trace.steps] == ["create", "wrap", "call"]


def test_frame_violation():
    pc = checker()
    x, t = pc.exec_create("T"), pc.exec_create("T")
    with pytest.raises(Abort):
        pc.exec_call(x, "poke", [t])
    assert ids(pc) == ["FRAME"]


def observer_checker(**opts):
    return ProtocolChecker(program(C.read_source("observer.scol"), defaults=True), Options(**opts))


def test_subject_make_owns_list():
    pc = observer_checker()
    s = pc.exec_create("SUBJECT")
    pc.exec_call(s, "make", [1])
    lst = pc.heap.state(s).attrs["subscribers"]
    assert pc.diags == [] and is_wrapped(pc.heap, s)
    assert pc.heap.state(lst).owner == s and lst in pc.heap.state(s).owns


def test_observer_make_registers():
    pc = observer_checker()
    s = pc.exec_create("SUBJECT")
    pc.exec_call(s, "make", [1])
    o = pc.exec_create("OBSERVER")
    pc.exec_call(o, "make", [s])
    h = pc.heap
    assert pc.diags == [] and is_wrapped(h, o) and is_wrapped(h, s) and o in h.state(s).observers
    assert check_admissibility(pc.program, h, o, evaluator=pc.ev) == []


def test_a2_at_direct_state():
    """Subject unaware of its observer, invariant true: exactly one A2."""
    src = C.mutant_source(C.mutant("observer_unaware_subject"))
    pc2 = ProtocolChecker(program(src, defaults=True))
    s2 = pc2.exec_create("SUBJECT")
    pc2.exec_call(s2, "make", [1])
    o2 = pc2.exec_create("OBSERVER")
    for a, v in (("subject", s2), ("cache", 1), ("subjects", frozenset({s2}))):
        pc2.heap.set(o2, a, v)
    d = check_admissibility(pc2.program, pc2.heap, o2, evaluator=pc2.ev)
    assert [x.obligation_id for x in d] == ["A2"] and repr(s2) in d[0].message


def test_master_clock_guard_instances():
    pc = ProtocolChecker(program(C.read_source("master_clock.scol"), defaults=True))
    m = pc.exec_create("MASTER")
    pc.exec_call(m, "make", [])
    c = pc.exec_create("CLOCK")
    pc.exec_call(c, "make", [m])
    for _ in range(3):
        pc.exec_call(m, "tick", [])
    c_state = pc.heap.state(c)
    assert pc.diags == [] and c_state.closed
    assert not any(s.kind == "unwrap" and s.target == c for s in pc.trace.steps)
    pc.exec_call(c, "sync", [])
    assert pc.heap.state(c).attrs["local_time"] == 3
    pc.exec_unwrap(m)
    with pytest.raises(Abort):
        pc.exec_update(m, "time", 0)
    assert ids(pc) == ["UPDATE-GUARD"] and repr(c) in pc.diags[0].message


def test_empty_entry():
    res = check_source("entry main do end")
    assert res.status == "pass" and res.trace.steps == []


def test_stale_observer_driver():
    src = C.read_source("observer.scol").replace(
        "    s.update (5)\n",
        "    s.unwrap\n    s.observers := {}\n    s.wrap\n    s.update (5)\n")
    res = check_source(src, "stale.scol")
    assert res.obligation_ids in (["UPDATE-GUARD"], ["A3"])


# -- properties over corpus traces ----------------------------------------------


def corpus_results():
    out = []
    for n in (*C.NAMES, C.DEFAULTS_VARIANT):
        res = check_source(C.read_source(f"{n}.scol"), n)
        assert res.status == "pass", (n, res.diagnostics)
        out.append((n, res))
    return out


CORPUS = corpus_results()


@pytest.mark.parametrize("name,res", CORPUS, ids=[n for n, _ in CORPUS])
def test_every_mutation_is_one_heap_step(name, res):
    snaps, steps = res.trace.snapshots, res.trace.steps
    heap_steps = [s for s in steps if s.kind in HEAP_KINDS]
    assert len(heap_steps) == len(snaps) - 1
    for i, s in enumerate(heap_steps):
        assert (s.pre, s.post) == (i, i + 1)
    for s in steps:
        if s.kind not in HEAP_KINDS:
            assert s.pre == s.post


@pytest.mark.parametrize("name,res", CORPUS, ids=[n for n, _ in CORPUS])
def test_frame_soundness(name, res):
    tr = res.trace
    for s in tr.steps:
        if s.kind in HEAP_KINDS and s.depth > 0:
            changed = tr.snapshots[s.post].changed_objects(tr.snapshots[s.pre])
            if s.kind == "create":
                assert changed == {s.target}
            else:
                assert changed <= s.write_set, (s.describe(), changed, s.write_set)


# -- random protocol states ------------------------------------------------------


def _random_state(rng):
    """A checker over SIMPLE with a few objects built through checked steps."""
    pc = checker()
    objs = [pc.exec_create("T") for _ in range(rng.randint(2, 5))]
    for o in objs:
        pc.exec_update(o, "n", rng.randint(0, 3))
        pc.exec_update(o, "peer", rng.choice([VOID] + objs))
    for o in objs:
        if rng.random() < 0.5:
            pc.exec_wrap(o)
    return pc, objs


@given(st.randoms(use_true_random=False))
def test_wrap_then_unwrap_restores(rng):
    pc, objs = _random_state(rng)
    x = rng.choice([o for o in objs if not pc.heap.state(o).closed] or [pc.exec_create("T")])
    owned = [o for o in objs if o != x and is_wrapped(pc.heap, o) and rng.random() < 0.5]
    pc.exec_update(x, "owns", frozenset(owned))
    before = pc.heap.state(x)
    others = {o: pc.heap.state(o) for o in pc.heap.refs() if o != x}
    pc.exec_wrap(x)
    pc.exec_unwrap(x)
    after = pc.heap.state(x)
    assert (after.closed, after.owner) == (before.closed, before.owner)
    assert after == before
    for o, s in others.items():
        now = pc.heap.state(o)
        assert now == s or (o in owned and now == s.with_value("owner", x))
    assert pc.diags == []


@given(st.randoms(use_true_random=False))
def test_same_value_update_is_identity(rng):
    pc, objs = _random_state(rng)
    openers = [o for o in objs if not pc.heap.state(o).closed]
    if not openers:
        return
    x = rng.choice(openers)
    a = rng.choice(["n", "peer", "owns", "subjects", "observers"])
    before = serialize(pc.heap)
    pc.exec_update(x, a, pc.heap.state(x).get(a))
    assert serialize(pc.heap) == before and pc.diags == []


def test_a4_mutant_fails_statically():
    res = check_source(C.mutant_source(C.mutant("observer_inv_mentions_wrapped")), "m.scol",
                       RunConfig())
    assert res.obligation_ids == ["A4"] and res.trace is None


def test_parse_failure_is_error_status():
    res = check_source("class ", "bad.scol")
    assert res.status == "error" and res.exit_code == 2


def test_keep_going_reports_more_than_one():
    src = parse_program(SIMPLE)
    pc = ProtocolChecker(src, Options(keep_going=True))
    x = pc.exec_create("T")
    pc.exec_unwrap(x)
    pc.exec_wrap(x)
    pc.exec_wrap(x)
    assert ids(pc) == ["UNWRAP-PRE", "WRAP-PRE-OPEN"]
    assert pc.diags[1].tainted
