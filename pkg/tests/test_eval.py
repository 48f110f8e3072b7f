import random

import pytest
from hypothesis import given, strategies as st

import gen
from scol import corpus as C
from scol.evaluation import DepthExceeded, Env, EvalError, Evaluator, ReadClauseViolation, VoidDereference
from scol.heap import Heap, Overlay, schema_of, serialize
from scol.syntax import ast as A
from scol.syntax.checks import parse_program
from scol.syntax.parser import parse_expression
from scol.values import VOID

P = gen.node_program()


def ev():
    return Evaluator(P)


def node_heap(k=2):
    h = Heap(schema_of(P))
    return h, [h.allocate("NODE") for _ in range(k)]


def e(text):
    return parse_expression(text)


def test_vacuous_quantifier():
    h, (x, _) = node_heap()
    assert ev().eval(h, Env(x), e("all o in {} : False")) is True


def test_read_set_examples():
    h, (x, y) = node_heap()
    assert ev().read_set(h, Env(x, {"x": y}), e("x.a")) == {y}
    assert ev().read_set(h, Env(x), e("5")) == frozenset()


def test_read_set_through_function_read_clause():
    h, (x, a) = node_heap()
    h.set(x, "owns", frozenset({a}))
    h.set(x, "closed", True)
    assert ev().read_set(h, Env(a, {"x": x}), e("x.owned_flags")) == {x, a}


def test_read_clause_violation_is_rc():
    src = ("class N create make feature\n  a: INTEGER\n  next: N\n"
           "  function bad: INTEGER read {Current} is next.a end\n  make do end\nend")
    p = parse_program(src)
    h = Heap(schema_of(p))
    x, y = h.allocate("N"), h.allocate("N")
    h.set(x, "next", y)
    with pytest.raises(ReadClauseViolation):
        Evaluator(p).eval(h, Env(x), e("bad"))


def test_depth_bound():
    src = ("class N create make feature\n"
           "  function loop (k: INTEGER): INTEGER read {} is loop (k + 1) end\n  make do end\nend")
    p = parse_program(src)
    h = Heap(schema_of(p))
    x = h.allocate("N")
    with pytest.raises(DepthExceeded):
        Evaluator(p, depth_bound=50).eval(h, Env(x), e("loop (0)"))


def test_void_dereference_raises():
    h, (x, _) = node_heap()
    with pytest.raises(VoidDereference):
        ev().eval(h, Env(x), e("next.a"))


def _observer_heap():
    p = parse_program(C.read_source("observer.scol"))
    h = Heap(schema_of(p))
    s, o = h.allocate("SUBJECT"), h.allocate("OBSERVER")
    h.set(s, "value", 5)
    h.set(s, "observers", frozenset({o}))
    h.set(o, "subject", s)
    h.set(o, "cache", 5)
    h.set(o, "subjects", frozenset({s}))
    return p, h, s, o


def test_observer_invariant_true_then_false_after_edit():
    p, h, s, o = _observer_heap()
    evaluator = Evaluator(p)
    assert evaluator.invariant(h, o) is True
    h.set(s, "value", 7)
    assert evaluator.invariant(h, o) is False
    assert evaluator.first_false_conjunct(h, o)[0] == 0


def test_builtin_guards():
    p, h, s, o = _observer_heap()
    evaluator = Evaluator(p)
    assert evaluator.eval_guard(h, "SUBJECT", "observers", s, frozenset({o}), o) is True
    assert evaluator.eval_guard(h, "SUBJECT", "observers", s, frozenset(), o) is False
    for y in (frozenset(), frozenset({o, s})):
        assert evaluator.eval_guard(h, "SUBJECT", "owns", s, y, o) is True
        assert evaluator.eval_guard(h, "SUBJECT", "subjects", s, y, o) is True


def test_default_guard_when_inv_does_not_read_x():
    p, h, s, o = _observer_heap()
    other = h.allocate("SUBJECT")
    evaluator = Evaluator(p)
    # o's invariant does not read `other`, so its value is unchanged: guard holds
    assert evaluator.invariant(h, o) == evaluator.invariant(Overlay(h, other, "value", 99), o)
    assert evaluator.eval_guard(h, "SUBJECT", "value", other, 99, o) is True
    assert evaluator.eval_guard(h, "SUBJECT", "value", s, 99, o) is False


def _instr(text, decl="  a: INTEGER\n  next: N\n"):
    src = (f"class N create make feature\n{decl}"
           f"  m (x: N)\n    modify Current\n    do\n      {text}\n    end\n  make do end\nend")
    p = parse_program(src)
    assert not isinstance(p, list), p
    return p, p.classes[0].methods[0].body[0]


def test_write_set_update_and_wrap():
    p, ins = _instr("x.a := 1")
    h = Heap(schema_of(p))
    c, x = h.allocate("N"), h.allocate("N")
    assert Evaluator(p).write_set(h, Env(c, {"x": x}), ins) == {x}
    p, ins = _instr("x.wrap")
    assert Evaluator(p).write_set(h, Env(c, {"x": x}), ins) == {x}


def test_write_set_of_call_is_callee_frame():
    p, ins = _instr("x.m (x)")
    h = Heap(schema_of(p))
    c, x, a, b = (h.allocate("N") for _ in range(4))
    h.set(x, "owns", frozenset({a, b}))
    for r in (a, b, x):
        h.set(r, "closed", True)
    assert Evaluator(p).write_set(h, Env(c, {"x": x}), ins) == {x, a, b}


# -- properties ------------------------------------------------------------------


@given(st.randoms(use_true_random=False))
def test_eval_pure(rng):
    evaluator = ev()
    h, refs = gen.random_heap(rng, P)
    before = serialize(h)
    env = gen.env_for(rng, refs)
    expr = gen.random_expr(rng, 3)
    gen.outcome(evaluator, h, env, expr)
    try:
        evaluator.read_set(h, env, expr)
    except EvalError:
        pass
    x, o = rng.choice(refs), rng.choice(refs)
    try:
        evaluator.eval_guard(h, "NODE", "a", x, rng.randint(-2, 4), o)
    except EvalError:
        pass
    assert serialize(h) == before


@given(st.randoms(use_true_random=False))
def test_read_set_soundness(rng):
    assert gen.read_set_trial(rng, ev(), P) in (None, [])


def test_read_set_perturbation_has_teeth():
    """Perturbing an object inside the read set does sometimes change the value."""
    rng = random.Random(11)
    evaluator = ev()
    changed = 0
    for _ in range(300):
        h, refs = gen.random_heap(rng, P)
        env = gen.env_for(rng, refs)
        expr = gen.random_expr(rng, 2, "INTEGER")
        try:
            value, reads = evaluator.eval_with_reads(h, env, expr)
        except EvalError:
            continue
        inside = [r for r in reads if r != VOID]
        if not inside:
            continue
        h2 = h.snapshot()
        gen.perturb(rng, h2, rng.choice(inside), refs)
        if gen.outcome(evaluator, h2, env, expr) != ("ok", value):
            changed += 1
    assert changed > 10


@given(st.randoms(use_true_random=False))
def test_quantifier_duality(rng):
    evaluator = ev()
    h, refs = gen.random_heap(rng, P)
    env = gen.env_for(rng, refs)
    dom = gen.random_expr(rng, 1, "SET")
    body = rng.choice([e("q.flag"), e("q.a >= 1"), e("q = x"), e("q.owns.has (Current)")])
    all_ = A.Quant("all", "q", dom, body)
    some_not = A.Quant("some", "q", dom, A.Unary("not", body))
    assert gen.outcome(evaluator, h, env, all_) == (
        lambda r: (r[0], not r[1]) if r[0] == "ok" else r)(gen.outcome(evaluator, h, env, some_not))


@given(st.randoms(use_true_random=False))
def test_default_guard_same_value_is_true(rng):
    p, h0, s, o = _observer_heap()
    evaluator = Evaluator(p)
    h0.set(s, "value", rng.randint(-3, 8))
    h0.set(o, "cache", rng.randint(-3, 8))
    cur = h0.state(s).attrs["value"]
    assert evaluator.eval_guard(h0, "SUBJECT", "value", s, cur, o) is True
