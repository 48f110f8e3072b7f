"""Random expressions and heaps over a fixed schema, shared by several tests."""

from __future__ import annotations

import random

from scol.evaluation import Env, EvalError, Evaluator
from scol.heap import Heap, schema_of
from scol.syntax import ast as A
from scol.syntax.checks import parse_program
from scol.values import VOID, Ref

NODE_SOURCE = """
class NODE create make
feature
  a, b: INTEGER
  flag: BOOLEAN
  next, other: NODE
  items: SEQUENCE [NODE]

  function total: INTEGER read {Current} is a + b end
  function peer: INTEGER read {Current, next} is if next = Void then 0 else next.a + a end end
  function owned_flags: BOOLEAN read {Current} + owns is all o in owns : o.flag end

  make
    do
    end
invariant
  a >= 0
end
"""

REF_VARS = ("x", "y")


def node_program():
    p = parse_program(NODE_SOURCE, "node.scol")
    assert not isinstance(p, list), p
    return p


# -- expressions -------------------------------------------------------------------


def _ref(rng, d):
    r = rng.random()
    if d <= 0 or r < 0.45:
        return rng.choice([A.CurrentRef(), A.Name("x"), A.Name("y"), A.Name("next")])
    return A.Member(_ref(rng, d - 1), rng.choice(("next", "other")))


def _int(rng, d):
    r = rng.random()
    if d <= 0 or r < 0.25:
        return A.IntLit(rng.randint(-3, 5))
    if r < 0.55:
        return A.Member(_ref(rng, d - 1), rng.choice(("a", "b", "total", "peer")))
    if r < 0.7:
        return A.Member(_set(rng, d - 1), "count")
    if r < 0.85:
        return A.Binary(rng.choice(("+", "-", "*")), _int(rng, d - 1), _int(rng, d - 1))
    return A.IfExpr(_bool(rng, d - 1), _int(rng, d - 1), _int(rng, d - 1))


def _set(rng, d):
    r = rng.random()
    if d <= 0 or r < 0.5:
        return A.Member(_ref(rng, max(0, d - 1)), rng.choice(("owns", "subjects", "observers")))
    if r < 0.7:
        return A.SetLit(tuple(_ref(rng, d - 1) for _ in range(rng.randint(0, 2))))
    if r < 0.8:
        return A.Member(A.Member(_ref(rng, d - 1), "items"), "range")
    return A.Binary(rng.choice(("+", "-", "*")), _set(rng, d - 1), _set(rng, d - 1))


def _bool(rng, d, bound=()):
    r = rng.random()
    if d <= 0 or r < 0.15:
        return rng.choice([A.BoolLit(True), A.BoolLit(False), A.Member(_ref(rng, 0), "flag")])
    if r < 0.3:
        return A.Binary(rng.choice(("=", "/=", "<", "<=", ">", ">=")), _int(rng, d - 1), _int(rng, d - 1))
    if r < 0.4:
        return A.Binary(rng.choice(("=", "/=")), _ref(rng, d - 1), _ref(rng, d - 1))
    if r < 0.5:
        return A.Member(_set(rng, d - 1), "has", (_ref(rng, d - 1),))
    if r < 0.6:
        return A.Member(_ref(rng, d - 1), rng.choice(("open", "wrapped", "free", "owned_flags")))
    if r < 0.75:
        return A.Binary(rng.choice(("and", "or", "implies")), _bool(rng, d - 1), _bool(rng, d - 1))
    if r < 0.82:
        return A.Unary("not", _bool(rng, d - 1))
    v = f"q{d}"
    body = rng.choice([
        A.Member(A.Name(v), "flag"),
        A.Binary(">=", A.Member(A.Name(v), "a"), _int(rng, 0)),
        A.Binary("=", A.Name(v), _ref(rng, 0)),
    ])
    return A.Quant(rng.choice(("all", "some")), v, _set(rng, d - 1), body)


GENERATORS = {"INTEGER": _int, "BOOLEAN": _bool, "SET": _set, "REF": _ref}


def random_expr(rng, depth=3, kind=None):
    kind = kind or rng.choice(sorted(GENERATORS))
    return GENERATORS[kind](rng, depth)


# -- heaps ---------------------------------------------------------------------------


def random_value(rng, typ, refs):
    if typ == "INTEGER":
        return rng.randint(-2, 4)
    if typ == "BOOLEAN":
        return rng.random() < 0.5
    if typ.startswith("SEQUENCE"):
        return tuple(rng.choice(refs) for _ in range(rng.randint(0, 3)))
    if typ.startswith("SET"):
        return frozenset(rng.sample(refs, rng.randint(0, min(3, len(refs)))))
    return rng.choice([VOID] + refs)


def random_heap(rng, program, n=None):
    """Heap of ``n`` NODE objects with arbitrary (possibly inconsistent) state."""
    h = Heap(schema_of(program))
    refs = [h.allocate("NODE") for _ in range(n or rng.randint(1, 5))]
    for r in refs:
        for name, typ in h.schema["NODE"].items():
            h.set(r, name, random_value(rng, typ, refs))
        for g in ("owns", "subjects", "observers"):
            h.set(r, g, frozenset(rng.sample(refs, rng.randint(0, min(2, len(refs))))))
        h.set(r, "closed", rng.random() < 0.5)
        h.set(r, "owner", rng.choice([VOID] + refs))
    return h, refs


FIELDS = ("closed", "owner", "owns", "subjects", "observers")


def perturb(rng, h, victim, refs):
    """Change one field of ``victim`` to a different random value."""
    s = h.state(victim)
    names = list(FIELDS) + sorted(s.attrs)
    for _ in range(20):
        name = rng.choice(names)
        if name == "closed":
            value = not s.closed
        elif name == "owner":
            value = rng.choice([VOID] + refs)
        elif name in FIELDS:
            value = frozenset(rng.sample(refs, rng.randint(0, min(3, len(refs)))))
        else:
            value = random_value(rng, h.schema["NODE"][name], refs)
        if value != s.get(name) or type(value) is not type(s.get(name)):
            h.set(victim, name, value)
            return name
    return None


def env_for(rng, refs):
    return Env(rng.choice(refs), {v: rng.choice([VOID] + refs) for v in REF_VARS})


def outcome(ev, h, env, e):
    try:
        return ("ok", ev.eval(h, env, e))
    except EvalError as exc:
        return ("err", type(exc).__name__)


def read_set_trial(rng, ev, program):
    """One (expression, heap) pair: None if evaluation fails, else a list of
    (victim, field) perturbations that changed the value (empty: sound)."""
    h, refs = random_heap(rng, program)
    env = env_for(rng, refs)
    e = random_expr(rng, rng.randint(1, 4))
    try:
        value, reads = ev.eval_with_reads(h, env, e)
    except EvalError:
        return None
    outside = [r for r in refs if r not in reads]
    bad = []
    for _ in range(3):
        if not outside:
            break
        h2 = h.snapshot()
        victims = rng.sample(outside, rng.randint(1, len(outside)))
        changed = [(v, perturb(rng, h2, v, refs)) for v in victims]
        got = outcome(ev, h2, env, e)
        if got != ("ok", value) or type(got[1]) is not type(value):
            bad.append((e, changed, value, got))
    return bad


def new_evaluator(program=None):
    return Evaluator(program or node_program())


def make_ref(i):
    return Ref(i)
