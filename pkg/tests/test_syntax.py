import random
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

import gen
from scol import corpus as C
from scol.syntax import ast as A
from scol.syntax.checks import check_syntactic_admissibility, parse_program
from scol.syntax.defaults import desugar_defaults
from scol.syntax.lexer import tokenize
from scol.syntax.parser import parse_expression
from scol.syntax.printer import expr_str, pretty_print

ALL_SOURCES = [f"{n}.scol" for n in (*C.NAMES, C.DEFAULTS_VARIANT)] + [
    "motivating/observer_plain.scol", "motivating/iterator_plain.scol"]


def load(rel):
    p = parse_program(C.read_source(rel), rel)
    assert not isinstance(p, list), p
    return p


def test_empty_source():
    p = parse_program("")
    assert p == A.Program()


def test_duplicate_class_reported_at_second():
    d = parse_program("class A end\nclass A end")
    assert isinstance(d, list) and d[0].obligation_id == "NAME"
    assert "duplicate class name" in d[0].message and d[0].line == 2


def test_plain_observer_shape():
    p = load("motivating/observer_plain.scol")
    assert [c.name for c in p.classes] == ["SUBJECT", "OBSERVER"]
    obs = p.classes[1]
    assert len(obs.invariant) == 1 and expr_str(obs.invariant[0]) == "cache = subject.value"


@pytest.mark.parametrize("rel", ALL_SOURCES)
def test_sources_load_and_print_idempotently(rel):
    p = load(rel)
    once = pretty_print(p)
    again = parse_program(once)
    assert again == p
    assert pretty_print(again) == once


@pytest.mark.parametrize("rel", ALL_SOURCES)
def test_parse_deterministic(rel):
    src = C.read_source(rel)
    assert parse_program(src) == parse_program(src)


@pytest.mark.parametrize("rel", ALL_SOURCES)
def test_desugar_idempotent_on_corpus(rel):
    p = load(rel)
    once = desugar_defaults(p)
    assert desugar_defaults(once) == once


def test_desugar_disabled_is_identity():
    p = load("observer.scol")
    assert desugar_defaults(p, enabled=False) is p


def test_desugar_public_procedure_of_plain_observer():
    p = desugar_defaults(load("motivating/observer_plain.scol"))
    subject = p.classes[0]
    update = next(m for m in subject.methods if m.name == "update")
    assert A.Member(A.CurrentRef(), "wrapped") in update.require
    assert isinstance(update.body[0], A.Unwrap) and isinstance(update.body[-1], A.Wrap)
    assert update.modify == (A.CurrentRef(),)


def test_desugar_pins_unmentioned_sets():
    p = desugar_defaults(load("motivating/observer_plain.scol"))
    inv = [expr_str(e) for e in p.classes[1].invariant]
    assert "owns = {}" in inv


def test_observer_invariants_have_no_a4():
    assert check_syntactic_admissibility(load("observer.scol")) == []


def test_a4_direct_and_through_functions():
    direct = parse_program("class A create make feature\n make do end\ninvariant\n  Current.closed\nend")
    d = check_syntactic_admissibility(direct)
    assert [x.obligation_id for x in d] == ["A4"] and d[0].line == 4
    chain = parse_program(
        "class A create make feature\n"
        "  function f (z: A): BOOLEAN read {z} is g (z) end\n"
        "  function g (z: A): BOOLEAN read {z} is z.owner = Void end\n"
        "  make do end\n"
        "invariant\n  f (Current)\nend")
    d = check_syntactic_admissibility(chain)
    assert [x.obligation_id for x in d] == ["A4"] and "A.f -> A.g" in d[0].message


def test_lexer_ends_with_eof():
    toks = tokenize("a := 1")
    assert toks[-1].kind == "eof"


def test_old_outside_ensure_rejected():
    d = parse_program("class A create make feature\n  a: INTEGER\n make require old a = 0 do end\nend")
    assert isinstance(d, list)


# -- properties ------------------------------------------------------------------


@given(st.randoms(use_true_random=False), st.sampled_from(sorted(gen.GENERATORS)))
def test_expression_print_parse_roundtrip(rng, kind):
    e = gen.random_expr(rng, 4, kind)
    text = expr_str(e)
    back = parse_expression(text)
    assert expr_str(back) == text
    assert expr_str(parse_expression(expr_str(back))) == text


def _a4_source(rng):
    """A class with three functions forming a random call graph, some reading a
    forbidden ghost field, and an invariant of random calls.

    ``open``, ``free`` and ``wrapped`` are abbreviations over closed and owner,
    so they count as mentioning them."""
    n = 3
    reads = [rng.choice(["closed", "owner", "open", "wrapped", "flag", "flag"]) for _ in range(n)]
    calls = [rng.sample(range(n), rng.randint(0, 2)) for _ in range(n)]
    funcs = []
    for i in range(n):
        parts = [f"z.{reads[i]}" if reads[i] != "flag" else "z.flag"]
        parts += [f"f{j} (z)" for j in calls[i]]
        funcs.append(f"  function f{i} (z: A): BOOLEAN read {{z}} is {' and '.join(parts)} end")
    conj = [(rng.randrange(n), rng.random() < 0.3) for _ in range(rng.randint(1, 3))]
    inv = [f"  f{i} (Current)" if not direct else "  Current.owner = Void" for i, direct in conj]
    src = "class A create make\nfeature\n  flag: BOOLEAN\n" + "\n".join(funcs) + \
        "\n  make do end\ninvariant\n" + "\n".join(inv) + "\nend\n"

    def reaches(i):  # independent breadth-first expansion of the call graph
        seen, frontier = {i}, [i]
        while frontier:
            k = frontier.pop(0)
            if reads[k] != "flag":
                return True
            for j in calls[k]:
                if j not in seen:
                    seen.add(j)
                    frontier.append(j)
        return False

    expected = {6 + n + k for k, (i, direct) in enumerate(conj) if direct or reaches(i)}
    return src, expected


@given(st.randoms(use_true_random=False))
def test_a4_iff_breadth_first_reach(rng):
    src, expected = _a4_source(rng)
    p = parse_program(src)
    assert not isinstance(p, list), (p, src)
    flagged = {d.line for d in check_syntactic_admissibility(p)}
    assert flagged == expected, src


@given(st.randoms(use_true_random=False))
def test_desugar_idempotent_on_random_programs(rng):
    from scol.fuzz import random_program

    p = random_program(rng)
    once = desugar_defaults(p)
    assert desugar_defaults(once) == once


def test_random_fuzz_programs_check():
    from scol.fuzz import random_program
    from scol.syntax.checks import check_program

    rng = random.Random(7)
    for _ in range(50):
        p = random_program(rng)
        assert parse_program(pretty_print(p)) == replace(p)
        assert check_program(p) == []
