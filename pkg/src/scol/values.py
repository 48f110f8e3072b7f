"""Runtime values.

integers and booleans are Python ``int``/``bool``; references are ``Ref``;
sets of references are ``frozenset``; sequences are ``tuple``.
"""

from __future__ import annotations



class Ref:
    """Immutable object reference; ``Ref(0)`` is Void."""

    __slots__ = ("id",)

    def __init__(self, id: int):
        object.__setattr__(self, "id", id)

    def __setattr__(self, name, value):
        raise AttributeError("Ref is immutable")

    def __hash__(self):
        return self.id

    def __eq__(self, other):
        return self.__class__ is other.__class__ and self.id == other.id

    def __ne__(self, other):
        return not self.__eq__(other)

    def __lt__(self, other):
        return self.id < other.id

    def __le__(self, other):
        return self.id <= other.id

    def __gt__(self, other):
        return self.id > other.id

    def __ge__(self, other):
        return self.id >= other.id

    def __reduce__(self):
        return (Ref, (self.id,))

    def __repr__(self):
        return "Void" if self.id == 0 else f"#{self.id}"


VOID = Ref(0)
EMPTY = frozenset()


def default_value(type_name):
    """Value a fresh attribute of the given static type starts with."""
    if type_name == "INTEGER":
        return 0
    if type_name == "BOOLEAN":
        return False
    if type_name.startswith("SET"):
        return EMPTY
    if type_name.startswith("SEQUENCE"):
        return ()
    return VOID


def kind_of(v):
    if isinstance(v, bool):
        return "BOOLEAN"
    if isinstance(v, int):
        return "INTEGER"
    if isinstance(v, Ref):
        return "REF"
    if isinstance(v, frozenset):
        return "SET"
    if isinstance(v, tuple):
        return "SEQUENCE"
    raise TypeError(f"not a value: {v!r}")


def fmt(v):
    """Canonical text for a value."""
    if isinstance(v, bool):
        return "True" if v else "False"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Ref):
        return repr(v)
    if isinstance(v, frozenset):
        return "{" + ", ".join(fmt(x) for x in sorted(v, key=_sort_key)) + "}"
    if isinstance(v, tuple):
        return "<<" + ", ".join(fmt(x) for x in v) + ">>"
    raise TypeError(f"not a value: {v!r}")


def _sort_key(v):
    if isinstance(v, Ref):
        return (0, v.id)
    return (1, fmt(v))


def sorted_refs(s):
    return sorted(s, key=_sort_key)


def refs_in(v):
    """Object references contained in a value."""
    if isinstance(v, Ref):
        return {v}
    if isinstance(v, (frozenset, tuple)):
        out = set()
        for x in v:
            out |= refs_in(x)
        return out
    return set()


def values_equal(a, b):
    # bool is an int subclass; keep the two kinds apart
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


def _seq_item(s, i):
    if not isinstance(i, int) or not 1 <= i <= len(s):
        raise IndexError(f"index {i} out of range 1..{len(s)}")
    return s[i - 1]


def _replaced_at(s, i, x):
    if not 1 <= i <= len(s) + 1:
        raise IndexError(f"index {i} out of range 1..{len(s) + 1}")
    if i == len(s) + 1:
        return s + (x,)
    return s[: i - 1] + (x,) + s[i:]


def _nonempty(s, what):
    if not s:
        raise IndexError(f"{what} of empty sequence")
    return s


# name -> (arity, {receiver kind: implementation})
VALUE_MEMBERS = {
    "count": (0, {"SET": len, "SEQUENCE": len}),
    "is_empty": (0, {"SET": lambda s: not s, "SEQUENCE": lambda s: not s}),
    "has": (1, {"SET": lambda s, x: x in s, "SEQUENCE": lambda s, x: x in s}),
    "range": (0, {"SET": lambda s: s, "SEQUENCE": lambda s: frozenset(x for x in s if isinstance(x, Ref))}),
    "extended": (1, {"SET": lambda s, x: s | {x}, "SEQUENCE": lambda s, x: s + (x,)}),
    "removed": (1, {"SET": lambda s, x: s - {x},
                    "SEQUENCE": lambda s, x: tuple(e for e in s if not values_equal(e, x))}),
    "item": (1, {"SEQUENCE": _seq_item}),
    "first": (0, {"SEQUENCE": lambda s: _nonempty(s, "first")[0]}),
    "last": (0, {"SEQUENCE": lambda s: _nonempty(s, "last")[-1]}),
    "but_last": (0, {"SEQUENCE": lambda s: _nonempty(s, "but_last")[:-1]}),
    "but_first": (0, {"SEQUENCE": lambda s: _nonempty(s, "but_first")[1:]}),
    "replaced_at": (2, {"SEQUENCE": _replaced_at}),
}


def value_member_type(name, receiver_type):
    """Static result type of a built-in member on a SET / SEQUENCE type."""
    base, _, elem = receiver_type.partition("[")
    elem = elem.rstrip("]") or None
    if name in ("count",):
        return "INTEGER"
    if name in ("is_empty", "has"):
        return "BOOLEAN"
    if name == "range":
        return f"SET[{elem}]" if elem else "SET"
    if name in ("extended", "removed", "but_last", "but_first", "replaced_at"):
        return receiver_type
    if name in ("item", "first", "last"):
        return elem
    return None
