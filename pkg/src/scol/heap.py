"""Object store with built-in ghost state.

Object states are immutable; the heap maps references to states and
replaces a state on every write, so a snapshot is a shallow copy of the
mapping.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

from scol.values import EMPTY, VOID, Ref, default_value, fmt, sorted_refs

GHOST_FIELDS = ("closed", "owner", "owns", "subjects", "observers")


class HeapError(Exception):
    pass


@dataclass(frozen=True)
class ObjectState:
    class_name: str
    attrs: Mapping[str, object] = field(default_factory=dict)
    closed: bool = False
    owner: Ref = VOID
    owns: frozenset = EMPTY
    subjects: frozenset = EMPTY
    observers: frozenset = EMPTY

    def get(self, name):
        if name in GHOST_FIELDS:
            return getattr(self, name)
        try:
            return self.attrs[name]
        except KeyError:
            raise HeapError(f"{self.class_name} has no attribute '{name}'") from None

    def with_value(self, name, value):
        if name in GHOST_FIELDS:
            return replace(self, **{name: value})
        if name not in self.attrs:
            raise HeapError(f"{self.class_name} has no attribute '{name}'")
        attrs = dict(self.attrs)
        attrs[name] = value
        return replace(self, attrs=MappingProxyType(attrs))


_VOID_STATE = ObjectState("NONE", MappingProxyType({}))


class Heap:
    """Mutable store; ``schema`` maps class name -> {attribute: type name}."""

    def __init__(self, schema=None, objects=None, next_id=1):
        self.schema = schema if schema is not None else {}
        self._objects = dict(objects) if objects is not None else {VOID: _VOID_STATE}
        self.next_id = next_id

    # -- reads -------------------------------------------------------------

    def __contains__(self, ref):
        return ref in self._objects

    def __iter__(self):
        return iter(sorted_refs(self._objects))

    def __len__(self):
        return len(self._objects)

    def refs(self):
        return self._objects.keys()

    def state(self, ref) -> ObjectState:
        try:
            return self._objects[ref]
        except KeyError:
            raise HeapError(f"unallocated object {ref!r}") from None

    def get(self, ref, name):
        return self.state(ref).get(name)

    def class_of(self, ref):
        return self.state(ref).class_name

    # -- writes ------------------------------------------------------------

    def allocate(self, class_name):
        """Fresh open object owned by Void with default attribute values."""
        try:
            fields = self.schema[class_name]
        except KeyError:
            raise HeapError(f"unknown class '{class_name}'") from None
        ref = Ref(self.next_id)
        self.next_id += 1
        attrs = MappingProxyType({n: default_value(t) for n, t in fields.items()})
        self._objects[ref] = ObjectState(class_name, attrs)
        return ref

    def set(self, ref, name, value):
        """Raw write, bypassing every obligation."""
        if ref == VOID:
            raise HeapError("Void cannot be modified")
        self._objects[ref] = self.state(ref).with_value(name, value)

    def put_state(self, ref, state):
        self._objects[ref] = state

    # -- copies ------------------------------------------------------------

    def snapshot(self):
        return Heap(self.schema, self._objects, self.next_id)

    copy = snapshot

    def same_as(self, other):
        return self._objects == other._objects

    def changed_objects(self, other):
        """References whose state differs between ``self`` and ``other``."""
        out = set()
        for r in set(self._objects) | set(other._objects):
            if self._objects.get(r) != other._objects.get(r):
                out.add(r)
        return out

    def serialize(self):
        return serialize(self)


class Overlay:
    """Read-only view of ``base`` with one attribute replaced: h[x.a -> y]."""

    def __init__(self, base, ref, name, value):
        self.base = base
        self.ref = ref
        self.name = name
        self.value = value
        self.schema = base.schema

    def __contains__(self, ref):
        return ref in self.base

    def refs(self):
        return self.base.refs()

    def state(self, ref):
        s = self.base.state(ref)
        if ref == self.ref:
            return s.with_value(self.name, self.value)
        return s

    def get(self, ref, name):
        if ref == self.ref and name == self.name:
            self.base.state(ref)
            return self.value
        return self.base.get(ref, name)

    def class_of(self, ref):
        return self.base.class_of(ref)


# -- derived predicates --------------------------------------------------------


def is_open(h, x):
    return not h.state(x).closed


def is_free(h, x):
    return is_open(h, h.state(x).owner)


def is_wrapped(h, x):
    s = h.state(x)
    return s.closed and not h.state(s.owner).closed


def ownership_domain(h, o):
    """{o} for open o, else the closure of owns over closed members."""
    s = h.state(o)
    if not s.closed:
        return frozenset([o])
    dom = {o}
    work = [o]
    while work:
        p = work.pop()
        ps = h.state(p)
        if not ps.closed:
            continue
        for q in ps.owns:
            if q not in dom:
                h.state(q)
                dom.add(q)
                work.append(q)
    return frozenset(dom)


def serialize(h):
    """Canonical text: one line per object, sorted references and names."""
    lines = []
    for r in sorted_refs(h.refs()):
        s = h.state(r)
        ghost = (
            f"closed={fmt(s.closed)} owner={fmt(s.owner)} owns={fmt(s.owns)} "
            f"subjects={fmt(s.subjects)} observers={fmt(s.observers)}"
        )
        user = " ".join(f"{k}={fmt(s.attrs[k])}" for k in sorted(s.attrs))
        lines.append(f"{fmt(r)} {s.class_name} {ghost}" + (f" | {user}" if user else ""))
    return "\n".join(lines) + "\n"


def schema_of(program):
    """Heap schema from a program: class -> {attribute: static type name}."""
    from scol.syntax.checks import Checker

    ck = Checker(program)
    out = {}
    for c in program.classes:
        info = ck.symbols[c.name]
        out[c.name] = {a.name: (ck.resolve_type(a.type, info) or "ANY") for a in c.attributes}
    return out
