"""The benchmark corpus: six challenge programs and their mutant suite.

Each mutant is a list of textual edits applied to an original program; the
materialized files under ``mutants/`` are generated from this table by
``materialize_mutants`` and checked against it by the test suite.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

PACKAGE_DIR = Path(__file__).resolve().parent

NAMES = ("observer", "iterator", "master_clock", "dll", "composite", "pip")
DEFAULTS_VARIANT = "observer_defaults"


def corpus_dir():
    """Corpus location; ``SCOL_CORPUS_DIR`` overrides the packaged copy."""
    env = os.environ.get("SCOL_CORPUS_DIR")
    return Path(env) if env else PACKAGE_DIR


@dataclass(frozen=True)
class Mutant:
    id: str
    base: str
    description: str
    expected: str
    edits: tuple  # (old text, new text); old must occur exactly once
    options: dict = field(default_factory=dict)

    @property
    def filename(self):
        return f"mutants/{self.id}.scol"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    expected: str = "clean"
    mutants: tuple = ()

    @property
    def filename(self):
        return f"{self.name}.scol"


def _m(id, base, description, expected, *edits, **options):
    return Mutant(id, base, description, expected, tuple(edits), options)


MUTANTS = (
    _m("observer_no_unwrap", "observer",
       "delete the unwrap of Current before value := v in SUBJECT.update", "UPDATE-OPEN",
       ("      unwrap\n      unwrap_all (observers)\n", "      unwrap_all (observers)\n")),
    _m("observer_no_unwrap_all", "observer",
       "delete unwrap_all (observers) in SUBJECT.update", "UPDATE-GUARD",
       ("      unwrap\n      unwrap_all (observers)\n", "      unwrap\n")),
    _m("observer_no_register", "observer",
       "delete s.register (Current) in OBSERVER.make; the awareness conjunct fails first",
       "WRAP-PRE-INV",
       ("      s.register (Current)\n", "")),
    _m("observer_unaware_subject", "observer",
       "delete s.register (Current) and the awareness conjunct of OBSERVER", "A2",
       ("      s.register (Current)\n", ""),
       ("  subjects = {subject}\n  subject.observers.has (Current)\n", "  subjects = {subject}\n")),
    _m("observer_reads_list", "observer",
       "OBSERVER invariant reads the subject's owned subscriber list", "A1",
       ("  subjects = {subject}\n  subject.observers.has (Current)\n",
        "  subjects = {subject}\n  subject.subscribers.range.has (Current)\n")),
    _m("observer_open_list", "observer",
       "open the fresh subscriber list before SUBJECT.make wraps", "WRAP-PRE-OWNS",
       ("      owns := {subscribers}\n", "      subscribers.unwrap\n      owns := {subscribers}\n")),
    _m("observer_inv_mentions_wrapped", "observer",
       "OBSERVER invariant mentions subject.wrapped", "A4",
       ("  cache = subject.value\n  subjects", "  cache = subject.value\n  subject.wrapped\n  subjects")),
    _m("observer_bad_read_clause", "observer",
       "LIST.has declares an empty read clause", "RC",
       ("read {Current} is sequence.has (x)", "read {} is sequence.has (x)")),
    _m("iterator_stale_item", "iterator",
       "call item on an iterator after remove_last dropped it", "CALL-PRE",
       ("    c.remove_last\n  ensure", "    c.remove_last\n    x := i.item\n  ensure")),
    _m("iterator_no_unwrap_all", "iterator",
       "COLLECTION.remove_last drops its observers without opening them", "UPDATE-GUARD",
       ("      unwrap\n      unwrap_all (observers)\n      observers := {}\n",
        "      unwrap\n      observers := {}\n")),
    _m("master_clock_reset_no_open", "master_clock",
       "MASTER.reset sets time := 0 without opening or dropping the slaves", "UPDATE-GUARD",
       ("      unwrap_all (observers)\n      observers := {}\n      time := 0\n", "      time := 0\n")),
    _m("master_clock_guard_true", "master_clock",
       "guard of MASTER.time is True and reset does not open the slaves", "A3",
       ("time: INTEGER guard y >= time", "time: INTEGER guard True"),
       ("      unwrap_all (observers)\n      observers := {}\n      time := 0\n", "      time := 0\n")),
    _m("master_clock_guard_true_bounded", "master_clock",
       "guard of MASTER.time is True; bounded A3 rejects the slave at its first wrap", "A3",
       ("time: INTEGER guard y >= time", "time: INTEGER guard True"),
       a3_mode="bounded"),
    _m("master_clock_sync_lag", "master_clock",
       "CLOCK.sync lags one tick behind its postcondition", "CALL-POST",
       ("      local_time := master.time\n      wrap", "      local_time := master.time - 1\n      wrap")),
    _m("dll_frame", "dll",
       "insert_right omits the right neighbour from its modify clause", "FRAME",
       ("    modify Current, n, right\n", "    modify Current, n\n")),
    _m("dll_no_back_link", "dll",
       "insert_right forgets to update the left link of the old right neighbour", "WRAP-PRE-INV",
       ("        r.left := n\n", "")),
    _m("composite_double_unwrap", "composite",
       "propagate unwraps a parent that add_child already opened", "UNWRAP-PRE",
       ("      if parent /= Void then\n        parent.propagate (value)",
        "      if parent /= Void then\n        parent.unwrap\n        parent.propagate (value)")),
    _m("composite_no_ancestor_unwrap", "composite",
       "add_child propagates without opening the ancestors", "CALL-PRE",
       ("      unwrap_all (ancestors)\n", "")),
    _m("composite_double_wrap", "composite",
       "add_child wraps Current again after propagation", "WRAP-PRE-OPEN",
       ("      propagate (c.value)\n", "      propagate (c.value)\n      wrap\n")),
    _m("pip_no_parent_unwrap", "pip",
       "propagate raises the priority while the parent is still closed", "UPDATE-GUARD",
       ("      if parent /= Void and parent.priority < v and parent.wrapped then\n"
        "        parent.unwrap\n      end\n", "")),
)

ENTRIES = tuple(CorpusEntry(n, "clean", tuple(m for m in MUTANTS if m.base == n)) for n in NAMES)

REQUIRED_IDS = frozenset([
    "UNWRAP-PRE", "UPDATE-OPEN", "UPDATE-GUARD", "WRAP-PRE-INV", "WRAP-PRE-OWNS",
    "A1", "A2", "A3", "CALL-PRE", "CALL-POST", "FRAME",
])


def entry(name):
    for e in ENTRIES:
        if e.name == name:
            return e
    raise KeyError(name)


def mutant(mid):
    for m in MUTANTS:
        if m.id == mid:
            return m
    raise KeyError(mid)


def read_source(rel, root=None):
    return (Path(root) if root else corpus_dir()).joinpath(rel).read_text(encoding="utf-8")


def apply_edits(source, edits, label="mutant"):
    for old, new in edits:
        n = source.count(old)
        if n != 1:
            raise ValueError(f"{label}: edit target occurs {n} times: {old!r}")
        source = source.replace(old, new)
    return source


def mutant_source(m, root=None):
    flags = "".join(f" --{k.replace('_mode', '')}={v}" for k, v in sorted(m.options.items()))
    header = f"-- mutant {m.id}: {m.description} (expect {m.expected}{' with' + flags if flags else ''})\n"
    return header + apply_edits(read_source(f"{m.base}.scol", root), m.edits, m.id)


def materialize_mutants(out_dir=None, root=None):
    """Write every mutant to ``out_dir`` (default: the corpus ``mutants`` dir)."""
    out = Path(out_dir) if out_dir else (Path(root) if root else corpus_dir()) / "mutants"
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for m in MUTANTS:
        p = out / f"{m.id}.scol"
        p.write_text(mutant_source(m, root), encoding="utf-8")
        paths.append(p)
    return paths
