"""Global validity (G1, G2) and an independent replay audit of checker traces.

Nothing here reuses the checker's rule code: the audit re-derives each
lemma hypothesis from the pre/post snapshots of a step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from scol.evaluation import EvalError, Evaluator
from scol.values import VOID, sorted_refs


def _evaluator(ev):
    return ev if isinstance(ev, Evaluator) else Evaluator(ev)


@dataclass(frozen=True)
class GlobalVerdict:
    g1_holds: bool
    g2_holds: bool
    g1_counterexample: Optional[object] = None
    g2_counterexample: Optional[tuple] = None
    snapshot_id: Optional[int] = None

    @property
    def ok(self):
        return self.g1_holds and self.g2_holds


def g1_counterexamples(h, ev):
    """Closed objects whose invariant is false or cannot be evaluated."""
    out = []
    for r in sorted_refs(h.refs()):
        if r == VOID or not h.state(r).closed:
            continue
        try:
            ok = ev.invariant(h, r)
        except EvalError:
            ok = False
        if not ok:
            out.append(r)
    return out


def g2_counterexamples(h):
    """Pairs (p, o): p closed, o in p.owns, and o open or owned by another object."""
    out = []
    for p in sorted_refs(h.refs()):
        s = h.state(p)
        if p == VOID or not s.closed:
            continue
        for o in sorted_refs(s.owns):
            os_ = h.state(o)
            if not os_.closed or os_.owner != p:
                out.append((p, o))
    return out


def check_global(h, evaluator, snapshot_id=None):
    """G1 and G2 over every allocated object of ``h``; pure."""
    ev = _evaluator(evaluator)
    g1 = g1_counterexamples(h, ev)
    g2 = g2_counterexamples(h)
    return GlobalVerdict(
        g1_holds=not g1,
        g2_holds=not g2,
        g1_counterexample=g1[0] if g1 else None,
        g2_counterexample=g2[0] if g2 else None,
        snapshot_id=snapshot_id,
    )


# -- lemma hypotheses audit ----------------------------------------------------


@dataclass
class AuditFailure:
    step: int
    rule: str
    message: str

    def __str__(self):
        return f"step {self.step}: {self.rule}: {self.message}"


@dataclass
class AuditReport:
    failures: list = field(default_factory=list)
    steps: int = 0

    @property
    def ok(self):
        return not self.failures

    def __bool__(self):
        return self.ok


def _diff_fields(a, b):
    """Names of fields differing between two object states (None = missing)."""
    if a is None or b is None:
        return {"<alloc>"}
    out = {g for g in ("closed", "owner", "owns", "subjects", "observers") if getattr(a, g) != getattr(b, g)}
    out |= {k for k in set(a.attrs) | set(b.attrs) if a.attrs.get(k) != b.attrs.get(k)}
    return out


def _changes(pre, post):
    out = {}
    for r in set(pre.refs()) | set(post.refs()):
        a = pre.state(r) if r in pre else None
        b = post.state(r) if r in post else None
        if a != b:
            out[r] = _diff_fields(a, b)
    return out


def _free(h, x):
    return not h.state(h.state(x).owner).closed


def _inv(ev, h, x, reads=None):
    try:
        return ev.invariant(h, x, reads)
    except EvalError:
        return False


def lemma_hypotheses_audit(trace, evaluator):
    """Replay ``trace`` checking the hypotheses of both lemmas step by step.

    Rules: L1a/L2a fresh objects are open; L1b unwrap and owner changes only
    touch free objects; L1c wrap closes only when the owned objects are closed
    and point back; L2b wrap closes only with a true invariant; L1d attribute
    updates only on open objects; L2c closed concerned objects keep a true
    invariant.  L2d (no dependence on allocation status) holds because the
    language cannot express allocation status.
    """
    ev = _evaluator(evaluator)
    report = AuditReport(steps=len(trace.steps))
    fail = report.failures.append
    prev_post = 0
    for i, st in enumerate(trace.steps):
        if st.pre != prev_post:
            fail(AuditFailure(i, "CHAIN", f"pre-snapshot {st.pre} does not follow {prev_post}"))
        prev_post = st.post
        pre, post = trace.snapshots[st.pre], trace.snapshots[st.post]
        changes = _changes(pre, post)
        x = st.target
        if st.kind in ("call", "return"):
            if changes:
                fail(AuditFailure(i, "TRACK", f"{st.kind} step changed {sorted_refs(changes)}"))
            continue
        if st.kind == "create":
            if x in pre or set(changes) != {x}:
                fail(AuditFailure(i, "TRACK", f"create changed {sorted_refs(changes)}"))
            s = post.state(x)
            if s.closed or s.owner != VOID or s.observers:
                fail(AuditFailure(i, "L1a", f"fresh object {x!r} is not open, free and unobserved"))
        elif st.kind == "unwrap":
            if set(changes) - {x} or changes.get(x, {"closed"}) - {"closed"}:
                fail(AuditFailure(i, "TRACK", f"unwrap changed more than {x!r}.closed"))
            if not pre.state(x).closed or not _free(pre, x):
                fail(AuditFailure(i, "L1b", f"unwrap of {x!r}, which is not wrapped"))
        elif st.kind == "wrap":
            owns = post.state(x).owns
            extra = set(changes) - {x} - set(owns)
            if extra or changes.get(x, set()) - {"closed"}:
                fail(AuditFailure(i, "TRACK", f"wrap changed {sorted_refs(changes)}"))
            for o in sorted_refs(set(changes) & set(owns)):
                if changes[o] - {"owner"}:
                    fail(AuditFailure(i, "TRACK", f"wrap changed more than {o!r}.owner"))
                if not _free(pre, o):
                    fail(AuditFailure(i, "L1b", f"owner of {o!r} changed while {o!r} was not free"))
            if pre.state(x).closed:
                fail(AuditFailure(i, "L1c", f"wrap of closed {x!r}"))
            for o in sorted_refs(owns):
                s = post.state(o)
                if not s.closed or s.owner != x:
                    fail(AuditFailure(i, "L1c", f"{x!r} closed while owned {o!r} is open or points elsewhere"))
            if not _inv(ev, post, x):
                fail(AuditFailure(i, "L2b", f"{x!r} closed with a false invariant"))
        elif st.kind == "update":
            if set(changes) - {x} or changes.get(x, set()) - {st.attr}:
                fail(AuditFailure(i, "TRACK", f"update changed {sorted_refs(changes)}"))
            if pre.state(x).closed:
                fail(AuditFailure(i, "L1d", f"attribute {st.attr} of closed {x!r} updated"))
            for o in sorted_refs(pre.refs()):
                if o == VOID or not pre.state(o).closed:
                    continue
                reads = set()
                if not _inv(ev, pre, o, reads) or x not in reads:
                    continue
                if not _inv(ev, post, o):
                    fail(AuditFailure(i, "L2c", f"update of {x!r}.{st.attr} breaks the invariant "
                                               f"of closed {o!r}"))
        else:
            fail(AuditFailure(i, "TRACK", f"unknown step kind {st.kind}"))
    return report


def global_validity_per_step(trace, evaluator):
    """GlobalVerdict for every snapshot of ``trace``."""
    ev = _evaluator(evaluator)
    return [check_global(h, ev, i) for i, h in enumerate(trace.snapshots)]


def soundness_fuzz(seed=0, n_traces=10_000, size_bounds=None, **kw):
    """See ``scol.fuzz.soundness_fuzz``; re-exported here as the oracle's harness."""
    from scol import fuzz

    return fuzz.soundness_fuzz(seed, n_traces, size_bounds or fuzz.SizeBounds(), **kw)
