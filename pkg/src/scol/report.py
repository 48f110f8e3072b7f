"""Text and JSON renderings of check, audit, fuzz and corpus results.

JSON output is deterministic: keys are sorted and every collection is
emitted in a fixed order, so two runs of the same input are byte-identical.

Check report schema::

    {"file": str, "status": "pass" | "fail" | "error",
     "diagnostics": [{"obligation_id", "file", "line", "column", "message",
                      "snapshot_id", "severity", "tainted"}],
     "notes": [<diagnostic>],
     "trace": {"steps", "snapshots", "obligations_checked", "kinds"} | null,
     "global": {"g1_holds", "g2_holds", "g1_counterexample",
                "g2_counterexample", "snapshot_id"} | null}
"""

from __future__ import annotations

import json


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)


def diagnostic_record(d):
    return {
        "obligation_id": d.obligation_id,
        "file": d.file,
        "line": d.line,
        "column": d.column,
        "message": d.message,
        "snapshot_id": d.snapshot_id,
        "severity": d.severity,
        "tainted": d.tainted,
    }


def global_record(v):
    if v is None:
        return None
    g2 = v.g2_counterexample
    return {
        "g1_holds": v.g1_holds,
        "g2_holds": v.g2_holds,
        "g1_counterexample": None if v.g1_counterexample is None else repr(v.g1_counterexample),
        "g2_counterexample": None if g2 is None else [repr(g2[0]), repr(g2[1])],
        "snapshot_id": v.snapshot_id,
    }


def check_record(result):
    return {
        "file": result.file,
        "status": result.status,
        "diagnostics": [diagnostic_record(d) for d in result.diagnostics],
        "notes": [diagnostic_record(d) for d in result.notes],
        "trace": result.trace.summary() if result.trace is not None else None,
        "global": global_record(result.final_global),
    }


def _global_text(v):
    if v is None:
        return "global: not evaluated"
    parts = ["G1 holds" if v.g1_holds else f"G1 fails at {v.g1_counterexample!r}"]
    if v.g2_holds:
        parts.append("G2 holds")
    else:
        p, o = v.g2_counterexample
        parts.append(f"G2 fails at ({p!r}, {o!r})")
    return f"global: {', '.join(parts)} (snapshot {v.snapshot_id})"


def check_text(result, verbose=False):
    lines = [str(d) for d in result.diagnostics]
    if verbose:
        lines += [str(d) for d in result.notes]
    lines.append(f"{result.file}: {result.status}")
    if result.trace is not None:
        s = result.trace.summary()
        lines.append(f"  trace: {s['steps']} steps, {s['snapshots']} snapshots, "
                     f"{s['obligations_checked']} obligations checked")
        lines.append("  " + _global_text(result.final_global))
    return "\n".join(lines)


def render_checks(results, fmt="text", verbose=False):
    if fmt == "json":
        return dumps({"results": [check_record(r) for r in results]})
    return "\n".join(check_text(r, verbose) for r in results)


def audit_record(result, audit, per_step):
    rec = check_record(result)
    rec["audit"] = {
        "ok": audit.ok if audit is not None else None,
        "steps": audit.steps if audit is not None else 0,
        "failures": [{"step": f.step, "rule": f.rule, "message": f.message}
                     for f in (audit.failures if audit is not None else [])],
    }
    rec["global_per_step"] = [global_record(v) for v in per_step]
    return rec


def audit_text(result, audit, per_step):
    lines = [check_text(result)]
    if audit is None:
        lines.append("  audit: not run (no trace)")
        return "\n".join(lines)
    bad = [v for v in per_step if not v.ok]
    lines.append(f"  audit: {'pass' if audit.ok else 'fail'} over {audit.steps} steps")
    lines += [f"    {f}" for f in audit.failures]
    lines.append(f"  global validity: {len(per_step) - len(bad)}/{len(per_step)} snapshots valid")
    lines += [f"    {_global_text(v)}" for v in bad]
    return "\n".join(lines)


def render_fuzz(report, fmt="text"):
    if fmt == "json":
        return dumps(report.to_dict())
    return report.to_text()


def corpus_record(summary):
    return {
        "ok": summary.ok,
        "rows": [
            {"name": r.name, "kind": r.kind, "expected": r.expected, "got": list(r.got),
             "steps": r.steps, "obligations": r.obligations, "ok": r.ok}
            for r in summary.rows
        ],
        "covered_ids": sorted(summary.covered_ids()),
        "token_overhead": summary.overhead,
    }


def corpus_text(summary):
    w = max(len(r.name) for r in summary.rows)
    lines = [f"{'name':<{w}}  {'kind':<8}  {'steps':>5}  {'obligations':>11}  verdict"]
    for r in summary.rows:
        mark = "ok" if r.ok else f"UNEXPECTED (wanted {r.expected})"
        lines.append(f"{r.name:<{w}}  {r.kind:<8}  {r.steps:>5}  {r.obligations:>11}  {r.verdict}  {mark}")
    lines.append("")
    lines.append("covered obligation ids: " + ", ".join(sorted(summary.covered_ids())))
    for name, o in summary.overhead.items():
        lines.append(f"token overhead {name}: {o['spec_tokens']} spec / {o['code_tokens']} code "
                     f"= {o['overhead']}")
    lines.append("corpus: " + ("pass" if summary.ok else "FAIL"))
    return "\n".join(lines)


def render_corpus(summary, fmt="text"):
    return dumps(corpus_record(summary)) if fmt == "json" else corpus_text(summary)
