"""``scolcheck``: command-line front end.

Exit codes: 0 when every check passes, 1 when obligations fail, 2 for usage
or load errors (missing file, parse, name or type errors).
"""

from __future__ import annotations

import argparse
import secrets
import sys
from pathlib import Path

from scol import __version__
from scol import corpus as C
from scol import report
from scol.diagnostics import Diagnostic
from scol.runner import CheckResult, RunConfig, check_source, run_corpus


def _common(p):
    p.add_argument("--no-defaults", dest="defaults", action="store_false",
                   help="do not add default annotations")
    p.add_argument("--a3", choices=("instance", "bounded"), default="instance",
                   help="A3 checking: at each guarded update (instance) or also at wrap over small domains")
    p.add_argument("--oracle", action="store_true", help="check G1 and G2 after every heap update")
    p.add_argument("--keep-going", action="store_true", help="continue after the first failed obligation")
    p.add_argument("--max-steps", type=int, default=100_000, metavar="N", help="execution step limit")
    p.add_argument("--seed", type=int, default=None, metavar="S",
                   help="random seed (fuzz only; generated and printed when absent)")
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scolcheck",
        description="Check programs against the ownership and collaboration invariant protocol.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", metavar="MODE", required=True)

    p = sub.add_parser("check", help="run the entry routine of each file and check every obligation")
    p.add_argument("files", nargs="+", metavar="FILE")
    p.add_argument("-v", "--verbose", action="store_true", help="also print default-annotation notes")
    _common(p)

    p = sub.add_parser("audit", help="check, then replay the trace through the lemma audit and the oracle")
    p.add_argument("files", nargs="+", metavar="FILE")
    _common(p)

    p = sub.add_parser("fuzz", help="randomized soundness harness")
    p.add_argument("--traces", type=int, default=10_000, metavar="N")
    p.add_argument("--workers", type=int, default=1, metavar="N")
    p.add_argument("--disable", action="append", default=[], metavar="ID",
                   help="turn off one obligation in the checker (harness self-test)")
    _common(p)

    p = sub.add_parser("corpus", help="check the benchmark corpus and its mutant suite")
    p.add_argument("--materialize", action="store_true",
                   help="rewrite the mutant files from the mutant table first")
    _common(p)
    return parser


def resolve(path):
    """Paths under ``corpus/`` fall back to the packaged (or overridden) corpus."""
    p = Path(path)
    if not p.exists() and p.parts and p.parts[0] == "corpus":
        q = C.corpus_dir().joinpath(*p.parts[1:])
        if q.exists():
            return q
    return p


def _config(args, mode):
    return RunConfig(
        mode=mode,
        defaults_enabled=args.defaults,
        a3_mode=args.a3,
        oracle_every_step=args.oracle,
        keep_going=args.keep_going,
        max_steps=args.max_steps,
        seed=args.seed,
        format=args.format,
    )


def _check_all(files, config):
    results = []
    for f in files:
        try:
            source = resolve(f).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            why = getattr(exc, "strerror", None) or str(exc)
            results.append(CheckResult(str(f), "error", [Diagnostic("IO", f"cannot read {f}: {why}", str(f))]))
            continue
        results.append(check_source(source, str(f), config))
    return results


def _exit_code(results):
    codes = [r.exit_code for r in results]
    return max(codes) if codes else 0


def cmd_check(args, out):
    results = _check_all(args.files, _config(args, "check"))
    print(report.render_checks(results, args.format, getattr(args, "verbose", False)), file=out)
    return _exit_code(results)


def cmd_audit(args, out):
    from scol.oracle import global_validity_per_step, lemma_hypotheses_audit

    results = _check_all(args.files, _config(args, "audit"))
    records, texts, code = [], [], _exit_code(results)
    for r in results:
        audit, per_step = None, []
        if r.trace is not None:
            audit = lemma_hypotheses_audit(r.trace, r.evaluator)
            per_step = global_validity_per_step(r.trace, r.evaluator)
            if not audit.ok or not all(v.ok for v in per_step):
                code = max(code, 1)
        records.append(report.audit_record(r, audit, per_step))
        texts.append(report.audit_text(r, audit, per_step))
    print(report.dumps({"results": records}) if args.format == "json" else "\n".join(texts), file=out)
    return code


def cmd_fuzz(args, out):
    from scol.diagnostics import NON_OBLIGATIONS, OBLIGATIONS
    from scol.fuzz import soundness_fuzz

    unknown = [d for d in args.disable if d not in OBLIGATIONS and d not in NON_OBLIGATIONS]
    if unknown:
        print(f"scolcheck: unknown obligation id: {', '.join(unknown)}", file=sys.stderr)
        return 2
    seed = args.seed
    if seed is None:
        seed = secrets.randbelow(2**31)
        print(f"seed: {seed} (generated)", file=sys.stderr)
    rep = soundness_fuzz(seed, args.traces, disabled=frozenset(args.disable), workers=args.workers)
    print(report.render_fuzz(rep, args.format), file=out)
    return 0 if rep.ok else 1


def cmd_corpus(args, out):
    if args.materialize:
        C.materialize_mutants()
    summary = run_corpus(_config(args, "corpus"))
    print(report.render_corpus(summary, args.format), file=out)
    return 0 if summary.ok else 1


COMMANDS = {"check": cmd_check, "audit": cmd_audit, "fuzz": cmd_fuzz, "corpus": cmd_corpus}


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return exc.code if isinstance(exc.code, int) else 2
    return COMMANDS[args.mode](args, out)


if __name__ == "__main__":
    sys.exit(main())
