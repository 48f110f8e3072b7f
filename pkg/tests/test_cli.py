import io
import json
import shutil

import pytest

from scol import corpus as C
from scol.cli import main


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "check" in capsys.readouterr().out


def test_usage_errors_exit_two(capsys):
    assert main([]) == 2
    assert main(["bogus"]) == 2
    assert main(["check", "x.scol", "--a3", "never"]) == 2


def test_clean_file_passes():
    code, out = run("check", "corpus/observer.scol")
    assert code == 0 and "corpus/observer.scol: pass" in out


def test_mutant_fails_with_location():
    code, out = run("check", "corpus/mutants/observer_no_unwrap.scol", "--format", "json")
    rec = json.loads(out)["results"][0]
    assert code == 1 and rec["status"] == "fail"
    d = rec["diagnostics"][0]
    assert d["obligation_id"] == "UPDATE-OPEN" and d["line"] > 0 and d["column"] > 0
    assert d["file"] == "corpus/mutants/observer_no_unwrap.scol"


def test_json_fields(tmp_path):
    code, out = run("check", "corpus/observer.scol", "--oracle", "--format", "json")
    rec = json.loads(out)["results"][0]
    assert code == 0
    assert set(rec) == {"file", "status", "diagnostics", "notes", "trace", "global"}
    assert rec["trace"]["steps"] > 0 and rec["global"]["g1_holds"] and rec["global"]["g2_holds"]


def test_missing_file_and_parse_error(tmp_path):
    bad = tmp_path / "bad.scol"
    bad.write_text("class ")
    code, out = run("check", str(tmp_path / "none.scol"), str(bad), "--format", "json")
    recs = json.loads(out)["results"]
    assert code == 2 and [r["status"] for r in recs] == ["error", "error"]
    assert recs[0]["diagnostics"][0]["obligation_id"] == "IO"


def test_exit_code_is_worst_of_files():
    code, _ = run("check", "corpus/observer.scol", "corpus/mutants/observer_no_unwrap.scol")
    assert code == 1


def test_audit_passes_on_corpus_program():
    code, out = run("audit", "corpus/pip.scol", "--format", "json")
    rec = json.loads(out)["results"][0]
    assert code == 0 and rec["audit"]["ok"]


def test_fuzz_small(capsys):
    code, out = run("fuzz", "--traces", "30", "--seed", "3", "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["seed"] == 3 and rep["traces"] == 30 and rep["incidents"] == []


def test_fuzz_generated_seed_is_printed(capsys):
    code, _ = run("fuzz", "--traces", "2")
    assert code == 0 and "(generated)" in capsys.readouterr().err


def test_fuzz_with_disabled_guard_finds_incident():
    code, out = run("fuzz", "--traces", "200", "--seed", "1", "--disable", "UPDATE-GUARD")
    assert code == 1 and "incident" in out


def test_fuzz_unknown_disable_id():
    assert run("fuzz", "--traces", "1", "--seed", "1", "--disable", "NOPE")[0] == 2


def test_corpus_json_is_byte_identical():
    a, b = run("corpus", "--format", "json"), run("corpus", "--format", "json")
    assert a == b and a[0] == 0
    rep = json.loads(a[1])
    assert set(C.REQUIRED_IDS) <= set(rep["covered_ids"])


def test_materialized_mutants_match_table(tmp_path):
    paths = C.materialize_mutants(tmp_path)
    assert len(paths) == len(C.MUTANTS)
    for m, p in zip(C.MUTANTS, paths):
        assert p.read_text() == C.mutant_source(m)
        assert (C.PACKAGE_DIR / m.filename).read_text() == p.read_text()


def test_corpus_dir_override(tmp_path, monkeypatch):
    root = tmp_path / "corp"
    shutil.copytree(C.PACKAGE_DIR, root, ignore=shutil.ignore_patterns("__pycache__", "*.py"))
    obs = root / "observer.scol"
    obs.write_text(obs.read_text().replace("    s.update (5)\n", "    s.update (5)\n    s.value := 1\n"))
    monkeypatch.setenv("SCOL_CORPUS_DIR", str(root))
    code, out = run("check", "corpus/observer.scol")
    assert code == 1 and "UPDATE-OPEN" in out


@pytest.mark.parametrize("flag", ["--no-defaults", "--keep-going", "--a3=bounded"])
def test_flags_keep_iterator_clean(flag):
    assert run("check", "corpus/iterator.scol", flag)[0] == 0


def test_bounded_a3_checks_more():
    count = lambda *f: json.loads(run("check", "corpus/iterator.scol", "--format", "json", *f)[1])[
        "results"][0]["trace"]["obligations_checked"]
    assert count("--a3", "bounded") > count()
