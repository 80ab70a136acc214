from __future__ import annotations

import json
import os

import pytest

from regtree.cli import main
from regtree.core import (
    RankedAlphabet,
    alphabet_to_doc,
    from_expression,
    system_to_doc,
)
from regtree.wilke import forbidden_letter_presentation, presentation_to_doc

ALPH = RankedAlphabet.of(("a2", 2), ("a1", 1), ("b1", 1), ("c0", 0))
AVOID = forbidden_letter_presentation(
    [("a2", 2), ("a1", 1), ("b1", 1), ("c0", 0)], forbidden={"b1"}
)


@pytest.fixture()
def files(tmp_path):
    alph = tmp_path / "alph.json"
    alph.write_text(json.dumps(alphabet_to_doc(ALPH)))
    good = tmp_path / "good.json"
    good.write_text(json.dumps(system_to_doc(from_expression("a2(c0, a1(c0))", ALPH))))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(system_to_doc(from_expression("a2(c0, b1(c0))", ALPH))))
    pres = tmp_path / "avoid.json"
    pres.write_text(json.dumps(presentation_to_doc(AVOID)))
    return tmp_path, str(alph), str(good), str(bad), str(pres)


def test_validate_ok_and_dot(files, capsys):
    tmp, alph, good, bad, pres = files
    dot = tmp / "g.dot"
    rc = main(["validate", "--input", good, "--alphabet", alph, "--dot", str(dot)])
    assert rc == 0
    assert "digraph" in dot.read_text()
    out = json.loads(capsys.readouterr().out)
    assert out["schema"] == "regtree-report/1" and out["ok"]


def test_decide_identical_files_exit_0(files, capsys):
    tmp, alph, good, bad, pres = files
    assert main(["decide", "unfold-eq", "--lhs", good, "--rhs", good,
                 "--alphabet", alph]) == 0
    assert main(["decide", "unfold-eq", "--lhs", good, "--rhs", bad,
                 "--alphabet", alph]) == 1


def test_malformed_file_exit_2(files, capsys):
    tmp, alph, good, bad, pres = files
    broken = tmp / "broken.json"
    broken.write_text("{not json")
    assert main(["validate", "--input", str(broken), "--alphabet", alph]) == 2


def test_recognise_exit_codes(files):
    tmp, alph, good, bad, pres = files
    args = ["recognise", "--algebra", "reach", "--letters", "R=b1",
            "--alphabet", alph, "--input"]
    assert main(args + [bad, "--accept", "bottom"]) == 0
    assert main(args + [good, "--accept", "bottom"]) == 1
    assert main(args + [good, "--accept", "empty"]) == 0


def test_ya_validate_and_eval(files, capsys):
    tmp, alph, good, bad, pres = files
    assert main(["ya", "validate", "--presentation", pres]) == 0
    assert main(["ya", "eval", "--presentation", pres, "--word", "ok,dead",
                 "--terminal", "acc"]) == 0
    out = capsys.readouterr().out
    assert '"value": "rej"' in out.splitlines()[-3] or '"value": "rej"' in out


def test_aut_pipeline(files, tmp_path, capsys):
    tmp, alph, good, bad, pres = files
    autf = tmp_path / "aut.json"
    assert main(["aut", "compile", "--presentation", pres, "--out", str(autf)]) == 0
    capsys.readouterr()
    assert main(["aut", "accept", "--automaton", str(autf), "--input", good]) == 0
    assert main(["aut", "accept", "--automaton", str(autf), "--input", bad]) == 1


def test_corpus_deterministic(files, tmp_path, capsys):
    tmp, alph, good, bad, pres = files
    a1 = tmp_path / "c1.jsonl"
    a2 = tmp_path / "c2.jsonl"
    base = ["corpus", "--seed", "7", "--count", "100", "--alphabet", alph,
            "--kind", "system", "--max-v", "5"]
    assert main(base + ["--out", str(a1)]) == 0
    assert main(base + ["--out", str(a2)]) == 0
    assert a1.read_bytes() == a2.read_bytes()


def test_suite_paper_examples(tmp_path, capsys):
    figs = tmp_path / "figs"
    rc = main(["suite", "--paper-examples", "--figures", str(figs),
               "--report", str(tmp_path / "rep.json")])
    out = capsys.readouterr().out
    assert rc == 0, out
    assert out.count("PASS") == 10
    assert (figs / "suite.png").exists() and (figs / "suite.tsv").exists()
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert rep["ok"] is True


def test_corpus_figures(tmp_path, files):
    tmp, alph, good, bad, pres = files
    figs = tmp_path / "figs"
    assert main(["corpus", "--seed", "3", "--count", "30", "--alphabet", alph,
                 "--kind", "ts", "--out", str(tmp_path / "x.jsonl"),
                 "--figures", str(figs)]) == 0
    assert (figs / "corpus.png").exists() and (figs / "corpus.tsv").exists()


def test_workers_env_batch(monkeypatch):
    from regtree.cli import map_batch

    monkeypatch.setenv("REGTREE_WORKERS", "3")
    assert map_batch(lambda x: x * x, list(range(10))) == [x * x for x in range(10)]
