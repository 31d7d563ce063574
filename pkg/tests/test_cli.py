from __future__ import annotations

import json

from relscen.cli import main, resolve_seed
from relscen.core import load_instance


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_and_label(tmp_path, capsys):
    path = tmp_path / "i.json"
    assert run(capsys, "generate", "--kind", "sp", "--layers", 2, "--m", 20, "--seed", 7, "--out", path)[0] == 0
    inst = load_instance(path)
    assert inst.m == 20 and inst.graph.layer_count == 2 and inst.labels is None
    code, out, _ = run(capsys, "label", "--in", path, "--deadline", 10, "--out", path)
    assert code == 0
    assert len(load_instance(path).labels) == 20


def test_train_select_roc_features(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert run(capsys, "generate", "--kind", "sp", "--layers", 2, "--m", 15, "--count", 4, "--seed", 1, "--out", corpus)[0] == 0
    for f in sorted(corpus.glob("*.json")):
        assert run(capsys, "label", "--in", f)[0] == 0
    model = tmp_path / "model.json"
    assert run(capsys, "train", "--corpus", corpus, "--out", model, "--trees", 10)[0] == 0
    inst = sorted(corpus.glob("*.json"))[0]
    code, out, _ = run(capsys, "select", "--method", "ddh", "--model", model, "--k", 5, "--in", inst)
    idx = [int(t) for t in out.split()]
    assert code == 0 and len(idx) == 5 == len(set(idx))
    code, out, _ = run(capsys, "roc", "--model", model, "--corpus", corpus, "--out", tmp_path / "roc.csv")
    assert code == 0 and out.startswith("AUC")
    code, out, _ = run(capsys, "features", "--in", inst)
    assert code == 0 and out.splitlines()[0].endswith(",label") and len(out.splitlines()) == 16


def test_ccg_bench_and_export(tmp_path, capsys):
    corpus = tmp_path / "c"
    run(capsys, "generate", "--kind", "tsp", "--nodes", 5, "--m", 10, "--count", 2, "--out", corpus)
    inst = sorted(corpus.glob("*.json"))[0]
    code, out, _ = run(capsys, "ccg", "--in", inst, "--start", "0,3")
    doc = json.loads(out)
    assert code == 0 and doc["converged"] and doc["start_set"] == [0, 3]
    code, out, _ = run(capsys, "bench-bounds", "--corpus", corpus, "--methods", "Random,Maxsum", "--k", "1,3", "--reps", 2, "--out", tmp_path / "b")
    assert code == 0 and out.startswith("size,method,k,q1,avg,q3,n")
    assert (tmp_path / "b" / "bounds_normalized.csv").exists()
    code, out, _ = run(capsys, "bench-ccg", "--corpus", corpus, "--methods", "Random", "--reps", 1, "--deadline", 10)
    assert code == 0 and len(out.splitlines()) == 2
    code, out, _ = run(capsys, "export-lp", "--in", inst, "--scenarios", "0,1")
    assert code == 0 and "Minimize" in out and "Binaries" in out


def test_exit_codes(tmp_path, capsys):
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "generate", "--kind", "sp", "--bogus", 1, "--out", tmp_path / "x.json")[0] == 2
    assert run(capsys, "label", "--in", tmp_path / "missing.json")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    code, _, err = run(capsys, "label", "--in", bad)
    assert code == 1 and "$.id" in err
    inst = tmp_path / "i.json"
    run(capsys, "generate", "--kind", "sp", "--layers", 1, "--m", 3, "--out", inst)
    assert run(capsys, "select", "--method", "ddh", "--k", 2, "--in", inst)[0] == 1
    assert run(capsys, "bench-bounds", "--corpus", tmp_path / "nowhere")[0] == 2
    assert run(capsys, "--help")[0] == 0


def test_seed_falls_back_to_environment(monkeypatch):
    monkeypatch.setenv("RELSCEN_SEED", "17")
    assert resolve_seed(None) == 17
    assert resolve_seed(3) == 3
    monkeypatch.delenv("RELSCEN_SEED")
    assert resolve_seed(None) == 0
