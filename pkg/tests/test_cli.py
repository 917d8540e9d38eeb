import csv
import json

import numpy as np
import pytest

from conftest import ADULT_CSV
from tabfp.cli import main, parse_strengths
from tabfp.table import diff_cells, load_csv, write_csv

KEY = "cli-owner-key"


@pytest.fixture
def env(monkeypatch):
    monkeypatch.setenv("FP_SECRET_KEY", KEY)
    monkeypatch.setenv("FP_ATTACKER_KEY", "cli-attacker-key")


@pytest.fixture
def workspace(tmp_path, small_synthetic, env):
    data = tmp_path / "data.csv"
    write_csv(small_synthetic, data)
    assert main(["corrmap", "--data", str(data), "--out", str(tmp_path / "groups.json")]) == 0
    assert main(["codegen", "--kind", "hash", "--recipients", "3", "--length", "16",
                 "--out", str(tmp_path / "book.json")]) == 0
    return tmp_path


def embed(ws, recipient, gamma="2"):
    argv = ["embed", "--data", str(ws / "data.csv"), "--groups", str(ws / "groups.json"),
            "--gamma", gamma, "--codebook", str(ws / "book.json"), "--recipient", str(recipient),
            "--out", str(ws / "out")]
    assert KEY not in argv
    return main(argv)


def test_parse_strengths():
    assert parse_strengths("0.1..0.5") == [0.1, 0.2, 0.3, 0.4, 0.5]
    assert parse_strengths("0..1..0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_strengths("0.1,0.4") == [0.1, 0.4]


def test_corrmap_all_singletons(tmp_path, small_synthetic):
    data = tmp_path / "d.csv"
    write_csv(small_synthetic, data)
    assert main(["corrmap", "--data", str(data), "--tau-c", "1.1", "--out", str(tmp_path / "g.json")]) == 0
    doc = json.loads((tmp_path / "g.json").read_text())
    assert all(len(g) == 1 for g in doc["groups"])


def test_corrmap_missing_path(tmp_path, capsys):
    assert main(["corrmap", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "g.json")]) != 0
    assert "error" in capsys.readouterr().err


@pytest.mark.skipif(not ADULT_CSV.exists(), reason="Adult not downloaded")
def test_corrmap_adult(tmp_path):
    assert main(["corrmap", "--data", str(ADULT_CSV), "--tau-c", "0.4", "--out", str(tmp_path / "g.json")]) == 0
    groups = json.loads((tmp_path / "g.json").read_text())["groups"]
    assert any({"marital-status", "relationship"} <= set(g) for g in groups)


def test_usage_errors(tmp_path, capsys):
    assert main([]) == 1
    assert main(["embed", "--data", "x.csv"]) == 1
    # the key is not a command-line option
    assert main(["codegen", "--recipients", "2", "--length", "8", "--key", KEY, "--out", str(tmp_path / "b")]) == 1


def test_missing_key(tmp_path, monkeypatch):
    monkeypatch.delenv("FP_SECRET_KEY", raising=False)
    assert main(["codegen", "--recipients", "2", "--length", "8", "--out", str(tmp_path / "b.json")]) == 1


def test_key_file(tmp_path, monkeypatch):
    monkeypatch.delenv("FP_SECRET_KEY", raising=False)
    (tmp_path / "key").write_text(KEY + "\n")
    assert main(["codegen", "--kind", "hash", "--recipients", "2", "--length", "8",
                 "--key-file", str(tmp_path / "key"), "--out", str(tmp_path / "a.json")]) == 0
    monkeypatch.setenv("FP_SECRET_KEY", KEY)
    assert main(["codegen", "--kind", "hash", "--recipients", "2", "--length", "8",
                 "--out", str(tmp_path / "b.json")]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_embed_detect_roundtrip(workspace):
    ws = workspace
    assert embed(ws, 1) == 0
    manifest = json.loads((ws / "out" / "recipient_1.manifest.json").read_text())
    assert manifest["expected_mean_redundancy"] >= 16
    assert manifest["output"] == "recipient_1.csv"
    assert main(["detect", "--data", str(ws / "out" / "recipient_1.csv"),
                 "--manifest", str(ws / "out" / "recipient_1.manifest.json"),
                 "--codebook", str(ws / "book.json"), "--recipient", "1",
                 "--out", str(ws / "det.json")]) == 0
    det = json.loads((ws / "det.json").read_text())
    assert det["dc"] == 1.0
    assert main(["accuse", "--detection", str(ws / "det.json"), "--codebook", str(ws / "book.json"),
                 "--out", str(ws / "acc.json")]) == 0
    acc = json.loads((ws / "acc.json").read_text())
    assert acc["accused"] == [1]
    assert acc["dc"][1] == 1.0


def test_low_redundancy_warning(workspace, capsys):
    assert embed(workspace, 0, gamma="200") == 0
    assert "redundancy" in capsys.readouterr().err


def test_recipients_differ(workspace):
    assert embed(workspace, 0) == 0
    assert embed(workspace, 2) == 0
    a = load_csv(workspace / "out" / "recipient_0.csv", "id")
    b = load_csv(workspace / "out" / "recipient_2.csv", "id")
    assert diff_cells(a, b) > 0


def test_missing_codebook(workspace):
    (workspace / "book.json").unlink()
    assert embed(workspace, 0) != 0


def test_detect_refuses_mismatched_config(workspace):
    ws = workspace
    assert embed(ws, 0) == 0
    rc = main(["detect", "--data", str(ws / "out" / "recipient_0.csv"),
               "--manifest", str(ws / "out" / "recipient_0.manifest.json"), "--gamma", "3"])
    assert rc == 2
    doc = json.loads((ws / "out" / "recipient_0.manifest.json").read_text())
    doc["config"]["k"] = 7
    (ws / "bad.json").write_text(json.dumps(doc))
    assert main(["detect", "--data", str(ws / "out" / "recipient_0.csv"), "--manifest", str(ws / "bad.json")]) == 2


def test_outputs_are_byte_identical(workspace):
    ws = workspace
    first = (ws / "groups.json").read_bytes()
    book = (ws / "book.json").read_bytes()
    assert main(["corrmap", "--data", str(ws / "data.csv"), "--out", str(ws / "groups.json")]) == 0
    assert main(["codegen", "--kind", "hash", "--recipients", "3", "--length", "16",
                 "--out", str(ws / "book.json")]) == 0
    assert (ws / "groups.json").read_bytes() == first
    assert (ws / "book.json").read_bytes() == book
    outputs = []
    for _ in range(2):
        assert embed(ws, 1) == 0
        assert main(["detect", "--data", str(ws / "out" / "recipient_1.csv"),
                     "--manifest", str(ws / "out" / "recipient_1.manifest.json"), "--out", str(ws / "d.json")]) == 0
        outputs.append(tuple((ws / p).read_bytes() for p in
                             ("out/recipient_1.csv", "out/recipient_1.manifest.json", "d.json")))
    assert outputs[0] == outputs[1]


def test_attack_identity_and_sweep(workspace):
    ws = workspace
    src = ws / "data.csv"
    assert main(["attack", "--data", str(src), "--kind", "horizontal", "--strength", "0",
                 "--out", str(ws / "h0.csv")]) == 0
    assert (ws / "h0.csv").read_bytes() == src.read_bytes()
    assert main(["attack", "--data", str(src), "--kind", "flip", "--strengths", "0.1..0.9",
                 "--out", str(ws / "sweep")]) == 0
    names = sorted(p.name for p in (ws / "sweep").iterdir())
    assert len(names) == 9 and "flip_0.5.csv" in names


def test_cluster_flip_deterministic(workspace):
    ws = workspace
    assert embed(ws, 0) == 0
    runs = []
    for i in range(2):
        out = ws / f"cf{i}.csv"
        assert main(["attack", "--data", str(ws / "out" / "recipient_0.csv"), "--kind", "cluster_flip",
                     "--strength", "0.5", "--influence", "0.2", "--seed", "4",
                     "--manifest", str(ws / "out" / "recipient_0.manifest.json"), "--out", str(out)]) == 0
        runs.append(out.read_bytes())
    assert runs[0] == runs[1]
    assert runs[0] != (ws / "out" / "recipient_0.csv").read_bytes()


def test_collusion_command(workspace):
    ws = workspace
    assert embed(ws, 0) == 0 and embed(ws, 1) == 0
    assert main(["attack", "--data", str(ws / "out" / "recipient_0.csv"), "--copies",
                 str(ws / "out" / "recipient_1.csv"), "--kind", "collude_average",
                 "--out", str(ws / "avg.csv")]) == 0
    assert load_csv(ws / "avg.csv", "id").n == 1000


def test_evaluate_identity(workspace):
    ws = workspace
    assert main(["evaluate", "--original", str(ws / "data.csv"), "--data", str(ws / "data.csv"),
                 "--out", str(ws / "ev")]) == 0
    doc = json.loads((ws / "ev" / "fidelity.json").read_text())
    assert all(v == 0 for v in doc["hellinger"].values())
    assert all(v == 0 for v in doc["kl"].values())
    assert doc["accuracy"] == 1.0 and doc["correlation_change"]["max"] == 0
    rows = list(csv.reader(open(ws / "ev" / "fidelity.csv")))
    assert rows[0][-1] == "mean" and [r[0] for r in rows[1:]] == ["hellinger", "kl"]


def test_evaluate_sweep(workspace):
    ws = workspace
    assert embed(ws, 2) == 0
    fp = ws / "out" / "recipient_2.csv"
    assert main(["evaluate", "--original", str(ws / "data.csv"), "--data", str(fp),
                 "--manifest", str(ws / "out" / "recipient_2.manifest.json"),
                 "--kind", "horizontal", "--strengths", "0,0.5", "--seeds", "2",
                 "--codebook", str(ws / "book.json"), "--recipient", "2", "--out", str(ws / "ev")]) == 0
    rows = list(csv.DictReader(open(ws / "ev" / "sweep.csv")))
    assert len(rows) == 4
    assert float(rows[0]["dc"]) == 1.0
    assert np.all([0 <= float(r["dc"]) <= 1 for r in rows])
