"""Smoke tests for the python extension. Run against the installed `lguided`
package or, in-tree, against the freshly built `_lguided` module (ctest sets
PYTHONPATH accordingly)."""

import json
import math

import numpy as np
import pytest

try:
    import lguided as lg
except ImportError:
    import _lguided as lg


def test_softmax_basics():
    p = lg.softmax([1.0, 2.0, 3.0])
    assert abs(sum(p) - 1.0) < 1e-9
    assert p[2] > p[1] > p[0]
    assert abs(p[0] - 0.0900305731703804580) < 1e-12


def test_matmul_and_relu_numpy():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[1.0], [1.0]])
    out = lg.matmul(a, b)
    assert out.shape == (2, 1)
    assert out[0, 0] == 3.0 and out[1, 0] == 7.0

    r = lg.relu(np.array([[-1.0, 2.0]]))
    assert r[0, 0] == 0.0 and r[0, 1] == 2.0


def test_cosine_similarity():
    assert lg.cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert abs(lg.cosine_similarity([1.0, 2.0], [2.0, 4.0]) - 1.0) < 1e-12


def test_tokenize():
    assert lg.tokenize("Don't stop!") == ["don", "'", "t", "stop", "!"]


def test_gradient_check_toy():
    assert lg.gradient_check_toy(seed=5) < 1e-4


def test_train_eval_attend_roundtrip(tmp_path):
    data_dir = str(tmp_path / "data")
    out_dir = str(tmp_path / "out")
    info = lg.synth_corpus_tsv(data_dir, num_labels=2, docs_per_class=20,
                               vocab_per_class=8, doc_len=10, noise_rate=0.1,
                               seed=3)
    assert info["labels"] == ["class0", "class1"]

    code, out, err = lg.run_cli([
        "train", "--data", data_dir, "--out", out_dir,
        "--m-p", "10", "--h", "5", "--epochs", "8", "--lr", "0.01", "--seed", "9",
    ])
    assert code == 0, err
    summary = json.loads(out)
    assert summary["epochs"] == 8

    metrics = lg.evaluate_checkpoint(out_dir + "/checkpoint.lgdl", data_dir,
                                     split="test")
    assert metrics["total"] == 8
    assert metrics["accuracy"] >= 0.5  # learnable fixture, chance is 0.5

    code, out, err = lg.run_cli([
        "attend", "--checkpoint", out_dir + "/checkpoint.lgdl",
        "--data", data_dir, "--split", "test", "--doc-id", "test-1",
        "--out", str(tmp_path / "att"),
    ])
    assert code == 0, err
    record = json.loads((tmp_path / "att" / "test-1.json").read_text())
    for row in record["weights"]:
        assert len(row) == len(record["tokens"])
        assert math.isclose(sum(row), 1.0, abs_tol=1e-9)


def test_cli_determinism(tmp_path):
    data_dir = str(tmp_path / "data")
    lg.synth_corpus_tsv(data_dir, num_labels=2, docs_per_class=10,
                        vocab_per_class=6, doc_len=8, seed=11)
    args = ["train", "--data", data_dir, "--out", None,
            "--m-p", "8", "--h", "4", "--epochs", "3", "--seed", "21"]
    artifacts = []
    for name in ("run_a", "run_b"):
        args[4] = str(tmp_path / name)
        code, _out, err = lg.run_cli(args)
        assert code == 0, err
        artifacts.append(((tmp_path / name / "checkpoint.lgdl").read_bytes(),
                          (tmp_path / name / "metrics.ndjson").read_bytes()))
    assert artifacts[0] == artifacts[1]


def test_usage_errors_exit_2():
    code, _out, err = lg.run_cli(["train", "--data", "/nowhere", "--out",
                                  "/nowhere", "--t", "0"])
    assert code == 2
    assert "t must be >= 1" in err
