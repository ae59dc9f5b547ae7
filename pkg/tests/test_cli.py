"""CLI subcommands, driven through click's test runner."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

import synth
from ambiguard import (
    AmbiguityLabel,
    ClassifierModel,
    DatasetRecord,
    HashingEmbedder,
    Query,
    save_checkpoint_file,
    serialize_dataset,
)
from ambiguard.classifier import HeadWeights
from ambiguard.cli import main
from ambiguard.features import FeatureVector, fit_scaler

runner = CliRunner()


def _forced_model(bias: float) -> ClassifierModel:
    head = HeadWeights(
        W1=np.zeros((11, 4)), b1=np.zeros(4), W2=np.zeros((4, 2)),
        b2=np.array([0.0, bias]), dropout_p=0.0,
    )
    scaler = fit_scaler([FeatureVector(f_ql=v, f_rc=0, f_cli=0.0) for v in (1, 2, 3)])
    return ClassifierModel(head=head, scaler=scaler, embedder=HashingEmbedder(dim=8))


@pytest.fixture(scope="module")
def clear_checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "clear.ckpt"
    save_checkpoint_file(_forced_model(bias=-5.0), path)
    return str(path)


def _tiny_dataset() -> str:
    records = [
        DatasetRecord("c-1", Query("What is the size of the weekly retail dataset?"), AmbiguityLabel.CLEAR),
        DatasetRecord("c-2", Query("Show me the owner of the churn segment"), AmbiguityLabel.CLEAR),
        DatasetRecord("c-3", Query("How many audiences exist today?"), AmbiguityLabel.CLEAR),
        DatasetRecord("a-1", Query("What is the size?"), AmbiguityLabel.AMBIGUOUS),
        DatasetRecord("a-2", Query("Show me the owner"), AmbiguityLabel.AMBIGUOUS),
        DatasetRecord("a-3", Query("How many do I have?"), AmbiguityLabel.AMBIGUOUS),
    ]
    return serialize_dataset(records)


def test_help_lists_subcommands():
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for name in ("mask", "classify", "train", "augment", "eval", "compare", "serve"):
        assert name in result.output


def test_mask_stdin_stdout():
    result = runner.invoke(
        main, ["mask"], input="What is the total size of 124abcde?\nHow many do I have?\n"
    )
    assert result.exit_code == 0
    assert result.output == "What is the total size of ENTITY?\nHow many do I have?\n"


def test_mask_custom_common_words(tmp_path):
    words = tmp_path / "words.txt"
    words.write_text("my-dataset\n")
    result = runner.invoke(
        main, ["mask", "--common-words", str(words)], input="Is my-dataset ready?\n"
    )
    assert result.exit_code == 0
    assert result.output == "Is my-dataset ready?\n"


def test_mask_file_options(tmp_path):
    src = tmp_path / "in.txt"
    dst = tmp_path / "out.txt"
    src.write_text("check report_7 now\n")
    result = runner.invoke(main, ["mask", "--input", str(src), "--output", str(dst)])
    assert result.exit_code == 0
    assert dst.read_text() == "check ENTITY now\n"


def test_classify_jsonl(clear_checkpoint):
    result = runner.invoke(
        main,
        ["classify", "--checkpoint", clear_checkpoint],
        input="What is the segment size?\nWhat is the total size of 124abcde?\n",
    )
    assert result.exit_code == 0
    lines = [json.loads(line) for line in result.output.splitlines()]
    assert lines[0]["label"] == "clear"
    assert lines[0]["source"] == "model"
    assert lines[1]["label"] == "ambiguous"
    assert lines[1]["source"] == "lexical_override"
    assert set(lines[0]) == {"query", "label", "type", "score", "source"}


def test_classify_missing_checkpoint_is_usage_error(tmp_path):
    result = runner.invoke(main, ["classify", "--checkpoint", str(tmp_path / "none.ckpt")])
    assert result.exit_code == 2  # click validates the path itself


def test_train_writes_checkpoint_and_summary(tmp_path):
    data = tmp_path / "train.jsonl"
    data.write_text(_tiny_dataset())
    out = tmp_path / "model.ckpt"
    result = runner.invoke(
        main,
        [
            "train", "--data", str(data), "--val", str(data), "--out", str(out),
            "--dim", "32", "--hidden", "8", "--epochs", "1", "--eval-every", "2", "--seed", "3",
        ],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert summary["checkpoint"] == str(out)
    assert summary["evaluations"] >= 1
    assert 0.0 <= summary["val_f1"] <= 1.0
    assert out.exists()


def test_train_is_deterministic_across_runs(tmp_path):
    data = tmp_path / "train.jsonl"
    data.write_text(_tiny_dataset())
    args = ["--data", str(data), "--val", str(data), "--dim", "32", "--hidden", "8", "--seed", "7"]
    out1, out2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    r1 = runner.invoke(main, ["train", *args, "--out", str(out1)])
    r2 = runner.invoke(main, ["train", *args, "--out", str(out2)])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_train_rejects_single_class_data(tmp_path):
    records = [DatasetRecord("c-1", Query("only clear here"), AmbiguityLabel.CLEAR)]
    data = tmp_path / "bad.jsonl"
    data.write_text(serialize_dataset(records))
    out = tmp_path / "model.ckpt"
    result = runner.invoke(main, ["train", "--data", str(data), "--val", str(data), "--out", str(out)])
    assert result.exit_code == 1
    assert result.stderr.startswith("error:")


def test_augment_appends_generated_records(tmp_path):
    result = runner.invoke(main, ["augment", "--seed", "5"], input=_tiny_dataset())
    assert result.exit_code == 0
    lines = [json.loads(line) for line in result.output.splitlines()]
    ids = [r["id"] for r in lines]
    assert "c-1" in ids  # sources preserved
    generated = [r for r in lines if r["id"] not in {"c-1", "c-2", "c-3", "a-1", "a-2", "a-3"}]
    assert generated
    assert all(r["label"] == "ambiguous" for r in generated)


def test_augment_report_and_determinism(tmp_path):
    report_path = tmp_path / "report.json"
    r1 = runner.invoke(
        main, ["augment", "--seed", "5", "--report", str(report_path)], input=_tiny_dataset()
    )
    r2 = runner.invoke(main, ["augment", "--seed", "5"], input=_tiny_dataset())
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert r1.output == r2.output  # byte-stable under a fixed seed
    report = json.loads(report_path.read_text())
    assert report["seed"] == 5
    assert report["generated"] == sum(report["by_rule"].values())


def test_augment_bad_input_fails_cleanly():
    result = runner.invoke(main, ["augment"], input="not json\n")
    assert result.exit_code == 1
    assert result.stderr.startswith("error:")
    assert "line 1" in result.stderr


def test_eval_metrics(clear_checkpoint, tmp_path):
    data = tmp_path / "eval.jsonl"
    data.write_text(_tiny_dataset())
    result = runner.invoke(main, ["eval", "--checkpoint", clear_checkpoint, "--data", str(data)])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    # the forced-clear model misses every plain ambiguous query
    assert report["n"] == 6
    assert report["tn"] == 3
    assert report["recall"] == 0.0
    assert set(report) >= {"precision", "recall", "f1", "accuracy", "tp", "fp", "tn", "fn"}


def test_eval_rejects_unlabeled(clear_checkpoint, tmp_path):
    data = tmp_path / "eval.jsonl"
    data.write_text('{"id": "u-1", "query": "no label here"}\n')
    result = runner.invoke(main, ["eval", "--checkpoint", clear_checkpoint, "--data", str(data)])
    assert result.exit_code == 1
    assert "labels" in result.stderr


def test_compare_prints_table_and_writes_json(clear_checkpoint, tmp_path):
    records = synth.golden_corpus(6)
    data = tmp_path / "golden.jsonl"
    data.write_text(serialize_dataset(records))
    table = {
        r.query.text: r.golden_rewrite
        for r in records
        if r.label is AmbiguityLabel.AMBIGUOUS
    }
    table_path = tmp_path / "table.json"
    table_path.write_text(json.dumps(table))
    json_out = tmp_path / "report.json"
    result = runner.invoke(
        main,
        [
            "compare", "--checkpoint", clear_checkpoint, "--data", str(data),
            "--rewriter", "mock", "--mock-table", str(table_path),
            "--json-out", str(json_out),
        ],
    )
    assert result.exit_code == 0, result.output
    for mode in ("no_rewrite", "always_rewrite", "guided"):
        assert mode in result.output
    report = json.loads(json_out.read_text())
    assert [r["mode"] for r in report] == ["no_rewrite", "always_rewrite", "guided"]
    assert all(0.0 <= r["mean_bleu"] <= 1.0 for r in report)


def test_compare_requires_goldens(clear_checkpoint, tmp_path):
    data = tmp_path / "nogold.jsonl"
    data.write_text(_tiny_dataset())
    result = runner.invoke(main, ["compare", "--checkpoint", clear_checkpoint, "--data", str(data)])
    assert result.exit_code == 1
    assert "golden" in result.stderr


def test_serve_requires_checkpoint_or_config():
    result = runner.invoke(main, ["serve"])
    assert result.exit_code == 1
    assert "either --config or --checkpoint" in result.stderr


def test_serve_rejects_unknown_config_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"checkpoint_path": "x.ckpt", "no_such_key": 1}))
    result = runner.invoke(main, ["serve", "--config", str(cfg)])
    assert result.exit_code == 1
    assert "unknown config keys" in result.stderr


def test_version_flag():
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "0.1.0" in result.output
