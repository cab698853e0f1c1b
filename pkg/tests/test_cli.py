"""End-to-end pipeline harness: subcommands, exit codes, overrides, replay."""

import json
import subprocess
import sys

import pytest

from vocalign.atoms import ingest, write_atoms
from vocalign.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from vocalign.manifest import load_manifest
from vocalign.synthetic import generate_corpus

SMALL_NET = {
    "embed_dim": 16,
    "lstm_hidden": 8,
    "dense1_units": 16,
    "dense2_units": 8,
    "max_tokens": 8,
    "batch_size": 64,
    "epochs": 2,
    "negative_ratio": 2.0,
}


@pytest.fixture(scope="module")
def atom_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "atoms.psv"
    write_atoms(generate_corpus(concepts=30, seed=3), path)
    return path


def _write_config(tmp_path, atom_file, name="config.json", **overrides):
    values = {"atom_file": str(atom_file), "out_dir": str(tmp_path / "run"), **SMALL_NET}
    values.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(values), encoding="utf-8")
    return path, tmp_path / "run"


def test_full_pipeline(tmp_path, atom_file, capsys):
    config, run = _write_config(tmp_path, atom_file)
    assert main(["ingest", "--config", str(config)]) == EXIT_OK
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    assert main(["train", "--config", str(config)]) == EXIT_OK
    assert main(["eval", "--config", str(config)]) == EXIT_OK
    assert main(["cross-eval", "--config", str(config)]) == EXIT_OK
    capsys.readouterr()
    assert main(["report", str(run)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "| lexical | order=ij |" in out
    assert "siamese" in out

    for artifact in (
        "config.json",
        "pairs_train.tsv",
        "pairs_test.tsv",
        "model.pt",
        "train_report.json",
        "metrics_siamese.csv",
        "metrics_siamese.md",
        "scores_siamese.tsv",
        "metrics_cross.csv",
        "scores_cross_ij.tsv",
        "scores_cross_ji.tsv",
        "manifest.jsonl",
    ):
        assert (run / artifact).is_file(), artifact

    entries = load_manifest(run)
    assert [e["command"] for e in entries] == [
        "ingest",
        "gen-pairs",
        "train",
        "eval",
        "cross-eval",
    ]
    for entry in entries:
        assert entry["config_sha256"]
        for role in entry["outputs"].values():
            assert len(role["sha256"]) == 64

    report = json.loads((run / "train_report.json").read_text())
    assert len(report["losses"]) == 2
    assert len(report["val_metrics"]) == 2


def test_gen_pairs_refuses_overwrite_then_force(tmp_path, atom_file):
    config, _ = _write_config(tmp_path, atom_file)
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_VALIDATION
    assert main(["gen-pairs", "--config", str(config), "--force"]) == EXIT_OK


def test_train_refuses_overwrite(tmp_path, atom_file):
    config, _ = _write_config(tmp_path, atom_file)
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    assert main(["train", "--config", str(config)]) == EXIT_OK
    assert main(["train", "--config", str(config)]) == EXIT_VALIDATION
    assert main(["train", "--config", str(config), "--force"]) == EXIT_OK


def test_missing_atom_file(tmp_path):
    config, _ = _write_config(tmp_path, tmp_path / "nowhere.psv")
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_VALIDATION


def test_bad_config_key_and_type(tmp_path, atom_file):
    config, _ = _write_config(tmp_path, atom_file, negativ_ratio=2.0)
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_VALIDATION
    config, _ = _write_config(tmp_path, atom_file, epochs="two")
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_VALIDATION
    bad = tmp_path / "broken.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["gen-pairs", "--config", str(bad)]) == EXIT_VALIDATION


def test_env_overrides_paths_only(tmp_path, atom_file, monkeypatch):
    values = {"out_dir": str(tmp_path / "run"), **SMALL_NET}
    config = tmp_path / "config.json"
    config.write_text(json.dumps(values), encoding="utf-8")
    monkeypatch.setenv("VOCALIGN_ATOM_FILE", str(atom_file))
    monkeypatch.setenv("VOCALIGN_EPOCHS", "99")  # not a path key: must be ignored
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    resolved = json.loads((tmp_path / "run" / "config.json").read_text())
    assert resolved["atom_file"] == str(atom_file)
    assert resolved["epochs"] == 2


def test_gen_pairs_replay_is_byte_identical(tmp_path, atom_file):
    config_a, run_a = _write_config(tmp_path, atom_file, name="a.json", out_dir=str(tmp_path / "ra"))
    config_b, run_b = _write_config(tmp_path, atom_file, name="b.json", out_dir=str(tmp_path / "rb"))
    assert main(["gen-pairs", "--config", str(config_a)]) == EXIT_OK
    assert main(["gen-pairs", "--config", str(config_b)]) == EXIT_OK
    run_a, run_b = tmp_path / "ra", tmp_path / "rb"
    for name in ("pairs_train.tsv", "pairs_test.tsv"):
        assert (run_a / name).read_bytes() == (run_b / name).read_bytes()


def test_seed_flag_changes_pairs(tmp_path, atom_file):
    config, run = _write_config(tmp_path, atom_file)
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    baseline = (run / "pairs_train.tsv").read_bytes()
    assert main(["gen-pairs", "--config", str(config), "--seed", "9", "--force"]) == EXIT_OK
    assert (run / "pairs_train.tsv").read_bytes() != baseline
    resolved = json.loads((run / "config.json").read_text())
    assert resolved["seed"] == 9


def test_extract_then_train_on_extracted_vectors(tmp_path, atom_file):
    config, run = _write_config(
        tmp_path,
        atom_file,
        encoder_model="mock:16x5",
        siamese_tokenizer="mock:16x5",
    )
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    assert main(["extract", "--config", str(config)]) == EXIT_OK
    vectors = run / "vectors.txt"
    assert vectors.is_file()
    header = vectors.read_text(encoding="utf-8").splitlines()[0].split()
    assert header[1] == "16"

    with_vectors, _ = _write_config(
        tmp_path,
        atom_file,
        name="config2.json",
        encoder_model="mock:16x5",
        siamese_tokenizer="mock:16x5",
        vector_file=str(vectors),
    )
    assert main(["train", "--config", str(with_vectors)]) == EXIT_OK
    assert main(["eval", "--config", str(with_vectors)]) == EXIT_OK
    table = (run / "metrics_siamese.md").read_text(encoding="utf-8")
    assert "siamese[static]" in table


def test_extract_dim_mismatch_is_validation_error(tmp_path, atom_file):
    config, run = _write_config(
        tmp_path, atom_file, encoder_model="mock:12x5", siamese_tokenizer="mock:12x5"
    )
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    assert main(["extract", "--config", str(config)]) == EXIT_OK
    bad, _ = _write_config(
        tmp_path,
        atom_file,
        name="bad.json",
        siamese_tokenizer="mock:12x5",
        vector_file=str(run / "vectors.txt"),  # dim 12, embed_dim 16
    )
    assert main(["train", "--config", str(bad)]) == EXIT_VALIDATION


def test_unknown_encoder_locator_is_runtime_error(tmp_path, atom_file):
    config, _ = _write_config(tmp_path, atom_file, encoder_model="quantum:thing")
    assert main(["extract", "--config", str(config)]) == EXIT_RUNTIME


def test_eval_threshold_flag_does_not_break_checkpoint(tmp_path, atom_file):
    config, run = _write_config(tmp_path, atom_file)
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    assert main(["train", "--config", str(config)]) == EXIT_OK
    assert main(["eval", "--config", str(config), "--threshold", "0.9"]) == EXIT_OK
    table = (run / "metrics_siamese.csv").read_text(encoding="utf-8")
    assert "thr=0.9" in table


def test_report_without_metrics_fails(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", str(empty)]) == EXIT_VALIDATION


def test_report_writes_combined_file(tmp_path, atom_file, capsys):
    config, run = _write_config(tmp_path, atom_file)
    assert main(["gen-pairs", "--config", str(config)]) == EXIT_OK
    assert main(["cross-eval", "--config", str(config)]) == EXIT_OK
    combined = tmp_path / "combined.csv"
    assert main(["report", str(run), "--style", "csv", "--out", str(combined)]) == EXIT_OK
    capsys.readouterr()
    lines = combined.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "model,config,accuracy,precision,recall,f1"
    assert len(lines) == 3  # ij and ji rows


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_synthetic_module_entry_point(tmp_path):
    out = tmp_path / "toy.psv"
    proc = subprocess.run(
        [sys.executable, "-m", "vocalign.synthetic", "--out", str(out), "--concepts", "5"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    store = ingest(out)
    assert len(store.cuis) == 5


def test_cli_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "vocalign.cli", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "vocalign" in proc.stdout
