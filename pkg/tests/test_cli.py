import json

import pytest

from emoforge.cli import main
from emoforge.config import CliConfig
from emoforge.errors import ConfigError

DEMO = {
    "experiment": {"seed_sizes": [40], "increment": 10, "n_increments": 2, "folds": 2,
                   "holdout_n": 100, "rng_seed": 1},
    "train": {"n_rounds": 10, "max_depth": 3},
    "generation": {"inter_call_delay_ms": 0},
}


@pytest.fixture
def setup(tmp_path):
    data = tmp_path / "data"
    assert main(["demo-data", str(data), "-n", "500"]) == 0
    cfg = tmp_path / "demo.json"
    cfg.write_text(json.dumps(DEMO))
    base = ["--config", str(cfg), "--data-dir", str(data), "--out-dir", str(tmp_path / "runs")]
    return tmp_path, base


def _hash(out):
    return next(l.split(": ")[1] for l in out.splitlines() if l.startswith("config_hash"))


def test_ingest(setup, capsys):
    _, base = setup
    assert main(["ingest", *base]) == 0
    out = capsys.readouterr().out
    assert "samples: 500" in out and "optimism" in out and "config_hash:" in out


def test_split_train_keywords_generate_lingstats(setup, capsys):
    tmp, base = setup
    assert main(["split", *base]) == 0
    run_dir = tmp / "runs" / _hash(capsys.readouterr().out)
    plans = json.loads((run_dir / "splits.json").read_text())
    assert len(plans) == 2

    assert main(["train", *base, "--fold", "1"]) == 0
    assert "macro_f1:" in capsys.readouterr().out
    assert (run_dir / "train" / "seed40_fold1" / "model.json").exists()

    assert main(["keywords", *base]) == 0
    kw = json.loads((run_dir / "keywords" / "seed40.json").read_text())
    assert set(kw) == {"anger", "joy", "optimism", "sadness"}

    assert main(["generate", *base, "--strategy", "Naive"]) == 0
    lines = (run_dir / "synthetic" / "Naive_seed40.jsonl").read_text().splitlines()
    assert len(lines) == 20
    assert main(["generate", *base, "--emotion", "joy", "--count", "7"]) == 0
    lines = (run_dir / "synthetic" / "ShapGuided_seed40.jsonl").read_text().splitlines()
    assert len(lines) == 7

    assert main(["lingstats", *base, "--no-figures"]) == 0
    out = capsys.readouterr().out
    assert "jaccard" in out
    assert (run_dir / "lingstats" / "seed40" / "diversity.csv").exists()


def test_run_rows_and_rerun(setup, capsys):
    tmp, base = setup
    assert main(["run", *base, "--backend", "mock"]) == 0
    h = _hash(capsys.readouterr().out)
    results = tmp / "runs" / h / "results.csv"
    first = results.read_bytes()
    n_rows = len(first.decode().splitlines()) - 1
    assert n_rows == 3 * 2 * (2 + 1)
    assert main(["run", *base, "--backend", "mock"]) == 0
    assert results.read_bytes() == first
    manifest = json.loads((tmp / "runs" / h / "manifest.json").read_text())
    assert manifest["config_hash"] == h
    assert manifest["cli_config"]["experiment"]["folds"] == 2


def test_seed_flag_changes_hash(setup, capsys):
    _, base = setup
    main(["ingest", *base])
    a = _hash(capsys.readouterr().out)
    main(["ingest", *base, "--seed", "99"])
    b = _hash(capsys.readouterr().out)
    assert a != b


def test_ablation_flag(setup, capsys):
    tmp, base = setup
    assert main(["run", *base, "--ablation", "--no-figures"]) == 0
    h = _hash(capsys.readouterr().out)
    text = (tmp / "runs" / h / "results.csv").read_text()
    assert "ShapGuidedNoExemplars" in text and "Naive" not in text


def test_http_without_key(setup, capsys, monkeypatch, tmp_path):
    _, base = setup
    monkeypatch.delenv("EMOFORGE_API_KEY", raising=False)
    cfg = dict(DEMO, backend={"kind": "http", "endpoint_url": "http://localhost:9/v1/messages"})
    path = tmp_path / "http.json"
    path.write_text(json.dumps(cfg))
    code = main(["run", *base[2:], "--config", str(path)])
    assert code == 4
    assert "EMOFORGE_API_KEY" in capsys.readouterr().err


def test_unknown_key_exit_2(setup, tmp_path, capsys):
    _, base = setup
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"experiment": {"foldz": 3}}))
    assert main(["ingest", "--config", str(path)]) == 2
    assert "foldz" in capsys.readouterr().err


def test_data_errors_exit_3(tmp_path, capsys):
    (tmp_path / "train_text.txt").write_text("a\nb\n")
    (tmp_path / "train_labels.txt").write_text("0\n")
    assert main(["ingest", "--data-dir", str(tmp_path), "--out-dir", str(tmp_path)]) == 3
    assert main(["ingest", "--out-dir", str(tmp_path)]) == 2


def test_config_roundtrip_and_validation():
    cfg = CliConfig.from_dict(DEMO)
    again = CliConfig.from_dict(cfg.to_dict())
    assert again.config_hash() == cfg.config_hash()
    assert again.experiment == cfg.experiment
    with pytest.raises(ConfigError):
        CliConfig.from_dict({"nope": {}})
    with pytest.raises(ConfigError):
        CliConfig.from_dict({"train": {"depth": 3}})
    with pytest.raises(ConfigError):
        CliConfig.from_dict({"backend": {"kind": "grpc"}})
    with pytest.raises(ConfigError):
        CliConfig.from_dict({"experiment": {"folds": 1}})
