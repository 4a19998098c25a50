import json

import pytest

from closedkg.cli import ConfigError, DEFAULTS, main, read_config, validate_config
from closedkg.datasets import toy_paths

TRIPLES, CLASSES, CORPUS = (str(p) for p in toy_paths())


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_read_config_parses_flat_key_values(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment\n"
        "\n"
        "seed = 7\n"
        "lr=0.25\n"
        "kg = data/some.tsv\n",
        encoding="utf-8",
    )
    assert read_config(str(path)) == {
        "seed": "7", "lr": "0.25", "kg": "data/some.tsv"
    }


def test_read_config_rejects_bare_lines(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed 7\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="key = value"):
        read_config(str(path))


def test_validate_config_diagnostics():
    assert validate_config({"seed": "3", "tau": "0.5"}) == ([], [])
    errors, _ = validate_config({"bogus_key": "1"})
    assert errors == ["unknown config key: bogus_key"]
    errors, _ = validate_config({"seed": "not-an-int"})
    assert any("invalid value" in e for e in errors)
    errors, _ = validate_config({"tau": "-1"})
    assert any("tau" in e for e in errors)
    errors, warnings = validate_config({"negative_base_hop": "1"})
    assert errors == []
    assert any("degrade" in w for w in warnings)


def test_defaults_cover_every_setting():
    assert DEFAULTS["seed"] == 42
    assert DEFAULTS["K"] == 2 and DEFAULTS["k"] == 3 and DEFAULTS["L"] == 64
    assert DEFAULTS["d1"] == 768 and DEFAULTS["M"] == 6


def test_stats_stdout_payload(capsys):
    code, out, err = run(
        capsys, "stats", "--kg", TRIPLES, "--classes", CLASSES,
        "--corpus", CORPUS, "--samples", "20",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["node_count"] == 58
    assert payload["edge_count"] == 79
    assert payload["coverage_ratio"] == 24 / 42
    assert 0.0 <= payload["max_pbc_ratio"] <= 1.0
    assert 0.0 <= payload["subgraph_density"] <= 0.5
    assert payload["samples"] == 20 and payload["seed"] == 42
    assert "triples_loaded=79" in err


def test_stats_deterministic_per_seed(capsys):
    args = ("stats", "--kg", TRIPLES, "--classes", CLASSES, "--samples", "20")
    _, out_a, _ = run(capsys, *args, "--seed", "5")
    _, out_b, _ = run(capsys, *args, "--seed", "5")
    _, out_c, _ = run(capsys, *args, "--seed", "6")
    assert out_a == out_b
    da = json.loads(out_a)["subgraph_density"]
    dc = json.loads(out_c)["subgraph_density"]
    assert da != dc


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "kg = %s\nclasses = %s\nseed = 7\nsamples = 15\n" % (TRIPLES, CLASSES),
        encoding="utf-8",
    )
    code, out, _ = run(capsys, "stats", "--config", str(cfg))
    assert code == 0
    payload = json.loads(out)
    assert payload["seed"] == 7 and payload["samples"] == 15
    code, out, _ = run(capsys, "stats", "--config", str(cfg), "--seed", "9")
    assert code == 0
    assert json.loads(out)["seed"] == 9


def test_config_warnings_keep_exit_zero(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "kg = %s\nclasses = %s\nnegative_base_hop = 1\n" % (TRIPLES, CLASSES),
        encoding="utf-8",
    )
    code, out, err = run(capsys, "stats", "--config", str(cfg), "--samples", "5")
    assert code == 0
    assert "warning:" in err and "degrade" in err
    assert json.loads(out)["node_count"] == 58


def test_config_errors_exit_one(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tau = -2\nwhatever = 1\n", encoding="utf-8")
    code, out, err = run(capsys, "stats", "--config", str(cfg),
                         "--kg", TRIPLES, "--classes", CLASSES)
    assert code == 1
    assert "error: unknown config key: whatever" in err
    assert "tau" in err
    assert out == ""


def test_missing_required_input_exits_one(capsys):
    code, _, err = run(capsys, "embed")
    assert code == 1
    assert "error:" in err and "--classes" in err


def test_unreadable_input_exits_one(tmp_path, capsys):
    code, _, err = run(capsys, "stats", "--kg", str(tmp_path / "missing.tsv"),
                       "--classes", CLASSES)
    assert code == 1
    assert "error:" in err


def test_embed_writes_tsv_and_meta(tmp_path, capsys):
    out = tmp_path / "emb.tsv"
    code, _, err = run(
        capsys, "embed", "--classes", CLASSES, "--out", str(out),
        "--dim", "4", "--epochs", "2", "--neg", "3", "--burn-in", "1",
    )
    assert code == 0
    rows = out.read_text(encoding="utf-8").splitlines()
    assert len(rows) == 64  # 58 entities + 5 classes + 1 root
    assert all(len(r.split("\t")) == 5 for r in rows)
    meta = (tmp_path / "emb.tsv.meta").read_text(encoding="utf-8")
    assert "dim=4" in meta
    assert "final mean loss" in err


def test_augment_writes_jsonl(tmp_path, capsys):
    out = tmp_path / "samples.jsonl"
    code, _, err = run(
        capsys, "augment", "--kg", TRIPLES, "--classes", CLASSES,
        "--out", str(out), "--k", "1", "--L", "16",
    )
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert "wrote %d records" % len(lines) in err
    parsed = [json.loads(line) for line in lines]
    kinds = {p["kind"] for p in parsed}
    assert kinds == {"positive", "negative"}
    assert all(p["tokens"][0] == "[CLS]" for p in parsed)


def test_augment_streams_to_stdout(capsys):
    code, out, _ = run(capsys, "augment", "--kg", TRIPLES, "--classes",
                       CLASSES, "--k", "1", "--L", "16")
    assert code == 0
    assert all(json.loads(line) for line in out.splitlines())


def test_fuse_check_passes(tmp_path, capsys):
    out = tmp_path / "fusion.txt"
    code, _, _ = run(capsys, "fuse-check", "--trials", "3", "--out", str(out))
    assert code == 0
    text = out.read_text(encoding="utf-8")
    assert "FAIL" not in text
    assert "properties passed" in text.splitlines()[-1]


def test_fuse_check_rejects_bad_dims(capsys):
    code, _, err = run(capsys, "fuse-check", "--d1", "10", "--n-heads", "3")
    assert code == 1
    assert "error:" in err


def test_all_writes_every_artifact(tmp_path, capsys):
    out_dir = tmp_path / "artifacts"
    code, _, _ = run(
        capsys, "all", "--kg", TRIPLES, "--classes", CLASSES,
        "--corpus", CORPUS, "--out", str(out_dir),
        "--dim", "4", "--epochs", "2", "--neg", "3", "--burn-in", "1",
        "--samples", "10", "--k", "1", "--L", "16", "--trials", "3",
    )
    assert code == 0
    names = {p.name for p in out_dir.iterdir()}
    assert names == {"indicators.json", "embeddings.tsv", "embeddings.tsv.meta",
                     "samples.jsonl", "fusion_checks.txt"}
    payload = json.loads((out_dir / "indicators.json").read_text("utf-8"))
    assert payload["coverage_ratio"] == 24 / 42
