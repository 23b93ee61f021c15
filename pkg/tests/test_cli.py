import json

import pytest

from fobprint.cli import main

COUNTS = {"counts": {"train": 12, "legit": 12, "attack": 3}, "scenarios": ["playback_8bit"]}


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(COUNTS))
    return p


@pytest.fixture
def dataset(tmp_path, config):
    assert main(["synth", "--config", str(config), "--seed", "3", "--out", str(tmp_path / "ds")]) == 0
    return tmp_path / "ds" / "manifest.json"


def legit_only(tmp_path, manifest):
    doc = json.loads(manifest.read_text())
    doc["entries"] = [e for e in doc["entries"] if e["label"] == "legit"]
    p = manifest.parent / "legit.json"
    p.write_text(json.dumps(doc))
    return p


def test_synth_writes_manifest(dataset):
    labels = [e["label"] for e in json.loads(dataset.read_text())["entries"]]
    assert labels == ["legit"] * 12 + ["playback"] * 3


def test_train_refuses_attack_labels(dataset, tmp_path, capsys):
    assert main(["train", str(dataset), "--model", str(tmp_path / "m.json")]) == 1
    assert "InvalidTrainingSet" in capsys.readouterr().err
    assert not (tmp_path / "m.json").exists()


def test_train_detect(dataset, tmp_path, capsys):
    model = tmp_path / "m.json"
    assert main(["train", str(legit_only(tmp_path, dataset)), "--model", str(model), "--seed", "1"]) == 0
    caps = sorted((dataset.parent / "captures").glob("playback_8bit_*.cf32"))
    assert main(["detect", *map(str, caps), "--model", str(model), "--out", str(tmp_path / "v")]) == 0
    verdicts = json.loads((tmp_path / "v" / "verdicts.json").read_text())
    assert [v["decision"] for v in verdicts] == ["Reject"] * 3
    out = capsys.readouterr().out
    assert out.count("Reject") >= 3


def test_train_rke_and_vote(dataset, tmp_path, capsys):
    model = tmp_path / "rke.json"
    assert main(["train", str(legit_only(tmp_path, dataset)), "--model", str(model), "--system", "rke"]) == 0
    caps = sorted((dataset.parent / "captures").glob("legit_*.cf32"))[:3]
    assert main(["detect", *map(str, caps), "--model", str(model)]) == 0
    assert "(3 preambles)" in capsys.readouterr().out


def test_detect_missing_capture(tmp_path, dataset, capsys):
    model = tmp_path / "m.json"
    main(["train", str(legit_only(tmp_path, dataset)), "--model", str(model)])
    assert main(["detect", str(tmp_path / "absent.cf32"), "--model", str(model)]) == 1
    assert "error:" in capsys.readouterr().err


def test_detect_needs_model(capsys):
    assert main(["detect", "x.cf32"]) == 1


def test_rank_features(dataset, tmp_path, capsys):
    assert main(["rank-features", str(dataset), "--out", str(tmp_path / "r")]) == 0
    ranking = json.loads((tmp_path / "r" / "ranking.json").read_text())
    assert len(ranking) == 4
    assert capsys.readouterr().out.startswith("1. ")


def test_rank_single_class(tmp_path, dataset):
    assert main(["rank-features", str(legit_only(tmp_path, dataset))]) == 1


def test_experiment_outputs(tmp_path, config, capsys):
    out = tmp_path / "exp"
    assert main(["experiment", "--config", str(config), "--preset", "digital_relay", "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"report.json", "scores.csv", "timing.json"}
    assert "FNR" in capsys.readouterr().out


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"counts": {"train": -3}}')
    assert main(["experiment", "--config", str(p)]) == 1
    assert "ConfigError" in capsys.readouterr().err


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["experiment", "--preset", "jamming"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--seed", "-4"])
    assert exc.value.code == 2


def test_bench(capsys):
    assert main(["bench", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert "detect_preamble" in out and "score" in out


def test_bench_capture(dataset, capsys):
    cap = sorted((dataset.parent / "captures").glob("legit_*.cf32"))[0]
    assert main(["bench", str(cap)]) == 0
