import csv
import json

import pytest

from hlkit.cli import EXPERIMENTS, ExperimentConfig, list_experiments, main, run, sample_config
from hlkit.descriptors import ConfigError


def test_catalogue():
    assert len(list_experiments()) == 12
    assert set(list_experiments()) == set(EXPERIMENTS)


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_experiment_is_usage_error():
    assert main(["nonsense"]) == 2


def test_list_and_sample(capsys):
    assert main(["list"]) == 0
    assert "weaktype" in capsys.readouterr().out
    assert main(["sample", "cover"]) == 0
    assert json.loads(capsys.readouterr().out)["experiment"] == "cover"


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_every_sample_runs(name, tmp_path):
    assert main([name, "--out", str(tmp_path), "--seed", "5"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["experiment"] == name and manifest["config"]["seed"] == 5
    for out in manifest["outputs"]:
        assert (tmp_path / out).exists()


def test_weaktype_sample_row(tmp_path):
    assert main(["weaktype", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "weaktype.csv").open()))
    row = next(r for r in rows if float(r["lambda"]) == 0.25)
    assert float(row["empirical_constant"]) == pytest.approx(0.75, abs=0.01)
    assert row["passed"] == "true"


def test_validation_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"space": {"backend": "grid", "lower": [0], "upper": [1], "cells": [8]},
                               "params": {"set": {"kind": "all"}, "lambdas": [1.5]}}))
    assert main(["weaktype", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "lambdas" in capsys.readouterr().err
    cfg.write_text("{not json")
    assert main(["weaktype", "--config", str(cfg)]) == 3


def test_randomised_experiment_needs_seed():
    raw = sample_config("metric-check")
    raw.pop("seed")
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict(raw)


def test_uncovered_target_is_validation_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"space": {"backend": "grid", "lower": [0], "upper": [1], "cells": [8]},
                               "params": {"family": [{"center": 0, "radius": 0.1}],
                                          "target": {"kind": "all"}}}))
    assert main(["cover", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3


def test_tsv_output(tmp_path):
    raw = sample_config("kernel-eval")
    raw["output"] = {"path": str(tmp_path), "format": "tsv"}
    files = run(ExperimentConfig.from_dict(raw))
    assert (tmp_path / "kernel-eval.tsv") in files
    header = (tmp_path / "kernel-eval.tsv").read_text().splitlines()[0]
    assert header.split("\t")[-2:] == ["P", "ratio"]
