import json

import pandas as pd
import pytest
from click.testing import CliRunner

from geodesic_dcd.commands.cli import main
from geodesic_dcd.core.io import load_model, load_partitions, load_sequence

TINY_SBM = {"d": 20, "T": 3, "k": 2, "p_in": 0.9, "p_out": 0.05, "p_switch": 0.0, "seed": 1}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_config(tmp_path):
    def write(**overrides):
        document = {"name": "tiny", "sbm": TINY_SBM,
                    "pipeline": {"method": {"method": "NSC"}, "k_c": 2},
                    "out_dir": str(tmp_path / "results")}
        document.update(overrides)
        path = tmp_path / f"{document['name']}.json"
        path.write_text(json.dumps(document), encoding="utf-8")
        return path
    return write


def test_generate_writes_sequence_and_truth(runner, tiny_config, tmp_path):
    result = runner.invoke(main, ["generate", "--config", str(tiny_config())])
    assert result.exit_code == 0, result.output
    out = tmp_path / "results" / "tiny"
    seq = load_sequence(out / "sequence.json")
    assert seq.T == 3 and seq.d == 20
    assert load_partitions(out / "truth.json").T == 3
    assert "[OK] Wrote" in result.output


def test_generate_coblock_writes_both_truths(runner, tiny_config, tmp_path):
    config = tiny_config(sbm={"variant": "SCBM", "d": 20, "T": 2})
    out = tmp_path / "scbm"
    result = runner.invoke(main, ["generate", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "truth_send.json").is_file()
    assert (out / "truth_receive.json").is_file()


def test_detect_then_score(runner, tiny_config, tmp_path):
    result = runner.invoke(main, ["detect", "--config", str(tiny_config())])
    assert result.exit_code == 0, result.output
    out = tmp_path / "results" / "tiny"
    for name in ("partitions.json", "fit_report.json", "model.json"):
        assert (out / name).is_file()
    assert load_model(out / "model.json").P.shape == (20, 4)

    result = runner.invoke(main, ["score", str(out / "truth.json"), str(out / "partitions.json")])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0] == "t_index,metric,value"
    assert lines[1].startswith("0,ami,")


def test_score_to_file_with_mask(runner, tiny_config, tmp_path):
    runner.invoke(main, ["detect", "--config", str(tiny_config())])
    out = tmp_path / "results" / "tiny"
    csv = tmp_path / "scores" / "ami.csv"
    result = runner.invoke(main, ["score", str(out / "truth.json"), str(out / "partitions.json"),
                                  "--mask", "0,2", "--out", str(csv)])
    assert result.exit_code == 0, result.output
    assert "[OK] Median ami" in result.output
    frame = pd.read_csv(csv)
    assert list(frame["t_index"][:1].astype(str)) == ["1"]
    assert len(frame) == 1 + 3


def test_score_rejects_malformed_mask_file(runner, tiny_config, tmp_path):
    runner.invoke(main, ["detect", "--config", str(tiny_config())])
    out = tmp_path / "results" / "tiny"
    mask = tmp_path / "mask.json"
    mask.write_text("[0, 1", encoding="utf-8")
    result = runner.invoke(main, ["score", str(out / "truth.json"), str(out / "partitions.json"),
                                  "--mask", str(mask)])
    assert result.exit_code == 2
    assert "ERROR: mask: invalid JSON in mask file" in result.output


def test_detect_variable_mode_writes_benefit(runner, tiny_config, tmp_path):
    config = tiny_config(pipeline={"method": {"method": "NSC"}, "k_min": 2, "k_max": 3})
    result = runner.invoke(main, ["detect", "--config", str(config)])
    assert result.exit_code == 0, result.output
    out = tmp_path / "results" / "tiny"
    benefit = pd.read_csv(out / "benefit.csv")
    assert set(benefit["k"]) == {2, 3}
    assert "Community counts per snapshot" in result.output
    assert not (out / "model.json").exists()


def test_geocheck_from_input(runner, tiny_config, tmp_path):
    runner.invoke(main, ["generate", "--config", str(tiny_config())])
    seq_path = tmp_path / "results" / "tiny" / "sequence.json"
    result = runner.invoke(main, ["geocheck", "--input", str(seq_path)])
    assert result.exit_code == 0, result.output
    assert "sigma_3/sigma_1" in result.output
    sigma = pd.read_csv(seq_path.parent / "sigma.csv")
    assert list(sigma.columns) == ["index", "sigma"]
    proj = pd.read_csv(seq_path.parent / "projections.csv")
    assert len(proj) == 6


def test_geocheck_needs_a_source(runner):
    result = runner.invoke(main, ["geocheck"])
    assert result.exit_code == 2
    assert "ERROR:" in result.output


def test_bench_single_worker(runner, tiny_config, tmp_path):
    config = tiny_config(methods=[{"label": "G-NSC", "geodesic": True},
                                  {"label": "S-NSC", "geodesic": False}])
    out = tmp_path / "bench"
    result = runner.invoke(main, ["bench", "--config", str(config), "--out", str(out),
                                  "--jobs", "1", "--seed", "0", "--seed", "1"])
    assert result.exit_code == 0, result.output
    runs = pd.read_csv(out / "runs.csv")
    assert len(runs) == 4
    summary = pd.read_csv(out / "summary.csv")
    assert list(summary["label"]) == ["G-NSC", "S-NSC"]
    assert (summary["repetitions"] == 2).all()
    for name in ("scores.csv", "quantiles.csv"):
        assert (out / name).is_file()


def test_bench_rejects_zero_jobs(runner, tiny_config):
    result = runner.invoke(main, ["bench", "--config", str(tiny_config()), "--jobs", "0"])
    assert result.exit_code == 2
    assert "jobs" in result.output


def test_missing_file_exit_code(runner, tmp_path):
    result = runner.invoke(main, ["score", str(tmp_path / "a.json"), str(tmp_path / "b.json")])
    assert result.exit_code == 2
    assert "ERROR: file not found" in result.output


def test_unknown_config_exit_code(runner):
    result = runner.invoke(main, ["detect", "--config", "no-such-experiment"])
    assert result.exit_code == 2


def test_method_error_exit_code(runner, tiny_config):
    config = tiny_config(sbm={"variant": "DSBM", "d": 20, "T": 2})
    result = runner.invoke(main, ["detect", "--config", str(config)])
    assert result.exit_code == 1
    assert "ERROR:" in result.output
