import csv
import subprocess
import sys

import numpy as np
import pytest

from specphase.cli import main, merge, parse_options
from specphase.io import save_dataset
from specphase.pipeline import ConfigError, RunConfig


def run(*args):
    return subprocess.run([sys.executable, "-m", "specphase.cli", *map(str, args)], capture_output=True, text=True)


@pytest.fixture
def study(tmp_path):
    assert main(["gen", "--out", str(tmp_path / "study"), "--subjects", "3", "--channels", "2",
                 "--segments", "6", "--length", "32", "--quiet"]) == 0
    return tmp_path / "study"


def test_exit_code_success_subprocess(study, tmp_path):
    r = run("decompose", study, "--out", tmp_path / "o", "-R", "5")
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "o" / "decomposition.csv").exists()


@pytest.mark.parametrize(
    "args",
    [
        ["decompose", "/no/such/dir"],
        ["decompose", "{study}", "--alpha", "1.5"],
        ["decompose", "{study}", "--realizations", "0"],
        ["decompose", "{study}", "--feature", "nope"],
        ["decompose", "{study}", "--feature-option", "normalize"],
        ["decompose", "{study}", "--seed", "-1"],
        ["decompose", "{study}", "--threads", "0"],
        ["frobnicate"],
        ["naive-demo", "--trials", "10"],
        ["gen", "--c", "2"],
    ],
)
def test_exit_code_validation(study, tmp_path, args):
    args = [a.replace("{study}", str(study)) for a in args] + ["--out", str(tmp_path / "o")] * (args[0] != "frobnicate")
    r = run(*args)
    assert r.returncode == 1, (args, r.stderr)
    assert r.stderr


def test_exit_code_bad_file(study, tmp_path):
    (study / "s001" / "x" / "ch000.csv").write_text("segment_id,t0,t1\n0,1\n")
    r = run("decompose", study, "--out", tmp_path / "o")
    assert r.returncode == 1
    assert "s001" in r.stderr and "row 2" in r.stderr
    assert not (tmp_path / "o" / "decomposition.csv").exists()


def test_exit_code_runtime_failure(study, tmp_path, monkeypatch, capsys):
    import specphase.pipeline as pipeline

    def boom(*a, **k):
        raise MemoryError("out of memory")

    monkeypatch.setattr(pipeline, "decompose", boom)
    assert main(["decompose", str(study), "--out", str(tmp_path / "o"), "-R", "2"]) == 2
    assert "channel=ch000" in capsys.readouterr().err


def test_config_file_and_override(study, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[decompose]\ninput = {study}\nrealizations = 7\nseed = 3\nfeature_options = normalize=true\n")
    out = tmp_path / "o"
    assert main(["decompose", "--config", str(cfg), "--out", str(out), "--seed", "9"]) == 0
    rows = list(csv.DictReader(open(out / "decomposition.csv")))
    assert rows[0]["R"] == "7"
    import json

    summary = json.loads((out / "run_summary.json").read_text())
    assert summary["config"]["seed"] == 9
    assert summary["config"]["feature_options"] == {"normalize": "true"}
    cfg.write_text("[decompose]\nrealisations = 7\n")
    assert main(["decompose", str(study), "--config", str(cfg)]) == 1


def test_merge_precedence():
    import argparse

    ns = argparse.Namespace(seed=5, realizations=None, feature_option=["normalize=1"])
    cfg = merge(RunConfig(), {"seed": "2", "realizations": "11", "alpha": "0.01"}, ns)
    assert (cfg.seed, cfg.realizations, cfg.alpha) == (5, 11, 0.01)
    assert cfg.feature_options == {"normalize": "1"}
    assert parse_options(["a=1,b=2", "c=x"]) == {"a": "1", "b": "2", "c": "x"}
    with pytest.raises(ConfigError):
        parse_options(["novalue"])


def test_threads_env_fallback(study, tmp_path, monkeypatch):
    monkeypatch.setenv("SPECPHASE_THREADS", "3")
    assert main(["decompose", str(study), "--out", str(tmp_path / "a"), "-R", "4", "--quiet"]) == 0
    monkeypatch.delenv("SPECPHASE_THREADS")
    assert main(["decompose", str(study), "--out", str(tmp_path / "b"), "-R", "4", "--quiet"]) == 0
    for name in ("decomposition.csv", "ttests.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_binary_format_study(tmp_path):
    root = tmp_path / "s"
    assert main(["gen", "--out", str(root), "--subjects", "2", "--segments", "4", "--length", "16",
                 "--format", "bin", "--quiet"]) == 0
    assert (root / "s000" / "x" / "ch000.bin").exists()
    assert main(["decompose", str(root), "--format", "bin", "--out", str(tmp_path / "o"), "-R", "3"]) == 0


def test_feature_command(tmp_path, capsys):
    data = np.random.default_rng(0).standard_normal((3, 64))
    save_dataset(tmp_path / "d.csv", data)
    assert main(["feature", str(tmp_path / "d.csv"), "--feature", "lz76"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "segment,lz76" and len(lines) == 4
    assert main(["feature", str(tmp_path / "d.csv"), "--out", str(tmp_path / "f"),
                 "--feature", "spectral_centroid"]) == 0
    assert (tmp_path / "f" / "features.csv").exists()


def test_gen_shared_phase_and_copy(tmp_path):
    from specphase.io import load_segments

    root = tmp_path / "s"
    assert main(["gen", "--out", str(root), "--subjects", "1", "--segments", "3", "--length", "32",
                 "--copy-x", "--quiet"]) == 0
    x = load_segments(root / "s000" / "x" / "ch000.csv")
    y = load_segments(root / "s000" / "y" / "ch000.csv")
    assert np.array_equal(x, y)
    assert main(["gen", "--out", str(root), "--subjects", "1", "--segments", "3", "--length", "32",
                 "--no-shared-phase", "--coupling", "amp_phase_coupled", "--quiet"]) == 0


def test_selftest_subset(capsys):
    assert main(["selftest", "--only", "1,5,7"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] 1." in out and "[PASS] 5." in out and "3/3 suites passed" in out
