import csv
import json

import numpy as np
import pytest
from scipy.stats import fisher_exact

from specphase.io import save_dataset
from specphase.pipeline import (
    DECOMP_COLUMNS,
    SCHEMA_VERSION,
    TTEST_COLUMNS,
    ConfigError,
    RunConfig,
    StudyLayout,
    StudySpec,
    generate_study,
    run_decompose,
    run_naive_demo,
    window_segments,
)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_windowing():
    rec = np.arange(23.0)[None, :]
    w = window_segments(rec, 5)
    assert w.shape == (4, 5)
    assert np.array_equal(w[1], np.arange(5.0, 10.0))
    assert window_segments(rec, 5, 2).shape == (10, 5)
    assert window_segments(rec, 30).shape == (0, 30)
    assert window_segments(np.ones((2, 8)), 0).shape == (2, 8)


def test_layout_scan_and_errors(tmp_path):
    generate_study(StudySpec(subjects=2, channels=2, segments=3, length=16), tmp_path / "s")
    layout = StudyLayout.scan(tmp_path / "s")
    assert layout.subjects == ["s000", "s001"]
    assert layout.channels == ["ch000", "ch001"]
    x, y = layout.cell("s001", "ch001")
    assert x.n_segments == 3 and y.length == 16
    (tmp_path / "s" / "s001" / "y" / "ch001.csv").unlink()
    with pytest.raises(ConfigError, match="channels differ"):
        StudyLayout.scan(tmp_path / "s")
    with pytest.raises(ConfigError):
        StudyLayout.scan(tmp_path / "missing")


def test_empty_cell_after_windowing(tmp_path):
    generate_study(StudySpec(subjects=2, segments=2, length=16), tmp_path / "s")
    cfg = RunConfig(input=str(tmp_path / "s"), out=str(tmp_path / "o"), realizations=2, window=32)
    with pytest.raises(ConfigError, match="empty after windowing"):
        run_decompose(cfg)


def test_windowed_run(tmp_path):
    root = tmp_path / "s"
    g = np.random.default_rng(0)
    for s in ("a", "b"):
        for c in ("x", "y"):
            (root / s / c).mkdir(parents=True)
            save_dataset(root / s / c / "ch.csv", g.standard_normal((2, 70)))
    out = tmp_path / "o"
    assert run_decompose(RunConfig(input=str(root), out=str(out), realizations=5, window=32)) == 0
    rows = _rows(out / "decomposition.csv")
    assert [r["subject"] for r in rows] == ["a", "b"]


def test_decompose_outputs(tmp_path):
    generate_study(StudySpec(subjects=3, channels=2, segments=6, length=32), tmp_path / "s")
    out = tmp_path / "o"
    assert run_decompose(RunConfig(input=str(tmp_path / "s"), out=str(out), realizations=10, seed=4)) == 0
    rows = _rows(out / "decomposition.csv")
    assert list(rows[0]) == DECOMP_COLUMNS
    assert [(r["subject"], r["channel"]) for r in rows] == sorted((r["subject"], r["channel"]) for r in rows)
    assert len(rows) == 6 and all(r["R"] == "10" for r in rows)
    tests = _rows(out / "ttests.csv")
    assert list(tests[0]) == TTEST_COLUMNS
    assert {t["component"] for t in tests} >= {"delta_A", "delta_phi_x", "delta_i_y"}
    summary = json.loads((out / "run_summary.json").read_text())
    assert summary["schema_version"] == SCHEMA_VERSION
    assert summary["config"]["seed"] == 4
    assert "numpy" in summary["versions"] and summary["wall_time_s"] >= 0


def test_mirrored_copy_study(tmp_path, capsys):
    generate_study(StudySpec(subjects=3, segments=6, length=32, copy_x=True), tmp_path / "s")
    out = tmp_path / "o"
    run_decompose(RunConfig(input=str(tmp_path / "s"), out=str(out), realizations=10, mirrored=True))
    for r in _rows(out / "decomposition.csv"):
        assert float(r["delta_total"]) == 0.0 and float(r["delta_A"]) == 0.0
        assert r["delta_phi_x"] == r["delta_phi_y"] and r["delta_i_x"] == r["delta_i_y"]
    tests = {t["component"]: t for t in _rows(out / "ttests.csv")}
    for comp in ("delta_total", "delta_A", "delta_phi", "delta_i"):
        assert tests[comp]["t"] == "nan" and tests[comp]["p"] == "nan"
    err = capsys.readouterr().err
    assert "sample variance is zero" in err


def test_single_subject_skips_ttests(tmp_path, capsys):
    generate_study(StudySpec(subjects=1, segments=4, length=32), tmp_path / "s")
    out = tmp_path / "o"
    assert run_decompose(RunConfig(input=str(tmp_path / "s"), out=str(out), realizations=5)) == 0
    assert (out / "decomposition.csv").exists()
    assert not (out / "ttests.csv").exists()
    assert "n<2" in capsys.readouterr().err
    summary = json.loads((out / "run_summary.json").read_text())
    assert any("n<2" in n for n in summary["notices"])


def test_failure_removes_partial_outputs(tmp_path, monkeypatch):
    import specphase.pipeline as pipeline

    generate_study(StudySpec(subjects=2, segments=4, length=32), tmp_path / "s")
    out = tmp_path / "o"
    run_decompose(RunConfig(input=str(tmp_path / "s"), out=str(out), realizations=3))
    assert (out / "decomposition.csv").exists()

    def boom(*a, **k):
        raise FloatingPointError("synthetic failure")

    monkeypatch.setattr(pipeline, "decompose", boom)
    with pytest.raises(pipeline.CellError, match=r"subject=s000, channel=ch000"):
        run_decompose(RunConfig(input=str(tmp_path / "s"), out=str(out), realizations=3))
    assert not any(out.iterdir())


def test_planted_spectral_study(tmp_path):
    """Spectra differ, phases shared: delta_A significant, phasic terms not.

    The phasic t-tests are calibrated at 5%, so the 90% floor is checked over
    enough seeds for binomial noise not to decide the outcome.
    """
    seeds = 100
    sig_A = 0
    phasic_ok = {c: 0 for c in ("delta_phi_x", "delta_phi_y", "delta_phi")}
    for s in range(seeds):
        root = tmp_path / f"s{s}"
        generate_study(StudySpec(subjects=20, segments=12, length=64, seed=s), root)
        out = tmp_path / f"o{s}"
        run_decompose(RunConfig(input=str(root), out=str(out), realizations=30, seed=s))
        tests = {t["component"]: float(t["p"]) for t in _rows(out / "ttests.csv")}
        sig_A += tests["delta_A"] < 0.05
        for c in phasic_ok:
            phasic_ok[c] += tests[c] >= 0.05
    assert sig_A == seeds
    for c, k in phasic_ok.items():
        assert k >= 0.9 * seeds, (c, k)


def test_naive_demo(tmp_path):
    out = tmp_path / "o"
    cfg = RunConfig(out=str(out), realizations=199, cs=(0.0, 0.5, 1.0), trials=100,
                    decomp_trials=3, decomp_segments=20, decomp_realizations=20, seed=2026)
    assert run_naive_demo(cfg) == 0
    rows = _rows(out / "naive_fpr.csv")
    assert len(rows) == 3
    assert list(rows[0]) == ["c", "trials", "rejections", "rate", "ci_lo", "ci_hi"]
    by_c = {float(r["c"]): r for r in rows}
    assert float(by_c[1.0]["ci_lo"]) <= 0.05 <= float(by_c[1.0]["ci_hi"])
    k0, k1 = int(by_c[0.0]["rejections"]), int(by_c[1.0]["rejections"])
    assert k0 > k1
    assert fisher_exact([[k0, 100 - k0], [k1, 100 - k1]], alternative="greater")[1] < 0.01
    z = _rows(out / "naive_decomposition_z.csv")
    assert len(z) == 9 and "z_phi" in z[0]


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(realizations=0).validate()
    with pytest.raises(ConfigError):
        RunConfig(alpha=1.0).validate()
    with pytest.raises(ConfigError):
        RunConfig(feature="nope").validate()
    with pytest.raises(ConfigError):
        RunConfig(input="/does/not/exist").validate(need_input=True)
    with pytest.raises(ConfigError):
        generate_study(StudySpec(x_spectrum="pink"), "/tmp/unused")
