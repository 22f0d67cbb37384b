"""Study-level orchestration: windowing, per-cell decomposition, group tests.

A study directory is laid out as ``<root>/<subject>/<condition>/<channel>.<ext>``
with condition ``x`` or ``y``. Each file holds one or more recordings (rows);
every row is cut into windows of length T and the windows of all rows form
the condition's segment pool for that (subject, channel) cell.
"""
from __future__ import annotations

import csv
import json
import logging
import platform
import shutil
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import ConditionDataset
from .decomposition import decompose, default_threads
from .features import FeatureDescriptor
from .io import DataFormatError, infer_format, load_segments, save_dataset
from .seeding import derive_seed
from .stats import StatsError, ZeroVarianceError, false_positive_sweep, one_sample_ttest
from .synthetic import PhaseModel, SpectrumModel, demo_spectra, make_dataset, make_shared_phase_datasets

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
DECOMP_COLUMNS = [
    "subject", "channel", "delta_total", "delta_A", "delta_phi_x", "delta_phi_y",
    "delta_i_x", "delta_i_y", "stderr_A", "stderr_phi_x", "stderr_phi_y",
    "stderr_i_x", "stderr_i_y", "R", "seed",
]
TTEST_COLUMNS = ["channel", "component", "t", "df", "p"]
TTEST_COMPONENTS = [
    "delta_total", "delta_A", "delta_phi_x", "delta_phi_y", "delta_i_x", "delta_i_y",
    "delta_phi", "delta_i",
]
FPR_COLUMNS = ["c", "trials", "rejections", "rate", "ci_lo", "ci_hi"]
ZSCORE_COLUMNS = ["c", "trial", "delta_phi", "z_phi", "delta_i", "z_i", "delta_A", "z_A"]

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration or input layout (exit code 1)."""


class CellError(RuntimeError):
    """A (subject, channel) cell failed during processing (exit code 2)."""


@dataclass
class RunConfig:
    input: str | None = None
    out: str = "out"
    feature: str = "lz76"
    feature_options: dict = field(default_factory=dict)
    realizations: int = 500
    seed: int = 0
    alpha: float = 0.05
    format: str | None = None
    threads: int = 0
    window: int = 0
    stride: int = 0
    mirrored: bool = False
    # naive-demo
    cs: tuple = (0.0, 0.25, 0.5, 1.0)
    trials: int = 400
    length: int = 256
    decomp_trials: int = 50
    decomp_segments: int = 100
    decomp_realizations: int = 100

    def validate(self, need_input: bool = False) -> None:
        if self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.window < 0 or self.stride < 0:
            raise ConfigError("window and stride must be non-negative")
        if self.format not in (None, "csv", "bin"):
            raise ConfigError(f"format must be csv or bin, got {self.format!r}")
        if need_input:
            if not self.input or not Path(self.input).exists():
                raise ConfigError(f"input path not found: {self.input!r}")
        try:
            FeatureDescriptor(self.feature, dict(self.feature_options))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def n_threads(self) -> int:
        return self.threads if self.threads > 0 else default_threads()

    def descriptor(self) -> FeatureDescriptor:
        return FeatureDescriptor(self.feature, dict(self.feature_options))


def window_segments(recordings: np.ndarray, window: int = 0, stride: int = 0) -> np.ndarray:
    """Cut each row into windows of ``window`` samples every ``stride`` samples.

    ``window=0`` keeps rows whole; ``stride=0`` means non-overlapping. Tail
    samples that do not fill a window are dropped.
    """
    rec = np.atleast_2d(recordings)
    if window <= 0:
        return rec
    stride = stride or window
    L = rec.shape[1]
    if L < window:
        return np.empty((0, window))
    starts = range(0, L - window + 1, stride)
    return np.concatenate([rec[:, s:s + window] for s in starts], axis=0)


@dataclass
class StudyLayout:
    root: Path
    subjects: list
    channels: list
    files: dict  # (subject, condition, channel) -> path

    @classmethod
    def scan(cls, root, fmt: str | None = None) -> "StudyLayout":
        root = Path(root)
        if not root.is_dir():
            raise ConfigError(f"study root is not a directory: {root}")
        files = {}
        subjects = sorted(p.name for p in root.iterdir() if p.is_dir())
        if not subjects:
            raise ConfigError(f"no subject directories under {root}")
        channel_sets = []
        for s in subjects:
            per_cond = []
            for cond in ("x", "y"):
                d = root / s / cond
                if not d.is_dir():
                    raise ConfigError(f"missing condition directory {d}")
                chans = {}
                for f in sorted(d.iterdir()):
                    if f.is_file() and (fmt is None or infer_format(f) == fmt):
                        chans[f.stem] = f
                for ch, f in chans.items():
                    files[(s, cond, ch)] = f
                per_cond.append(set(chans))
            if per_cond[0] != per_cond[1]:
                raise ConfigError(f"subject {s}: channels differ between conditions")
            channel_sets.append(per_cond[0])
        channels = sorted(set.union(*channel_sets))
        for s, chans in zip(subjects, channel_sets):
            missing = set(channels) - chans
            if missing:
                raise ConfigError(f"subject {s}: missing channels {sorted(missing)}")
        return cls(root, subjects, channels, files)

    def cell(self, subject, channel, window=0, stride=0, fmt=None):
        out = []
        for cond in ("x", "y"):
            path = self.files[(subject, cond, channel)]
            segs = window_segments(load_segments(path, fmt), window, stride)
            if segs.shape[0] == 0:
                raise ConfigError(f"cell ({subject}, {channel}, {cond}) is empty after windowing")
            out.append(ConditionDataset(segs, label=cond, tags={"subject": subject, "channel": channel}))
        if out[0].length != out[1].length:
            raise ConfigError(f"cell ({subject}, {channel}): segment length differs between conditions")
        return out


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _summary(cfg: RunConfig, command: str, started: float, outputs, notices) -> dict:
    import numba
    import scipy

    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
        "versions": {
            "specphase": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
        "wall_time_s": round(time.time() - started, 3),
        "outputs": outputs,
        "notices": notices,
    }


def _cell_row(subject, channel, res, seed) -> dict:
    row = {
        "subject": subject,
        "channel": channel,
        "delta_total": res.delta_total,
        "delta_A": res.delta_A,
        "delta_phi_x": res.delta_phi_x,
        "delta_phi_y": res.delta_phi_y,
        "delta_i_x": res.delta_i_x,
        "delta_i_y": res.delta_i_y,
        "R": res.realizations,
        "seed": seed,
    }
    for comp in ("A", "phi_x", "phi_y", "i_x", "i_y"):
        row[f"stderr_{comp}"] = res.stderr[comp]
    return row


def group_ttests(rows: list[dict], channels, alpha: float, notices: list) -> list[dict]:
    out = []
    for ch in channels:
        cell_rows = [r for r in rows if r["channel"] == ch]
        for comp in TTEST_COMPONENTS:
            if comp == "delta_phi":
                vals = [r["delta_phi_x"] - r["delta_phi_y"] for r in cell_rows]
            elif comp == "delta_i":
                vals = [r["delta_i_x"] - r["delta_i_y"] for r in cell_rows]
            else:
                vals = [r[comp] for r in cell_rows]
            try:
                res = one_sample_ttest(vals, alpha)
                out.append({"channel": ch, "component": comp, "t": res.statistic, "df": res.df, "p": res.p_value})
            except ZeroVarianceError as exc:
                notices.append(f"channel {ch}, {comp}: {exc}")
                out.append({"channel": ch, "component": comp, "t": float("nan"), "df": len(vals) - 1, "p": float("nan")})
    return out


def run_decompose(cfg: RunConfig) -> int:
    """Decompose every (subject, channel) cell and t-test components across subjects."""
    started = time.time()
    cfg.validate(need_input=True)
    layout = StudyLayout.scan(cfg.input, cfg.format)
    fd = cfg.descriptor()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    decomp_path = out_dir / "decomposition.csv"
    ttest_path = out_dir / "ttests.csv"
    summary_path = out_dir / "run_summary.json"
    notices: list[str] = []

    cells = [(si, s, ci, c) for si, s in enumerate(layout.subjects) for ci, c in enumerate(layout.channels)]

    def job(cell):
        si, subject, ci, channel = cell
        try:
            x, y = layout.cell(subject, channel, cfg.window, cfg.stride, cfg.format)
            seed = derive_seed(cfg.seed, 0, si, ci)
            res = decompose(x, y, fd, cfg.realizations, seed, mirrored=cfg.mirrored, threads=1)
        except ConfigError:
            raise
        except DataFormatError as exc:
            raise ConfigError(f"cell (subject={subject}, channel={channel}): {exc}") from None
        except Exception as exc:  # noqa: BLE001 - any failure aborts the run with its cell named
            raise CellError(f"cell (subject={subject}, channel={channel}) failed: {exc}") from exc
        return _cell_row(subject, channel, res, seed)

    try:
        with ThreadPoolExecutor(max_workers=cfg.n_threads) as pool:
            rows = list(pool.map(job, cells))
        rows.sort(key=lambda r: (r["subject"], r["channel"]))
        _write_csv(decomp_path, DECOMP_COLUMNS, rows)
        outputs = [decomp_path.name]
        if len(layout.subjects) < 2:
            notices.append("group t-tests skipped: n<2 subjects")
        else:
            tests = group_ttests(rows, layout.channels, cfg.alpha, notices)
            _write_csv(ttest_path, TTEST_COLUMNS, tests)
            outputs.append(ttest_path.name)
    except BaseException:
        for p in (decomp_path, ttest_path, summary_path):
            p.unlink(missing_ok=True)
        raise
    for n in notices:
        print(f"notice: {n}", file=sys.stderr)
    summary_path.write_text(json.dumps(_summary(cfg, "decompose", started, outputs, notices), indent=2))
    return EXIT_OK


def run_naive_demo(cfg: RunConfig) -> int:
    """False-positive sweep of the naive test plus the decomposition's z-scores."""
    started = time.time()
    cfg.validate()
    for c in cfg.cs:
        if not 0.0 <= c <= 1.0:
            raise ConfigError(f"roughness values must lie in [0, 1], got {c}")
    fd = cfg.descriptor()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        reports = false_positive_sweep(cfg.cs, cfg.trials, cfg.realizations, cfg.alpha, cfg.seed, cfg.length, fd)
    except StatsError as exc:
        raise ConfigError(str(exc)) from None
    _write_csv(out_dir / "naive_fpr.csv", FPR_COLUMNS, [asdict(r) for r in reports])
    zrows = shared_phase_zscores(cfg, fd)
    _write_csv(out_dir / "naive_decomposition_z.csv", ZSCORE_COLUMNS, zrows)
    outputs = ["naive_fpr.csv", "naive_decomposition_z.csv"]
    (out_dir / "run_summary.json").write_text(
        json.dumps(_summary(cfg, "naive-demo", started, outputs, []), indent=2)
    )
    return EXIT_OK


def shared_phase_zscores(cfg: RunConfig, fd: FeatureDescriptor | None = None) -> list[dict]:
    """Decompose shared-phase datasets (spectra differ, phases identical) at each c."""
    fd = fd or cfg.descriptor()
    spec_a, spec_b = demo_spectra(cfg.length)
    rows = []
    for ci, c in enumerate(cfg.cs):
        pm = PhaseModel("roughness", float(c))
        for t in range(cfg.decomp_trials):
            s = derive_seed(cfg.seed, 2, ci, t)
            x, y = make_shared_phase_datasets(spec_a, spec_b, pm, cfg.decomp_segments, np.random.default_rng(s))
            res = decompose(x, y, fd, cfg.decomp_realizations, s, threads=cfg.n_threads)
            rows.append({
                "c": float(c), "trial": t,
                "delta_phi": res.delta_phi, "z_phi": res.z("phi"),
                "delta_i": res.delta_i, "z_i": res.z("i"),
                "delta_A": res.delta_A, "z_A": res.z("A"),
            })
    return rows


@dataclass
class StudySpec:
    subjects: int = 4
    channels: int = 1
    segments: int = 20
    length: int = 256
    x_spectrum: str = "demo_a"
    y_spectrum: str = "demo_b"
    phase: str = "roughness"
    c: float = 0.5
    shared_phase: bool = True
    copy_x: bool = False
    coupling: str = "none"
    seed: int = 0
    format: str = "csv"


def _spectrum(name: str, T: int) -> SpectrumModel:
    a, b = demo_spectra(T)
    table = {"demo_a": a, "demo_b": b, "power_law": SpectrumModel("power_law", T), "flat": SpectrumModel("power_law", T, exponent=0.0)}
    if name not in table:
        raise ConfigError(f"unknown spectrum {name!r}; choose from {sorted(table)}")
    return table[name]


def generate_study(spec: StudySpec, out) -> Path:
    """Write a synthetic study in the directory layout read by ``decompose``."""
    root = Path(out)
    if spec.subjects < 1 or spec.channels < 1 or spec.segments < 1 or spec.length < 2:
        raise ConfigError("subjects, channels and segments must be >= 1 and length >= 2")
    if spec.format not in ("csv", "bin"):
        raise ConfigError(f"format must be csv or bin, got {spec.format!r}")
    sx = _spectrum(spec.x_spectrum, spec.length)
    sy = _spectrum(spec.y_spectrum, spec.length)
    try:
        pm = PhaseModel(spec.phase, spec.c)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ext = "csv" if spec.format == "csv" else "bin"
    if root.exists():
        shutil.rmtree(root)
    for si in range(spec.subjects):
        for ci in range(spec.channels):
            gen = np.random.default_rng(derive_seed(spec.seed, 3, si, ci))
            if spec.shared_phase and spec.coupling == "none":
                x, y = make_shared_phase_datasets(sx, sy, pm, spec.segments, gen)
            else:
                x = make_dataset(sx, pm, spec.segments, gen, coupling=spec.coupling, label="x")
                y = make_dataset(sy, pm, spec.segments, gen, label="y")
            if spec.copy_x:
                y = x
            for cond, d in (("x", x), ("y", y)):
                folder = root / f"s{si:03d}" / cond
                folder.mkdir(parents=True, exist_ok=True)
                save_dataset(folder / f"ch{ci:03d}.{ext}", d, spec.format)
    return root
