"""End-to-end validation suites.

Each ``check_*`` function runs one property of the method against an
independent reference and returns a :class:`CheckResult`. The ``scale``
argument selects the full sizes (``"full"``) or a reduced run suitable for a
quick self-test (``"quick"``).
"""
from __future__ import annotations

import filecmp
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import binom

from . import oracles
from .dataset import ConditionDataset
from .decomposition import decompose, decompose_alternative
from .features import FeatureDescriptor, lz76_complexity, lz76_complexity_batch
from .seeding import derive_seed
from .spectral import forward_spectrum, inverse_series, recombine
from .stats import t_sf_two_sided, wilson_interval
from .synthetic import PhaseModel, demo_spectra, make_dataset

# Seed for the naive-test sweep, fixed before any results were looked at.
SWEEP_SEED = 2026
TOL = 1e-9


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number}. {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, name, fn, *args, **kw) -> CheckResult:
    t0 = time.time()
    passed, detail = fn(*args, **kw)
    return CheckResult(number, name, bool(passed), detail, time.time() - t0)


def _pick(scale: str, full, quick):
    if scale not in ("full", "quick"):
        raise ValueError(f"scale must be 'full' or 'quick', got {scale!r}")
    return full if scale == "full" else quick


def binomial_band(n: int, p: float = 0.05, level: float = 0.95) -> tuple[int, int]:
    """Central ``level`` interval for a Binomial(n, p) count."""
    tail = (1 - level) / 2
    return int(binom.ppf(tail, n, p)), int(binom.ppf(1 - tail, n, p))


def z_calibrated(z: np.ndarray) -> tuple[bool, str]:
    """|mean z| < 3 and the count of |z| > 2 inside the binomial band of 5%."""
    z = np.asarray(z, dtype=np.float64)
    n = z.size
    k = int(np.sum(np.abs(z) > 2))
    lo, hi = binomial_band(n)
    ok = abs(z.mean()) < 3 and lo <= k <= hi
    detail = (
        f"mean z {z.mean():+.2f}, |z|>2 in {k}/{n} (band {lo}..{hi}), "
        f"stouffer {z.sum() / np.sqrt(n):+.2f}, sd {z.std(ddof=1) if n > 1 else 0.0:.2f}"
    )
    return ok, detail


# 1. telescoping -----------------------------------------------------------

def _telescoping(n_configs: int, seed: int):
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_configs):
        N, M = (int(v) for v in gen.integers(1, 9, size=2))
        T = int(gen.choice([8, 16, 64]))
        R = int(gen.integers(1, 21))
        s = int(gen.integers(0, 2**63))
        x = ConditionDataset(gen.standard_normal((N, T)) * gen.exponential(), label="x")
        y = ConditionDataset(gen.standard_normal((M, T)) + gen.normal(), label="y")
        r = decompose(x, y, R=R, seed=s)
        total = r.delta_A + (r.delta_phi_x - r.delta_phi_y) + (r.delta_i_x - r.delta_i_y)
        worst = max(worst, abs(total - r.delta_total) / (1 + abs(r.delta_total)))
    return worst < 1e-12, f"{n_configs} configurations, max scaled residual {worst:.2e} (< 1e-12)"


def check_telescoping(scale: str = "full", seed: int = 0) -> CheckResult:
    return _timed(1, "telescoping identity", _telescoping, _pick(scale, 200, 100), seed)


# 2. null calibration ------------------------------------------------------

def null_setups(T: int = 256) -> dict:
    """Planted nulls: component name -> (x spectrum, x phases, y spectrum, y phases)."""
    pl, bump = demo_spectra(T)
    return {
        "i": (pl, PhaseModel("roughness", 0.5), bump, PhaseModel("iid_uniform")),
        "phi": (pl, PhaseModel("roughness", 0.5), bump, PhaseModel("roughness", 0.5)),
        "A": (pl, PhaseModel("roughness", 0.3), pl, PhaseModel("iid_uniform")),
    }


def null_zscores(component: str, trials: int, N: int = 100, T: int = 256, R: int = 100, seed: int = 0):
    sa, pa, sb, pb = null_setups(T)[component]
    ci = list(null_setups(T)).index(component)
    z = np.empty(trials)
    for t in range(trials):
        s = derive_seed(seed, 10, ci, t)
        gen = np.random.default_rng(s)
        x = make_dataset(sa, pa, N, gen, label="x")
        y = make_dataset(sb, pb, N, gen, label="y")
        z[t] = decompose(x, y, R=R, seed=s).z(component)
    return z


def _calibration(trials: int, N: int, R: int, seed: int):
    names = {"i": "M^i", "phi": "M^phi", "A": "M^A"}
    parts, ok = [], True
    for comp in ("i", "phi", "A"):
        good, detail = z_calibrated(null_zscores(comp, trials, N, 256, R, seed))
        ok &= good
        parts.append(f"{names[comp]} [{'ok' if good else 'BAD'}] {detail}")
    return ok, "; ".join(parts)


def check_calibration(scale: str = "full", seed: int = 0) -> CheckResult:
    trials = _pick(scale, 50, 20)
    return _timed(2, "null calibration", _calibration, trials, 100, 100, seed)


# 3. order invariance ------------------------------------------------------

def order_invariance_scores(pairs: int, N: int = 100, T: int = 256, R: int = 500, seed: int = 0):
    sa, pa, sb, pb = null_setups(T)["i"]
    out = np.empty(pairs)
    for p in range(pairs):
        s = derive_seed(seed, 11, p)
        gen = np.random.default_rng(s)
        x = make_dataset(sa, pa, N, gen, label="x")
        y = make_dataset(sb, pb, N, gen, label="y")
        r = decompose(x, y, R=R, seed=s)
        alt, alt_se = decompose_alternative(x, y, R=R, seed=s)
        se = np.hypot(r.stderr["A"], alt_se)
        out[p] = abs(alt - r.delta_A) / se if se > 0 else (0.0 if alt == r.delta_A else np.inf)
    return out


def _order(pairs: int, R: int, seed: int):
    z = order_invariance_scores(pairs, R=R, seed=seed)
    need = pairs - max(1, pairs // 20)
    good = int(np.sum(z < 3))
    return good >= need, f"{good}/{pairs} pairs with |dA' - dA|/se < 3 (need {need}), max {z.max():.2f}"


def check_order_invariance(scale: str = "full", seed: int = 0) -> CheckResult:
    pairs, R = _pick(scale, (20, 500), (5, 200))
    return _timed(3, "order invariance", _order, pairs, R, seed)


# 4. naive-test failure ----------------------------------------------------

def _naive(trials: int, decomp_trials: int, seed: int):
    # imported here: the pipeline module pulls in the I/O stack
    from .pipeline import RunConfig, shared_phase_zscores
    from .stats import false_positive_sweep

    cs = (0.0, 0.25, 0.5, 1.0)
    reports = false_positive_sweep(cs, trials, 199, 0.05, seed, 256)
    ok = True
    parts = []
    for rep in reports:
        if rep.c == 1.0:
            good = rep.ci_lo <= 0.05 <= rep.ci_hi
            parts.append(f"c=1 rate {rep.rate:.3f} CI [{rep.ci_lo:.3f},{rep.ci_hi:.3f}] {'ok' if good else 'BAD'}")
        elif rep.c in (0.0, 0.25):
            p = float(binom.sf(rep.rejections - 1, rep.trials, 0.05))
            good = rep.rate > 0.05 and p < 0.01
            parts.append(f"c={rep.c:g} rate {rep.rate:.3f} p={p:.1e} {'ok' if good else 'BAD'}")
        else:
            good = True
            parts.append(f"c={rep.c:g} rate {rep.rate:.3f}")
        ok &= good
    cfg = RunConfig(seed=seed, cs=cs, decomp_trials=decomp_trials, decomp_segments=100, decomp_realizations=100)
    rows = shared_phase_zscores(cfg)
    for c in cs:
        z = np.array([r["z_phi"] for r in rows if r["c"] == c])
        good, detail = z_calibrated(z)
        ok &= good
        parts.append(f"phasic z at c={c:g} [{'ok' if good else 'BAD'}] {detail}")
    return ok, "; ".join(parts)


def check_naive_failure(scale: str = "full", seed: int = SWEEP_SEED) -> CheckResult:
    trials, dtrials = _pick(scale, (400, 50), (100, 20))
    return _timed(4, "naive-test failure", _naive, trials, dtrials, seed)


# 5. LZ76 ------------------------------------------------------------------

def all_strings(L: int) -> np.ndarray:
    """Every binary string of length L, row i holding i's bits MSB first."""
    i = np.arange(2**L, dtype=np.int64)[:, None]
    return ((i >> np.arange(L - 1, -1, -1)) & 1).astype(np.uint8)


def _lz(max_len: int, n_random: int, seed: int):
    mismatches = comp_fail = mono_fail = 0
    total = 0
    prev = None
    for L in range(1, max_len + 1):
        B = all_strings(L)
        fast = lz76_complexity_batch(B)
        ref = np.array([oracles.lz76_reference(row) for row in B])
        mismatches += int(np.sum(fast != ref))
        comp_fail += int(np.sum(lz76_complexity_batch(1 - B) != fast))
        if prev is not None:
            mono_fail += int(np.sum(fast < prev[np.arange(2**L) >> 1]))
        prev = fast
        total += B.shape[0]
    gen = np.random.default_rng(seed)
    rand_bad = 0
    for _ in range(n_random):
        n = int(gen.integers(1, 257))
        s = gen.integers(0, 2, size=n).astype(np.uint8)
        rand_bad += int(lz76_complexity(s) != oracles.lz76_reference(s))
    ok = mismatches == comp_fail == mono_fail == rand_bad == 0
    return ok, (
        f"{total} exhaustive strings: {mismatches} mismatches, {comp_fail} complement "
        f"and {mono_fail} prefix violations; {n_random} random strings: {rand_bad} mismatches"
    )


def check_lz76(scale: str = "full", seed: int = 0) -> CheckResult:
    max_len, n_random = _pick(scale, (14, 10_000), (12, 1000))
    return _timed(5, "LZ76 oracle equivalence", _lz, max_len, n_random, seed)


# 6. exact enumeration -----------------------------------------------------

def _enumeration(n_datasets: int, R: int, seed: int):
    gen = np.random.default_rng(seed)
    worst = 0.0
    lines = []
    for d in range(n_datasets):
        xs = gen.standard_normal((2, 8))
        ys = gen.standard_normal((2, 8)) * 2.0 + np.sin(np.arange(8))
        x, y = ConditionDataset(xs, label="x"), ConditionDataset(ys, label="y")
        s = derive_seed(seed, 12, d)
        r = decompose(x, y, R=R, seed=s)
        alt, alt_se = decompose_alternative(x, y, R=R, seed=s)
        pairs = {
            "nu_i_x": (r.nu_i_x, r.nu_stderr["nu_i_x"], oracles.enumerate_nu_within(xs)),
            "nu_i_y": (r.nu_i_y, r.nu_stderr["nu_i_y"], oracles.enumerate_nu_within(ys)),
            "nu_phi_x_given_y": (r.nu_phi_x_given_y, r.nu_stderr["nu_phi_x_given_y"], oracles.enumerate_nu_across(xs, ys)),
            "nu_phi_y_given_x": (r.nu_phi_y_given_x, r.nu_stderr["nu_phi_y_given_x"], oracles.enumerate_nu_across(ys, xs)),
            "delta_A_alt": (alt, alt_se, oracles.enumerate_delta_A_alt(xs, ys)),
        }
        for name, (mc, se, exact) in pairs.items():
            dev = abs(mc - exact)
            z = dev / se if se > 0 else (0.0 if dev < 1e-12 else np.inf)
            worst = max(worst, z)
            if z >= 4:
                lines.append(f"dataset {d} {name}: mc {mc:.4f} exact {exact:.4f} se {se:.4f}")
    detail = f"{n_datasets} datasets x 5 estimators at R={R}, max |mc - exact|/se {worst:.2f} (< 4)"
    if lines:
        detail += "; " + "; ".join(lines)
    return worst < 4, detail


def check_enumeration(scale: str = "full", seed: int = 0) -> CheckResult:
    return _timed(6, "exact enumeration", _enumeration, _pick(scale, 4, 2), 2000, seed)


# 7. numerics --------------------------------------------------------------

def _numerics(n_segments: int, seed: int):
    gen = np.random.default_rng(seed)
    worst = {"roundtrip": 0.0, "parseval": 0.0, "amplitude": 0.0, "realness": 0.0, "restore": 0.0, "dft": 0.0}
    parity = {0: 0, 1: 0}
    for k in range(n_segments):
        T = int(gen.integers(2, 258))
        parity[T % 2] += 1
        x = gen.standard_normal(T) * gen.exponential() + gen.normal()
        y = gen.standard_normal(T)
        sx, sy = forward_spectrum(x), forward_spectrum(y)
        sx.check_hermitian()
        inf = np.abs(x).max()
        worst["roundtrip"] = max(worst["roundtrip"], np.abs(inverse_series(sx) - x).max() / (1 + inf))
        energy = np.sum(x**2)
        worst["parseval"] = max(worst["parseval"], abs(energy - np.sum(sx.amplitudes**2) / T) / max(energy, 1e-300))
        z = recombine(sx, sy)
        sz = forward_spectrum(z)
        scale = max(sx.amplitudes.max(), 1e-300)
        worst["amplitude"] = max(worst["amplitude"], np.abs(sz.amplitudes - sx.amplitudes).max() / scale)
        full = np.fft.ifft(sx.amplitudes * np.exp(1j * sy.phases))
        worst["realness"] = max(worst["realness"], np.abs(full.imag).max() / scale)
        back = recombine(sz, sx)
        worst["restore"] = max(worst["restore"], np.abs(back - x).max() / (1 + inf))
        if T <= 64 and k % 4 == 0:
            D = oracles.direct_dft(x)
            worst["dft"] = max(worst["dft"], np.abs(np.abs(D) - sx.amplitudes).max() / max(np.abs(D).max(), 1e-300))
    grid_t = np.linspace(-10.0, 10.0, 50)
    grid_df = np.round(np.geomspace(1, 200, 50))[np.random.default_rng(seed + 1).permutation(50)]
    p_err = max(
        abs(t_sf_two_sided(t, df) - oracles.t_two_sided_quadrature(t, df)) for t, df in zip(grid_t, grid_df)
    )
    ok = all(v < TOL for v in worst.values()) and p_err < 1e-6
    body = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return ok, (
        f"{n_segments} segments ({parity[1]} odd, {parity[0]} even T): {body} (< 1e-9); "
        f"t-test p max error {p_err:.1e} on 50-point grid (< 1e-6)"
    )


def check_numerics(scale: str = "full", seed: int = 0) -> CheckResult:
    return _timed(7, "numerics", _numerics, _pick(scale, 1000, 200), seed)


# 8. reproducibility -------------------------------------------------------

def _reproducibility(subjects: int, R: int, seed: int):
    from .cli import main
    from .pipeline import StudySpec, generate_study

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        generate_study(StudySpec(subjects=subjects, channels=2, segments=12, length=128, seed=seed), tmp / "study")
        codes = []
        for threads in (4, 1):
            codes.append(main([
                "decompose", str(tmp / "study"), "--out", str(tmp / f"out{threads}"),
                "--seed", str(seed), "--realizations", str(R), "--threads", str(threads), "--quiet",
            ]))
        names = ["decomposition.csv", "ttests.csv"]
        same = [filecmp.cmp(tmp / "out4" / n, tmp / "out1" / n, shallow=False) for n in names]
    ok = codes == [0, 0] and all(same)
    return ok, f"exit codes {codes}; " + ", ".join(
        f"{n} {'identical' if s else 'DIFFERENT'}" for n, s in zip(names, same)
    )


def check_reproducibility(scale: str = "full", seed: int = 0) -> CheckResult:
    subjects, R = _pick(scale, (4, 50), (3, 20))
    return _timed(8, "reproducibility across thread counts", _reproducibility, subjects, R, seed)


CHECKS = [
    check_telescoping,
    check_calibration,
    check_order_invariance,
    check_naive_failure,
    check_lz76,
    check_enumeration,
    check_numerics,
    check_reproducibility,
]


def run_all(scale: str = "quick", seed: int | None = None, only=None, echo=print) -> list[CheckResult]:
    results = []
    for i, check in enumerate(CHECKS, start=1):
        if only and i not in only:
            continue
        res = check(scale) if seed is None else check(scale, seed)
        if echo:
            echo(res.line())
        results.append(res)
    return results
