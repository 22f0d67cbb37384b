"""Group-level t-tests and the naive two-sample surrogate test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .features import FeatureDescriptor
from .seeding import Scheme, derive_seed, uniforms
from .spectral import as_segment, half_spectra
from .surrogates import random_phases
from .synthetic import PhaseModel, demo_spectra, make_pair_shared_phase

Z95 = NormalDist().inv_cdf(0.975)


class StatsError(ValueError):
    pass


class ZeroVarianceError(StatsError):
    """The sample has zero variance, so the t statistic is undefined."""


def betacf(a: float, b: float, x: float, eps: float = 1e-15, max_iter: int = 10_000) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise StatsError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise StatsError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the fraction converges fast for x < (a + 1) / (a + b + 2)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * betacf(a, b, x) / a
    return 1.0 - front * betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return min(1.0, max(0.0, betainc_reg(df / 2.0, 0.5, df / (df + t * t))))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df: float
    reject: bool
    alpha: float = 0.05

    __test__ = False  # not a pytest class


def one_sample_ttest(values, alpha: float = 0.05) -> TestResult:
    """Two-sided one-sample t-test of mean zero."""
    v = np.asarray(values, dtype=np.float64).ravel()
    n = v.size
    if n < 2:
        raise StatsError(f"t-test needs n >= 2 values, got n={n}")
    sd = float(np.std(v, ddof=1))
    if sd == 0.0 or not np.isfinite(sd):
        raise ZeroVarianceError("t-test undefined: sample variance is zero")
    t = float(np.mean(v)) / (sd / math.sqrt(n))
    p = t_sf_two_sided(t, n - 1)
    return TestResult(t, p, n - 1, p < alpha, alpha)


def rank_p_value(
    observed: float, null: np.ndarray, center: str = "mean", ties: str = "randomized", u: float = 0.5
) -> float:
    """Two-sided surrogate-rank p-value.

    Extremity is ``|value - c|`` with ``c`` the null mean or median. With
    ``ties="conservative"`` every tie counts as extreme, giving
    ``(1 + #{>=}) / (R + 1)``; for discrete features this test is undersized.
    ``ties="randomized"`` breaks ties with the uniform ``u``,
    ``(#{>} + u * (#{==} + 1)) / (R + 1)``, which is exactly uniform under
    exchangeability.
    """
    null = np.asarray(null, dtype=np.float64)
    if center == "median":
        c = float(np.median(null))
    elif center == "mean":
        c = float(np.mean(null))
    else:
        raise StatsError(f"unknown centering {center!r}")
    dev = abs(observed - c)
    spread = np.abs(null - c)
    greater = int(np.sum(spread > dev))
    equal = int(np.sum(spread == dev))
    if ties == "conservative":
        return (1 + greater + equal) / (null.size + 1)
    if ties == "randomized":
        if not 0.0 <= u <= 1.0:
            raise StatsError(f"tie-breaking uniform must lie in [0, 1], got {u}")
        return (greater + u * (equal + 1)) / (null.size + 1)
    raise StatsError(f"unknown tie handling {ties!r}")


def naive_two_sample_test(
    x,
    y,
    fd: FeatureDescriptor | None = None,
    R: int = 199,
    alpha: float = 0.05,
    seed: int = 0,
    center: str = "mean",
    ties: str = "randomized",
) -> TestResult:
    """Compare f(x) - f(y) against independently phase-randomized differences.

    This is the two-sample test that is *not* a valid null for a spectral-only
    difference; it is provided to demonstrate that failure.
    """
    fd = fd or FeatureDescriptor("lz76")
    x, y = as_segment(x), as_segment(y)
    if x.size != y.size:
        raise StatsError(f"segment length mismatch: {x.size} vs {y.size}")
    if not 0.0 < alpha < 1.0:
        raise StatsError(f"alpha must lie in (0, 1), got {alpha}")
    if (R + 1) * alpha < 1.0:
        raise StatsError(f"R={R} surrogates cannot resolve alpha={alpha}")
    T = x.size
    H = T // 2 + 1
    amps, ph = half_spectra(np.stack([x, y]))
    rs = np.arange(R)
    null_segs = []
    for cond in (0, 1):
        u = uniforms(seed, Scheme.PHASE_RANDOM, cond, [0], rs, H)[:, 0, :]
        phases = np.stack([random_phases(T, row, dc_phase=ph[cond, 0]) for row in u])
        null_segs.append(np.fft.irfft(amps[cond] * np.exp(1j * phases), n=T, axis=-1))
    delta = fd(x) - fd(y)
    null = fd.batch(null_segs[0]) - fd.batch(null_segs[1])
    # condition 2 of the same stream family holds the tie-breaking draw
    u = float(uniforms(seed, Scheme.PHASE_RANDOM, 2, [0], [0], 1)[0, 0, 0])
    p = rank_p_value(delta, null, center, ties, u)
    return TestResult(delta, p, R, p < alpha, alpha)


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise StatsError("Wilson interval needs n > 0")
    ph = k / n
    denom = 1.0 + z * z / n
    centre = (ph + z * z / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class FprReport:
    c: float
    trials: int
    rejections: int
    rate: float
    ci_lo: float
    ci_hi: float


def false_positive_sweep(
    cs=(0.0, 0.25, 0.5, 1.0),
    trials: int = 400,
    R: int = 199,
    alpha: float = 0.05,
    seed: int = 0,
    T: int = 256,
    fd: FeatureDescriptor | None = None,
) -> list[FprReport]:
    """Rejection rate of the naive test on shared-phase pairs, per roughness c.

    The pairs differ only in their spectra, so every rejection is a false
    positive.
    """
    if trials < 100:
        raise StatsError(f"a sweep needs at least 100 trials per c, got {trials}")
    fd = fd or FeatureDescriptor("lz76")
    spec_a, spec_b = demo_spectra(T)
    reports = []
    for ci, c in enumerate(cs):
        pm = PhaseModel("roughness", float(c))
        rejections = 0
        for t in range(trials):
            trial_seed = derive_seed(seed, 1, ci, t)
            x, y = make_pair_shared_phase(spec_a, spec_b, pm, np.random.default_rng(trial_seed))
            res = naive_two_sample_test(x, y, fd, R, alpha, trial_seed)
            rejections += int(res.reject)
        lo, hi = wilson_interval(rejections, trials)
        reports.append(FprReport(float(c), trials, rejections, rejections / trials, lo, hi))
    return reports
