"""Spectral / phasic / interaction decomposition of a feature difference.

Every surrogate-based mean is a V-statistic over (anchor, donor) pairs: the
anchor j runs over one condition and the donor is drawn at random. For the
within and pooled schemes the anchor supplies amplitudes and the donor
phases; for the mixed-amplitude scheme (alternative ordering) it is the other
way round.

Each mean is estimated once and reused wherever it appears, so the
components add up to the raw difference exactly for any realization count.

Two standard errors are reported per quantity:

``stderr``
    Monte-Carlo error only, from the spread of the R realization means.
``total_se``
    Monte-Carlo plus segment sampling error, from a first-order
    (influence-function) expansion of each V-statistic in the segments of
    both conditions. Use this one to ask whether a component is zero in
    the population.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import ConditionDataset, check_compatible
from .features import FeatureDescriptor
from .seeding import Scheme
from .spectral import HERMITIAN_TOL, SpectralError
from .surrogates import draw_donors

DEFAULT_REALIZATIONS = 500
CHUNK_ROWS = 4096

X_SIDE, Y_SIDE = 0, 1

COMPONENTS = ("total", "A", "phi_x", "phi_y", "i_x", "i_y", "phi", "i")


class DecompositionError(ValueError):
    pass


def default_threads() -> int:
    env = os.environ.get("SPECPHASE_THREADS")
    if env:
        return max(1, int(env))
    return 1


@dataclass
class MonteCarloEstimate:
    """Realization-level summary of one surrogate mean."""

    realization_means: np.ndarray
    anchor_side: int
    anchor_means: np.ndarray
    donor_weights: np.ndarray
    donor_means: np.ndarray

    @property
    def R(self) -> int:
        return self.realization_means.size

    @property
    def mean(self) -> float:
        return float(np.mean(self.realization_means))

    @property
    def stderr(self) -> float:
        return _mc_stderr(self.realization_means)

    def influence(self, n_x: int) -> np.ndarray:
        """Per-segment first-order contributions, indexed [x segments, y segments]."""
        psi = self.donor_weights * self.donor_means
        n = self.anchor_means.size
        offset = 0 if self.anchor_side == X_SIDE else n_x
        psi[offset:offset + n] += self.anchor_means / n
        return psi


def _mc_stderr(series: np.ndarray) -> float:
    if series.size < 2:
        return 0.0
    return float(np.std(series, ddof=1) / np.sqrt(series.size))


def _side_pools(x: ConditionDataset, y: ConditionDataset, side: int):
    """(own, other) datasets for an anchor side."""
    return (x, y) if side == X_SIDE else (y, x)


def _estimate(
    x: ConditionDataset,
    y: ConditionDataset,
    side: int,
    scheme: Scheme,
    fd: FeatureDescriptor,
    R: int,
    seed: int,
    stream_condition: int,
    threads: int,
) -> MonteCarloEstimate:
    if R < 1:
        raise DecompositionError(f"realization count must be >= 1, got {R}")
    own, other = _side_pools(x, y, side)
    T = own.length
    n, m = own.n_segments, other.n_segments
    amps_own, ph_own = own.half
    if scheme == Scheme.WITHIN:
        pool_amps, pool_ph = amps_own, ph_own
    else:
        amps_other, ph_other = other.half
        pool_amps = np.vstack([amps_own, amps_other])
        pool_ph = np.vstack([ph_own, ph_other])
    phasors = np.exp(1j * pool_ph)

    # realization chunks depend only on (n, T), never on the thread count
    per_chunk = max(1, CHUNK_ROWS // n)
    chunks = [np.arange(s, min(s + per_chunk, R)) for s in range(0, R, per_chunk)]

    def run(rs: np.ndarray):
        donors = draw_donors(seed, scheme, stream_condition, n, rs, n, m if scheme != Scheme.WITHIN else 0)
        anchors = np.broadcast_to(np.arange(n), donors.shape)
        if scheme == Scheme.MIXED_AMPLITUDE:
            coeffs = pool_amps[donors] * phasors[anchors]
        else:
            coeffs = pool_amps[anchors] * phasors[donors]
        coeffs = coeffs.reshape(-1, coeffs.shape[-1])
        _check_self_conjugate_bins(coeffs, T)
        segs = np.fft.irfft(coeffs, n=T, axis=-1)
        return donors, fd.batch(segs).reshape(rs.size, n)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(rs) for rs in chunks]
    donors = np.concatenate([p[0] for p in parts], axis=0)
    values = np.concatenate([p[1] for p in parts], axis=0)

    realization_means = values.mean(axis=1)
    anchor_means = values.mean(axis=0)

    # donor pool index -> global index [x..., y...]
    if side == X_SIDE or scheme == Scheme.WITHIN:
        to_global = np.arange(n + (m if scheme != Scheme.WITHIN else 0))
        if side == Y_SIDE:
            to_global = to_global + x.n_segments
    else:
        to_global = np.concatenate([np.arange(n) + x.n_segments, np.arange(m)])
    n_total = x.n_segments + y.n_segments
    g = to_global[donors.ravel()]
    counts = np.bincount(g, minlength=n_total)
    sums = np.bincount(g, weights=values.ravel(), minlength=n_total)
    overall = float(values.mean())
    donor_means = np.where(counts > 0, sums / np.maximum(counts, 1), overall)

    weights = np.zeros(n_total)
    own_global = to_global[:n]
    if scheme == Scheme.WITHIN:
        weights[own_global] = 1.0 / n
    else:
        weights[own_global] = 0.5 / n
        weights[to_global[n:]] = 0.5 / m
    return MonteCarloEstimate(realization_means, side, anchor_means, weights, donor_means)


def _check_self_conjugate_bins(coeffs: np.ndarray, T: int) -> None:
    bins = [0] + ([T // 2] if T % 2 == 0 else [])
    scale = np.maximum(np.abs(coeffs).max(axis=1), np.finfo(float).tiny)
    for b in bins:
        if np.any(np.abs(coeffs[:, b].imag) > HERMITIAN_TOL * scale):
            raise SpectralError(f"imaginary residue at bin {b} exceeds tolerance")


def _total_se(psi: np.ndarray, n_x: int) -> float:
    var = 0.0
    for part in (psi[:n_x], psi[n_x:]):
        k = part.size
        if k < 2:
            # a lone segment's sampling variance cannot be estimated
            if k == 1 and part[0] != 0:
                return float("nan")
            continue
        var += k / (k - 1) * float(np.sum((part - part.mean()) ** 2))
    return float(np.sqrt(var))


def ensemble_mean(d: ConditionDataset, fd: FeatureDescriptor) -> float:
    return float(np.mean(fd.batch(d.segments)))


def nu_within(
    d: ConditionDataset,
    fd: FeatureDescriptor,
    R: int = DEFAULT_REALIZATIONS,
    seed: int = 0,
    condition: int = X_SIDE,
    threads: int | None = None,
) -> tuple[float, float]:
    """Mean feature value over within-condition phase shuffles, with MC stderr."""
    est = _estimate(d, d, X_SIDE, Scheme.WITHIN, fd, R, seed, condition, threads or default_threads())
    return est.mean, est.stderr


def nu_across(
    d: ConditionDataset,
    other: ConditionDataset,
    fd: FeatureDescriptor,
    R: int = DEFAULT_REALIZATIONS,
    seed: int = 0,
    condition: int = X_SIDE,
    threads: int | None = None,
) -> tuple[float, float]:
    """Mean feature value over pooled across-condition phase shuffles."""
    check_compatible(d, other)
    est = _estimate(d, other, X_SIDE, Scheme.ACROSS, fd, R, seed, condition, threads or default_threads())
    return est.mean, est.stderr


@dataclass
class DecompositionResult:
    f_bar_x: float
    f_bar_y: float
    nu_i_x: float
    nu_i_y: float
    nu_phi_x_given_y: float
    nu_phi_y_given_x: float
    delta_total: float
    delta_A: float
    delta_phi_x: float
    delta_phi_y: float
    delta_i_x: float
    delta_i_y: float
    realizations: int
    seed: int
    telescope_residual: float
    nu_stderr: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)
    total_se: dict = field(default_factory=dict)

    @property
    def delta_phi(self) -> float:
        return self.delta_phi_x - self.delta_phi_y

    @property
    def delta_i(self) -> float:
        return self.delta_i_x - self.delta_i_y

    def value(self, component: str) -> float:
        if component == "total":
            return self.delta_total
        return getattr(self, f"delta_{component}")

    def z(self, component: str, kind: str = "total") -> float:
        """Component divided by its total (default) or Monte-Carlo standard error."""
        se = (self.total_se if kind == "total" else self.stderr)[component]
        v = self.value(component)
        if se == 0:
            return 0.0 if v == 0 else float("inf") * np.sign(v)
        return v / se


def _series(est: MonteCarloEstimate | None, R: int) -> np.ndarray:
    return np.zeros(R) if est is None else est.realization_means


def decompose(
    x: ConditionDataset,
    y: ConditionDataset,
    fd: FeatureDescriptor | None = None,
    R: int = DEFAULT_REALIZATIONS,
    seed: int = 0,
    mirrored: bool = False,
    threads: int | None = None,
) -> DecompositionResult:
    """Split f̄(x) - f̄(y) into spectral, phasic and interaction components.

    ``mirrored`` makes the y-side draw the same random streams as the x-side;
    for identical datasets this turns expectation-level cancellations into
    exact ones. It is a testing aid only.
    """
    fd = fd or FeatureDescriptor("lz76")
    check_compatible(x, y)
    if R < 1:
        raise DecompositionError(f"realization count must be >= 1, got {R}")
    threads = threads or default_threads()
    y_cond = X_SIDE if mirrored else Y_SIDE
    n_x = x.n_segments

    fx_vals = fd.batch(x.segments)
    fy_vals = fd.batch(y.segments)
    f_bar_x = float(np.mean(fx_vals))
    f_bar_y = float(np.mean(fy_vals))

    wi_x = _estimate(x, y, X_SIDE, Scheme.WITHIN, fd, R, seed, X_SIDE, threads)
    wi_y = _estimate(x, y, Y_SIDE, Scheme.WITHIN, fd, R, seed, y_cond, threads)
    ac_x = _estimate(x, y, X_SIDE, Scheme.ACROSS, fd, R, seed, X_SIDE, threads)
    ac_y = _estimate(x, y, Y_SIDE, Scheme.ACROSS, fd, R, seed, y_cond, threads)

    nix, niy = wi_x.mean, wi_y.mean
    npx, npy = ac_x.mean, ac_y.mean
    d_i_x = f_bar_x - nix
    d_i_y = f_bar_y - niy
    d_phi_x = nix - npx
    d_phi_y = niy - npy
    d_A = npx - npy
    d_total = f_bar_x - f_bar_y
    residual = (d_A + (d_phi_x - d_phi_y) + (d_i_x - d_i_y)) - d_total

    # per-realization component series for Monte-Carlo errors
    s = {
        "i_x": -wi_x.realization_means,
        "i_y": -wi_y.realization_means,
        "phi_x": wi_x.realization_means - ac_x.realization_means,
        "phi_y": wi_y.realization_means - ac_y.realization_means,
        "A": ac_x.realization_means - ac_y.realization_means,
    }
    s["phi"] = s["phi_x"] - s["phi_y"]
    s["i"] = s["i_x"] - s["i_y"]
    stderr = {k: _mc_stderr(v) for k, v in s.items()}
    stderr["total"] = 0.0

    # first-order segment contributions for the total standard error
    fbar_x_psi = np.concatenate([fx_vals / n_x, np.zeros(y.n_segments)])
    fbar_y_psi = np.concatenate([np.zeros(n_x), fy_vals / y.n_segments])
    p_wx, p_wy = wi_x.influence(n_x), wi_y.influence(n_x)
    p_ax, p_ay = ac_x.influence(n_x), ac_y.influence(n_x)
    psi = {
        "total": fbar_x_psi - fbar_y_psi,
        "A": p_ax - p_ay,
        "phi_x": p_wx - p_ax,
        "phi_y": p_wy - p_ay,
        "i_x": fbar_x_psi - p_wx,
        "i_y": fbar_y_psi - p_wy,
    }
    psi["phi"] = psi["phi_x"] - psi["phi_y"]
    psi["i"] = psi["i_x"] - psi["i_y"]
    total_se = {k: _total_se(v, n_x) for k, v in psi.items()}

    return DecompositionResult(
        f_bar_x=f_bar_x,
        f_bar_y=f_bar_y,
        nu_i_x=nix,
        nu_i_y=niy,
        nu_phi_x_given_y=npx,
        nu_phi_y_given_x=npy,
        delta_total=d_total,
        delta_A=d_A,
        delta_phi_x=d_phi_x,
        delta_phi_y=d_phi_y,
        delta_i_x=d_i_x,
        delta_i_y=d_i_y,
        realizations=R,
        seed=seed,
        telescope_residual=residual,
        nu_stderr={
            "nu_i_x": wi_x.stderr,
            "nu_i_y": wi_y.stderr,
            "nu_phi_x_given_y": ac_x.stderr,
            "nu_phi_y_given_x": ac_y.stderr,
        },
        stderr=stderr,
        total_se=total_se,
    )


def decompose_alternative(
    x: ConditionDataset,
    y: ConditionDataset,
    fd: FeatureDescriptor | None = None,
    R: int = DEFAULT_REALIZATIONS,
    seed: int = 0,
    mirrored: bool = False,
    threads: int | None = None,
) -> tuple[float, float]:
    """Spectral component assessed first (spectra pooled before phases).

    Each segment keeps its own phases and takes the amplitudes of a donor drawn
    from either condition with probability 1/2. Returns the spectral
    difference and its Monte-Carlo standard error; its expectation equals
    ``decompose(...).delta_A``.
    """
    fd = fd or FeatureDescriptor("lz76")
    check_compatible(x, y)
    if R < 1:
        raise DecompositionError(f"realization count must be >= 1, got {R}")
    threads = threads or default_threads()
    y_cond = X_SIDE if mirrored else Y_SIDE
    wi_x = _estimate(x, y, X_SIDE, Scheme.WITHIN, fd, R, seed, X_SIDE, threads)
    wi_y = _estimate(x, y, Y_SIDE, Scheme.WITHIN, fd, R, seed, y_cond, threads)
    mx_x = _estimate(x, y, X_SIDE, Scheme.MIXED_AMPLITUDE, fd, R, seed, X_SIDE, threads)
    mx_y = _estimate(x, y, Y_SIDE, Scheme.MIXED_AMPLITUDE, fd, R, seed, y_cond, threads)
    value = (wi_x.mean - mx_x.mean) - (wi_y.mean - mx_y.mean)
    series = (wi_x.realization_means - mx_x.realization_means) - (
        wi_y.realization_means - mx_y.realization_means
    )
    return float(value), _mc_stderr(series)
