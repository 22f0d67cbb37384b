"""Surrogate constructions behind the null models.

All surrogates keep the amplitude spectrum of their amplitude source and take
phases from a donor. Donor choice is driven by a :class:`TaskStream`:

* within: donor index uniform over the same condition, self included;
* across (pooled): a fair coin picks the condition, then a uniform index in it;
* swapped: donor index uniform over the other condition;
* phase-randomized: i.i.d. uniform phases on the free bins.
"""
from __future__ import annotations

import numpy as np

from .dataset import ConditionDataset, check_compatible
from .seeding import Scheme, TaskStream, uniforms
from .spectral import TWO_PI, SpectralRep, as_segment, forward_spectrum, recombine


def _pick(u: float, size: int) -> int:
    return min(int(u * size), size - 1)


def within_condition_surrogate(d: ConditionDataset, j: int, rng: TaskStream) -> np.ndarray:
    alpha = _pick(rng.uniforms(1)[0], d.n_segments)
    return recombine(d.spectrum(j), d.spectrum(alpha))


def across_condition_surrogate(
    d: ConditionDataset, other: ConditionDataset, j: int, rng: TaskStream
) -> np.ndarray:
    check_compatible(d, other)
    coin, u = rng.uniforms(2)
    pool = d if coin < 0.5 else other
    return recombine(d.spectrum(j), pool.spectrum(_pick(u, pool.n_segments)))


def swapped_spectra_surrogate(
    target: ConditionDataset, phase_pool: ConditionDataset, k: int, rng: TaskStream
) -> np.ndarray:
    check_compatible(target, phase_pool)
    beta = _pick(rng.uniforms(1)[0], phase_pool.n_segments)
    return recombine(target.spectrum(k), phase_pool.spectrum(beta))


def random_phases(T: int, u: np.ndarray, dc_phase: float = 0.0, spread: float = 1.0) -> np.ndarray:
    """Half-spectrum phases from uniforms ``u`` (length T//2 + 1).

    Free bins get ``2*pi*spread*u``. For even T the Nyquist bin is pi when
    ``u < spread / 2`` and 0 otherwise. ``u[0]`` is unused; DC gets ``dc_phase``.
    """
    H = T // 2 + 1
    phases = TWO_PI * spread * np.asarray(u[:H], dtype=np.float64)
    phases[0] = dc_phase
    if T % 2 == 0:
        phases[H - 1] = np.pi if u[H - 1] < spread / 2 else 0.0
    return phases


def phase_randomized_surrogate(x, rng: TaskStream) -> np.ndarray:
    """Classical phase randomization; the DC bin (and so the mean) is kept."""
    x = as_segment(x)
    T = x.size
    spec = forward_spectrum(x)
    a, p = spec.half()
    phases = random_phases(T, rng.uniforms(T // 2 + 1), dc_phase=p[0])
    return recombine(spec, SpectralRep.from_half(a, phases, T))


# Bulk donor draws for the Monte-Carlo estimators.

def draw_donors(
    seed: int,
    scheme: Scheme,
    condition: int,
    n_anchor: int,
    rs: np.ndarray,
    own_size: int,
    other_size: int = 0,
) -> np.ndarray:
    """Donor indices for anchors 0..n_anchor-1 over realizations ``rs``.

    Indices address the pool [own segments..., other segments...]. Stream
    draw 0 is the index (within, swapped) or the coin (across, mixed), in
    which case draw 1 is the index.
    """
    js = np.arange(n_anchor)
    if scheme in (Scheme.WITHIN, Scheme.SWAPPED):
        size = own_size if scheme == Scheme.WITHIN else other_size
        u = uniforms(seed, scheme, condition, js, rs, 1)[..., 0]
        idx = np.minimum((u * size).astype(np.int64), size - 1)
        return idx if scheme == Scheme.WITHIN else idx + own_size
    if scheme in (Scheme.ACROSS, Scheme.MIXED_AMPLITUDE):
        u = uniforms(seed, scheme, condition, js, rs, 2)
        own = u[..., 0] < 0.5
        i_own = np.minimum((u[..., 1] * own_size).astype(np.int64), own_size - 1)
        i_other = np.minimum((u[..., 1] * other_size).astype(np.int64), other_size - 1)
        return np.where(own, i_own, own_size + i_other)
    raise ValueError(f"scheme {scheme!r} has no donor pool")
