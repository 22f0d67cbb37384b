"""Synthetic spectra, phase models and datasets with known null structure.

Amplitude spectra are defined over the frequency index k = min(bin, T - bin)
and always have zero DC amplitude (zero-mean signals).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import ConditionDataset
from .spectral import SpectralRep, _mirror_phases
from .surrogates import random_phases


class SyntheticError(ValueError):
    pass


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class SpectrumModel:
    """``power_law`` uses ``exponent`` and ``floor``; ``gaussian_bump`` uses
    ``center``, ``width``, ``height`` and ``floor`` (bins)."""

    kind: str
    T: int
    exponent: float = 1.0
    center: float = 0.0
    width: float = 1.0
    height: float = 1.0
    floor: float = 0.0

    def __post_init__(self):
        if self.kind not in ("power_law", "gaussian_bump"):
            raise SyntheticError(f"unknown spectrum kind {self.kind!r}")
        if self.T < 2:
            raise SyntheticError("T must be >= 2")
        if self.kind == "gaussian_bump" and self.width <= 0:
            raise SyntheticError("gaussian_bump width must be positive")
        if self.floor < 0 or self.height < 0:
            raise SyntheticError("floor and height must be non-negative")


@dataclass(frozen=True)
class PhaseModel:
    kind: str = "iid_uniform"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "roughness", "iid_uniform"):
            raise SyntheticError(f"unknown phase model {self.kind!r}")
        if not 0.0 <= self.c <= 1.0:
            raise SyntheticError(f"roughness c must lie in [0, 1], got {self.c}")

    @property
    def spread(self) -> float:
        return {"constant": 0.0, "iid_uniform": 1.0}.get(self.kind, self.c)


def demo_spectra(T: int) -> tuple[SpectrumModel, SpectrumModel]:
    """The fixed pair of spectra used by the naive-test demonstration (v1)."""
    a = SpectrumModel("power_law", T, exponent=1.0, floor=0.1)
    b = SpectrumModel("gaussian_bump", T, center=T / 8, width=T / 64, height=1.0, floor=0.02)
    return a, b


def _half_amplitudes(m: SpectrumModel) -> np.ndarray:
    k = np.arange(m.T // 2 + 1, dtype=np.float64)
    out = np.empty_like(k)
    if m.kind == "power_law":
        out[1:] = k[1:] ** (-m.exponent) + m.floor
    else:
        out[1:] = m.floor + m.height * np.exp(-0.5 * ((k[1:] - m.center) / m.width) ** 2)
    out[0] = 0.0
    return out


def generate_amplitudes(m: SpectrumModel) -> np.ndarray:
    """Full-length (T) Hermitian-symmetric amplitude vector."""
    half = _half_amplitudes(m)
    return SpectralRep.from_half(half, np.zeros_like(half), m.T).amplitudes


def _half_phases(T: int, spread: float, gen: np.random.Generator) -> np.ndarray:
    return random_phases(T, gen.random(T // 2 + 1), spread=spread)


def roughness_phases(T: int, c: float, rng=None) -> np.ndarray:
    """Full-length phase vector; free bins uniform on [0, 2*pi*c).

    c = 0 gives all-zero phases, c = 1 full phase randomization. DC is 0 and an
    even-T Nyquist bin is pi with probability c / 2.
    """
    if not 0.0 <= c <= 1.0:
        raise SyntheticError(f"roughness c must lie in [0, 1], got {c}")
    return _mirror_phases(_half_phases(T, c, _rng(rng)), T)


def _synth(amps_half: np.ndarray, phases_half: np.ndarray, T: int) -> np.ndarray:
    return np.fft.irfft(amps_half * np.exp(1j * phases_half), n=T, axis=-1)


def make_pair_shared_phase(
    spec_a: SpectrumModel, spec_b: SpectrumModel, pm: PhaseModel, rng=None
) -> tuple[np.ndarray, np.ndarray]:
    """Two segments with different spectra and one shared phase draw."""
    if spec_a.T != spec_b.T:
        raise SyntheticError(f"T mismatch: {spec_a.T} vs {spec_b.T}")
    T = spec_a.T
    ph = _half_phases(T, pm.spread, _rng(rng))
    return _synth(_half_amplitudes(spec_a), ph, T), _synth(_half_amplitudes(spec_b), ph, T)


def make_dataset(
    spec: SpectrumModel,
    pm: PhaseModel,
    N: int,
    rng=None,
    coupling: str = "none",
    jitter: float = 0.2,
    tilt: float = 1.0,
    label: str = "x",
) -> ConditionDataset:
    """N independent segments from a spectrum model and a phase model.

    Each segment's amplitudes are the model spectrum times i.i.d. per-bin
    log-normal jitter (sigma ``jitter``) times a per-segment steepening
    ``(k / k_mid) ** (-tilt * u)`` with u ~ U(0, 1).

    With ``coupling="none"`` phases come from ``pm`` independently of the
    amplitudes. With ``"amp_phase_coupled"`` each segment's phase roughness
    is ``1 - u`` (``pm`` is ignored): flatter spectra get rougher phases, so
    amplitudes and phases are dependent.
    """
    if N < 1:
        raise SyntheticError("N must be >= 1")
    if coupling not in ("none", "amp_phase_coupled"):
        raise SyntheticError(f"unknown coupling {coupling!r}")
    gen = _rng(rng)
    T = spec.T
    H = T // 2 + 1
    base = _half_amplitudes(spec)
    k = np.arange(H, dtype=np.float64)
    k[0] = 1.0
    k_mid = max(T / 4.0, 1.0)
    u = gen.random(N)
    noise = np.exp(jitter * gen.standard_normal((N, H)))
    amps = base * noise * (k / k_mid) ** (-tilt * u[:, None])
    amps[:, 0] = 0.0
    spreads = 1.0 - u if coupling == "amp_phase_coupled" else np.full(N, pm.spread)
    phases = np.stack([_half_phases(T, s, gen) for s in spreads])
    return ConditionDataset(_synth(amps, phases, T), label=label)


def make_shared_phase_datasets(
    spec_a: SpectrumModel, spec_b: SpectrumModel, pm: PhaseModel, N: int, rng=None
) -> tuple[ConditionDataset, ConditionDataset]:
    """x_j and y_j share phase draw j; only the (fixed) spectra differ."""
    gen = _rng(rng)
    pairs = [make_pair_shared_phase(spec_a, spec_b, pm, gen) for _ in range(N)]
    xs = np.stack([p[0] for p in pairs])
    ys = np.stack([p[1] for p in pairs])
    return ConditionDataset(xs, label="x"), ConditionDataset(ys, label="y")
