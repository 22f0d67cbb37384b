"""Real-signal Fourier analysis/synthesis and amplitude/phase recombination.

Conventions: the forward transform is unnormalized, the inverse carries the
1/T factor. Phases live in [0, 2*pi). A bin with exactly zero amplitude gets
phase 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
HERMITIAN_TOL = 1e-9


class SpectralError(ValueError):
    """Raised for invalid segments or spectra that are not Hermitian."""


def as_segment(x) -> np.ndarray:
    """Validate a time-series segment and return it as a float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise SpectralError(f"segment must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise SpectralError(f"segment length must be >= 2, got {arr.size}")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise SpectralError(f"non-finite sample at index {int(bad[0])}")
    return arr


def _wrap(phases: np.ndarray) -> np.ndarray:
    out = np.mod(phases, TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    out[out >= TWO_PI] = 0.0
    return out


def _mirror_phases(half: np.ndarray, T: int) -> np.ndarray:
    full = np.empty(T)
    H = half.size
    full[:H] = half
    k = np.arange(H, T)
    full[H:] = _wrap(TWO_PI - half[T - k])
    return full


@dataclass(frozen=True)
class SpectralRep:
    """Amplitudes and phases of a real segment's DFT (full length T)."""

    amplitudes: np.ndarray
    phases: np.ndarray

    @property
    def length(self) -> int:
        return int(self.amplitudes.size)

    @property
    def parity(self) -> str:
        return "even" if self.length % 2 == 0 else "odd"

    @property
    def n_half(self) -> int:
        """Number of non-redundant bins, T // 2 + 1."""
        return self.length // 2 + 1

    @classmethod
    def from_half(cls, amplitudes_half, phases_half, T: int) -> "SpectralRep":
        """Build a Hermitian-symmetric representation from bins 0..T//2."""
        a = np.asarray(amplitudes_half, dtype=np.float64)
        p = _wrap(np.asarray(phases_half, dtype=np.float64).copy())
        if a.size != T // 2 + 1 or p.size != a.size:
            raise SpectralError(f"half spectrum must have {T // 2 + 1} bins for T={T}")
        amps = np.empty(T)
        amps[: a.size] = a
        k = np.arange(a.size, T)
        amps[a.size:] = a[T - k]
        return cls(amps, _mirror_phases(p, T))

    def half(self) -> tuple[np.ndarray, np.ndarray]:
        H = self.n_half
        return self.amplitudes[:H], self.phases[:H]

    def check_hermitian(self, tol: float = HERMITIAN_TOL) -> None:
        """Raise SpectralError unless the representation is Hermitian-symmetric.

        Phases are only compared at bins where the amplitude is nonzero, since
        the phase of a zero coefficient carries no information.
        """
        a, p = self.amplitudes, self.phases
        T = self.length
        if p.size != T:
            raise SpectralError("amplitude and phase vectors differ in length")
        if np.any(a < 0) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(p)):
            raise SpectralError("amplitudes must be finite and non-negative")
        scale = max(float(a.max()), 1.0) if T else 1.0
        k = np.arange(1, T)
        amp_gap = np.abs(a[k] - a[T - k])
        if np.any(amp_gap > tol * np.maximum(np.abs(a[k]), scale)):
            idx = int(k[np.argmax(amp_gap)])
            raise SpectralError(f"Hermitian violation: amplitude mismatch at bin {idx}")
        live = (a[k] > 0) & (a[T - k] > 0)
        circ = np.abs(np.angle(np.exp(1j * (p[k] + p[T - k]))))
        if np.any(live & (circ > tol)):
            idx = int(k[np.argmax(np.where(live, circ, 0.0))])
            raise SpectralError(f"Hermitian violation: phase mismatch at bin {idx}")
        self_bins = [0] + ([T // 2] if T % 2 == 0 else [])
        for b in self_bins:
            if a[b] > 0 and abs(np.sin(p[b])) > tol:
                raise SpectralError(f"Hermitian violation: bin {b} phase must be 0 or pi")


def forward_spectrum(x) -> SpectralRep:
    """Amplitudes (moduli) and phases (arguments) of the DFT of ``x``."""
    x = as_segment(x)
    T = x.size
    coeffs = np.fft.rfft(x)
    amps = np.abs(coeffs)
    phases = np.arctan2(coeffs.imag, coeffs.real)
    phases[amps == 0] = 0.0
    return SpectralRep.from_half(amps, phases, T)


def _synthesize(amps_half: np.ndarray, phases_half: np.ndarray, T: int) -> np.ndarray:
    """Inverse DFT of the Hermitian spectrum defined by its lower half."""
    coeffs_half = amps_half * np.exp(1j * phases_half)
    full = np.empty(T, dtype=np.complex128)
    H = coeffs_half.size
    full[:H] = coeffs_half
    # re-symmetrize: the upper half is always the conjugate of the lower half
    k = np.arange(H, T)
    full[H:] = np.conj(coeffs_half[T - k])
    out = np.fft.ifft(full)
    max_amp = float(amps_half.max()) if amps_half.size else 0.0
    residue = float(np.abs(out.imag).max())
    if residue > HERMITIAN_TOL * max(max_amp, np.finfo(float).tiny):
        if max_amp > 0:
            raise SpectralError(f"imaginary residue {residue:.3g} after inverse transform")
    return out.real.copy()


def inverse_series(s: SpectralRep) -> np.ndarray:
    """Real segment whose spectrum is ``s``."""
    s.check_hermitian()
    a, p = s.half()
    return _synthesize(a, p, s.length)


def recombine(amp_source: SpectralRep, phase_source: SpectralRep) -> np.ndarray:
    """Segment with the amplitudes of one spectrum and the phases of another.

    The donor's phases replace all bins, including DC and (even T) Nyquist.
    """
    if amp_source.length != phase_source.length:
        raise SpectralError(
            f"length mismatch: {amp_source.length} vs {phase_source.length}"
        )
    amp_source.check_hermitian()
    phase_source.check_hermitian()
    a, _ = amp_source.half()
    _, p = phase_source.half()
    return _synthesize(a, p, amp_source.length)


# Batched half-spectrum helpers used by the Monte-Carlo estimators.

def half_spectra(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise amplitudes and phases (bins 0..T//2) of a 2-D array of segments."""
    coeffs = np.fft.rfft(X, axis=-1)
    amps = np.abs(coeffs)
    phases = np.arctan2(coeffs.imag, coeffs.real)
    phases[amps == 0] = 0.0
    return amps, _wrap(phases)


def synthesize_batch(amps_half: np.ndarray, phases_half: np.ndarray, T: int) -> np.ndarray:
    """Row-wise inverse transform of half spectra.

    irfft only reads the lower half, which is the re-symmetrization step. The
    DC and Nyquist bins must carry phases in {0, pi}; their dropped imaginary
    parts are checked against the realness tolerance.
    """
    self_bins = [0] + ([T // 2] if T % 2 == 0 else [])
    for b in self_bins:
        resid = np.abs(amps_half[..., b] * np.sin(phases_half[..., b]))
        limit = HERMITIAN_TOL * np.maximum(amps_half.max(axis=-1), np.finfo(float).tiny)
        if np.any(resid > limit):
            raise SpectralError(f"imaginary residue at bin {b} exceeds tolerance")
    return np.fft.irfft(amps_half * np.exp(1j * phases_half), n=T, axis=-1)
