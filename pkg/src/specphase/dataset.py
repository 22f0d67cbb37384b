"""Condition datasets: N equal-length segments recorded under one condition."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import SpectralError, SpectralRep, forward_spectrum, half_spectra


@dataclass(eq=False)
class ConditionDataset:
    """Segments of one condition, stored as an (N, T) float array.

    Segments are treated as i.i.d. draws from the condition's process.
    """

    segments: np.ndarray
    label: str = "x"
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.segments, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise SpectralError("a dataset needs at least one segment")
        if arr.shape[1] < 2:
            raise SpectralError(f"segment length must be >= 2, got {arr.shape[1]}")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            j, t = bad[0]
            raise SpectralError(f"non-finite sample in segment {int(j)} at index {int(t)}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.segments = arr

    @property
    def n_segments(self) -> int:
        return self.segments.shape[0]

    @property
    def length(self) -> int:
        return self.segments.shape[1]

    def __len__(self) -> int:
        return self.n_segments

    @cached_property
    def half(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-wise (amplitudes, phases) over bins 0..T//2."""
        return half_spectra(self.segments)

    def spectrum(self, j: int) -> SpectralRep:
        return forward_spectrum(self.segments[j])


def check_compatible(*datasets: ConditionDataset) -> int:
    T = datasets[0].length
    for d in datasets[1:]:
        if d.length != T:
            raise SpectralError(f"segment length mismatch: {T} vs {d.length}")
    return T
