"""Counter-based random streams keyed by (master seed, scheme, condition, j, r).

Each label tuple is hashed into a SplitMix64 state; draw ``i`` of the stream is
the SplitMix64 output at counter ``i``. Draws are therefore pure functions of
their labels and independent of evaluation order or thread layout.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numba
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0
MASK64 = (1 << 64) - 1


class Scheme(IntEnum):
    WITHIN = 0
    ACROSS = 1
    SWAPPED = 2
    PHASE_RANDOM = 3
    MIXED_AMPLITUDE = 4
    TRIAL = 5


@numba.njit(cache=True, nogil=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, nogil=True)
def _key(seed, scheme, cond, j, r):
    k = _mix(seed + _GOLDEN)
    k = _mix(k ^ (np.uint64(scheme) * _GOLDEN + np.uint64(1)))
    k = _mix(k ^ (np.uint64(cond) * _GOLDEN + np.uint64(2)))
    k = _mix(k ^ (np.uint64(j) * _GOLDEN + np.uint64(3)))
    k = _mix(k ^ (np.uint64(r) * _GOLDEN + np.uint64(4)))
    return k


@numba.njit(cache=True, nogil=True)
def _uniform_grid(seed, scheme, cond, js, rs, n_draws):
    # out[a, b, i]: draw i of the stream labelled (rs[a], js[b])
    out = np.empty((rs.size, js.size, n_draws))
    for a in range(rs.size):
        for b in range(js.size):
            k = _key(seed, scheme, cond, js[b], rs[a])
            for i in range(n_draws):
                z = _mix(k + np.uint64(i + 1) * _GOLDEN)
                out[a, b, i] = (z >> np.uint64(11)) * _INV53
    return out


def uniforms(seed: int, scheme: int, condition: int, js, rs, n_draws: int) -> np.ndarray:
    """Uniform [0, 1) draws, shape (len(rs), len(js), n_draws)."""
    js = np.asarray(js, dtype=np.uint64).ravel()
    rs = np.asarray(rs, dtype=np.uint64).ravel()
    return _uniform_grid(np.uint64(int(seed) & MASK64), int(scheme), int(condition), js, rs, int(n_draws))


def derive_seed(seed: int, *labels: int) -> int:
    """A child master seed for sub-experiments (e.g. trial t of a sweep)."""
    labs = list(labels) + [0] * (4 - len(labels))
    if len(labs) > 4:
        raise ValueError("at most four labels")
    u = uniforms(seed, Scheme.TRIAL, labs[0], [labs[1]], [labs[2] * 65536 + labs[3]], 2)
    hi = int(u[0, 0, 0] * 2**32)
    lo = int(u[0, 0, 1] * 2**32)
    return (hi << 32) | lo


@dataclass(frozen=True)
class TaskStream:
    """The random stream owned by one (scheme, condition, j, r) task."""

    seed: int
    scheme: int
    condition: int
    j: int
    r: int

    def uniforms(self, n: int) -> np.ndarray:
        return uniforms(self.seed, self.scheme, self.condition, [self.j], [self.r], n)[0, 0]

    def index(self, size: int, draw: int = 0) -> int:
        u = self.uniforms(draw + 1)[draw]
        return min(int(u * size), size - 1)
