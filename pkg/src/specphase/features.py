"""Scalar features of time-series segments.

``lz76`` (Lempel-Ziv 1976 complexity of the mean-binarized segment) is the
main feature; ``spectral_centroid`` is a purely spectral control. Features are
looked up by name through :data:`REGISTRY` so the estimators stay
feature-agnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

from .spectral import as_segment


class FeatureError(ValueError):
    pass


@numba.njit(cache=True, nogil=True)
def _binarize_row(x, out):
    n = x.size
    total = 0.0
    lo = x[0]
    hi = x[0]
    for t in range(n):
        total += x[t]
        if x[t] < lo:
            lo = x[t]
        if x[t] > hi:
            hi = x[t]
    mean = total / n
    flat = lo == hi
    for t in range(n):
        out[t] = 1 if (not flat and x[t] > mean) else 0


@numba.njit(cache=True, nogil=True)
def _lz76_sam(s, nxt, link, ln):
    """LZ76 phrase count using an online suffix automaton over {0, 1}.

    A phrase starting at i is extended while s[i:i+l+1] occurs in s[:i+l],
    i.e. can be copied from a start position before i (overlap allowed). The
    automaton holds exactly s[:i+l] when the test is made.
    """
    n = s.size
    nxt[0, 0] = -1
    nxt[0, 1] = -1
    link[0] = -1
    ln[0] = 0
    size = 1
    last = 0
    built = 0
    c = 0
    i = 0
    while i < n:
        state = 0
        l = 0
        while True:
            if i + l >= n:
                # final phrase runs into the end of the string; counted once
                c += 1
                i = n
                break
            while built < i + l:
                ch = s[built]
                cur = size
                size += 1
                ln[cur] = ln[last] + 1
                nxt[cur, 0] = -1
                nxt[cur, 1] = -1
                p = last
                while p != -1 and nxt[p, ch] == -1:
                    nxt[p, ch] = cur
                    p = link[p]
                if p == -1:
                    link[cur] = 0
                else:
                    q = nxt[p, ch]
                    if ln[p] + 1 == ln[q]:
                        link[cur] = q
                    else:
                        cl = size
                        size += 1
                        ln[cl] = ln[p] + 1
                        nxt[cl, 0] = nxt[q, 0]
                        nxt[cl, 1] = nxt[q, 1]
                        link[cl] = link[q]
                        while p != -1 and nxt[p, ch] == q:
                            nxt[p, ch] = cl
                            p = link[p]
                        link[q] = cl
                        link[cur] = cl
                        # the clone takes over the shorter strings of q
                        if state == q and l <= ln[cl]:
                            state = cl
                last = cur
                built += 1
            t = nxt[state, s[i + l]]
            if t != -1:
                state = t
                l += 1
            else:
                c += 1
                i += l + 1
                break
    return c


@numba.njit(cache=True, nogil=True)
def _lz76_bits_batch(B):
    m, n = B.shape
    cap = 2 * n + 2
    nxt = np.empty((cap, 2), np.int64)
    link = np.empty(cap, np.int64)
    ln = np.empty(cap, np.int64)
    out = np.empty(m, np.int64)
    for r in range(m):
        out[r] = _lz76_sam(B[r], nxt, link, ln)
    return out


@numba.njit(cache=True, nogil=True)
def _lz76_signal_batch(X):
    m, n = X.shape
    cap = 2 * n + 2
    nxt = np.empty((cap, 2), np.int64)
    link = np.empty(cap, np.int64)
    ln = np.empty(cap, np.int64)
    bits = np.empty(n, np.uint8)
    out = np.empty(m, np.int64)
    for r in range(m):
        _binarize_row(X[r], bits)
        out[r] = _lz76_sam(bits, nxt, link, ln)
    return out


def binarize_mean(x) -> np.ndarray:
    """1 where the sample exceeds the segment mean, else 0 (ties map to 0)."""
    x = as_segment(x)
    out = np.empty(x.size, dtype=np.uint8)
    _binarize_row(x, out)
    return out


def _as_bits(b) -> np.ndarray:
    bits = np.asarray(b)
    if bits.ndim != 1 or bits.size == 0:
        raise FeatureError("bit sequence must be a non-empty 1-D sequence")
    if not np.all((bits == 0) | (bits == 1)):
        raise FeatureError("bit sequence must contain only 0 and 1")
    return np.ascontiguousarray(bits, dtype=np.uint8)


def lz76_complexity(b) -> int:
    """Number of phrases in the Lempel-Ziv (1976) exhaustive-history parse."""
    bits = _as_bits(b)
    return int(_lz76_bits_batch(bits[None, :])[0])


def lz76_complexity_batch(B) -> np.ndarray:
    B = np.ascontiguousarray(B, dtype=np.uint8)
    return _lz76_bits_batch(B)


def _lz76_feature(X: np.ndarray, normalize: bool = False) -> np.ndarray:
    vals = _lz76_signal_batch(np.ascontiguousarray(X, dtype=np.float64)).astype(np.float64)
    if normalize:
        T = X.shape[-1]
        vals *= np.log2(T) / T
    return vals


def _spectral_centroid(X: np.ndarray) -> np.ndarray:
    # amplitude-weighted mean of the frequency index over bins 1..T//2
    amps = np.abs(np.fft.rfft(X, axis=-1))[:, 1:]
    k = np.arange(1, amps.shape[1] + 1, dtype=np.float64)
    total = amps.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (amps * k).sum(axis=1) / total
    return np.where(total > 0, out, 0.0)


@dataclass(frozen=True)
class FeatureSpec:
    func: Callable[..., np.ndarray]
    options: dict[str, type]


REGISTRY: dict[str, FeatureSpec] = {
    "lz76": FeatureSpec(_lz76_feature, {"normalize": bool}),
    "spectral_centroid": FeatureSpec(_spectral_centroid, {}),
}


def _coerce_option(kind: type, value):
    if kind is bool and isinstance(value, str):
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise FeatureError(f"cannot read {value!r} as a boolean")
    return kind(value)


@dataclass(frozen=True)
class FeatureDescriptor:
    """A registered feature name plus its options."""

    name: str = "lz76"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in REGISTRY:
            known = ", ".join(sorted(REGISTRY))
            raise FeatureError(f"unknown feature {self.name!r}; registered: {known}")
        allowed = REGISTRY[self.name].options
        coerced = {}
        for key, value in self.options.items():
            if key not in allowed:
                raise FeatureError(f"feature {self.name!r} has no option {key!r}")
            coerced[key] = _coerce_option(allowed[key], value)
        object.__setattr__(self, "options", coerced)

    def batch(self, X) -> np.ndarray:
        """Feature values for each row of a 2-D array of segments."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if not np.all(np.isfinite(X)):
            row = int(np.argwhere(~np.isfinite(X))[0, 0])
            raise FeatureError(f"segment {row} contains non-finite samples")
        out =REGISTRY[self.name].func(X, **self.options)
        if not np.all(np.isfinite(out)):
            raise FeatureError(f"feature {self.name!r} produced a non-finite value")
        return out

    def __call__(self, x) -> float:
        return float(self.batch(as_segment(x)[None, :])[0])


def evaluate_feature(fd: FeatureDescriptor, x) -> float:
    return fd(x)
