"""Slow reference implementations used to check the fast paths.

Nothing here shares code with the production routines: the DFT is a direct
O(T^2) summation, LZ76 is the textbook quadratic parser and the surrogate
expectations are exhaustive enumerations over donor assignments.
"""
from __future__ import annotations

import itertools
import math

import numba
import numpy as np


def direct_dft(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    T = x.size
    t = np.arange(T)
    W = np.exp(-2j * np.pi * np.outer(t, t) / T)
    return W @ x


def direct_idft(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    T = X.size
    t = np.arange(T)
    W = np.exp(2j * np.pi * np.outer(t, t) / T)
    return (W @ X) / T


def direct_recombine(amp_donor, phase_donor) -> np.ndarray:
    """Amplitudes of one real segment with the phases of another, via direct DFT."""
    A = np.abs(direct_dft(amp_donor))
    phi = np.angle(direct_dft(phase_donor))
    out = direct_idft(A * np.exp(1j * phi))
    return out.real


@numba.njit(cache=True)
def lz76_reference(s) -> int:
    """Quadratic exhaustive-history LZ76 parse.

    At each phrase start i, find the longest l such that s[i:i+l] equals
    s[p:p+l] for some p < i (the copy may run into the phrase itself); the
    phrase is s[i:i+l+1], or the remainder of the string if that is shorter.
    """
    n = s.size
    c = 0
    i = 0
    while i < n:
        best = 0
        for p in range(i):
            l = 0
            while i + l < n and s[p + l] == s[i + l]:
                l += 1
            if l > best:
                best = l
        c += 1
        i += best + 1
    return c


def lz76_reference_str(bits: str) -> int:
    return int(lz76_reference(np.frombuffer(bits.encode(), dtype=np.uint8) - 48))


def _binarize(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.all(x == x[0]):
        return np.zeros(x.size, dtype=np.uint8)
    return (x > math.fsum(x) / x.size).astype(np.uint8)


def lz76_feature(x) -> float:
    return float(lz76_reference(_binarize(x)))


def _f_recombined(amp_seg, phase_seg, f) -> float:
    return f(direct_recombine(amp_seg, phase_seg))


def enumerate_nu_within(xs, f=lz76_feature) -> float:
    """Exact E[nu^i(x)] averaging over every joint donor assignment."""
    N = len(xs)
    vals = []
    for alpha in itertools.product(range(N), repeat=N):
        vals.append(np.mean([_f_recombined(xs[j], xs[alpha[j]], f) for j in range(N)]))
    return float(np.mean(vals))


def _pooled_donors(own, other):
    # (probability, segment) over coin x index, per anchor
    opts = [(0.5 / len(own), s) for s in own] + [(0.5 / len(other), s) for s in other]
    return opts


def enumerate_nu_across(xs, ys, f=lz76_feature) -> float:
    """Exact E[nu^phi(x|y)] over every joint (coin, donor) assignment."""
    N = len(xs)
    opts = _pooled_donors(xs, ys)
    total = 0.0
    for combo in itertools.product(range(len(opts)), repeat=N):
        prob = 1.0
        vals = []
        for j, o in enumerate(combo):
            w, seg = opts[o]
            prob *= w
            vals.append(_f_recombined(xs[j], seg, f))
        total += prob * np.mean(vals)
    return total


def enumerate_nu_mixed_amplitude(xs, ys, f=lz76_feature) -> float:
    """Exact mean when each x_j keeps its phases and takes pooled donor amplitudes."""
    N = len(xs)
    opts = _pooled_donors(xs, ys)
    total = 0.0
    for combo in itertools.product(range(len(opts)), repeat=N):
        prob = 1.0
        vals = []
        for j, o in enumerate(combo):
            w, seg = opts[o]
            prob *= w
            vals.append(_f_recombined(seg, xs[j], f))
        total += prob * np.mean(vals)
    return total


def enumerate_delta_A_alt(xs, ys, f=lz76_feature) -> float:
    ni_x = enumerate_nu_within(xs, f)
    ni_y = enumerate_nu_within(ys, f)
    return (ni_x - enumerate_nu_mixed_amplitude(xs, ys, f)) - (
        ni_y - enumerate_nu_mixed_amplitude(ys, xs, f)
    )


def t_two_sided_quadrature(t: float, df: float) -> float:
    """P(|T| >= |t|) by adaptive quadrature of the Student t density."""
    from scipy.integrate import quad

    logc = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)

    def dens(u):
        return math.exp(logc - (df + 1) / 2 * math.log1p(u * u / df))

    a = abs(t)
    # integrate the body on [0, a] when that is the smaller piece
    if a < 1.0:
        body, _ = quad(dens, 0.0, a, epsabs=1e-14, epsrel=1e-13, limit=200)
        return 1.0 - 2.0 * body
    tail, _ = quad(dens, a, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    return 2.0 * tail
