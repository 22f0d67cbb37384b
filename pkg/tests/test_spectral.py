import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from specphase import oracles
from specphase.spectral import (
    SpectralError,
    SpectralRep,
    forward_spectrum,
    half_spectra,
    inverse_series,
    recombine,
    synthesize_batch,
)

TOL = 1e-9
t8 = np.arange(8)


def test_constant_series_has_only_dc():
    s = forward_spectrum([3.0, 3.0, 3.0, 3.0])
    assert s.amplitudes[0] == pytest.approx(12.0)
    assert np.allclose(s.amplitudes[1:], 0.0)
    assert s.phases[0] == 0.0


def test_cosine_single_tone():
    s = forward_spectrum(np.cos(2 * np.pi * t8 / 8))
    expected = np.zeros(8)
    expected[[1, 7]] = 4.0
    assert np.allclose(s.amplitudes, expected, atol=1e-12)
    assert s.phases[1] == pytest.approx(0.0, abs=1e-12) or s.phases[1] == pytest.approx(2 * np.pi)
    # bins with zero amplitude carry phase 0 by convention
    assert np.all(s.phases[s.amplitudes == 0] == 0)


def test_matches_direct_dft(gen):
    x = gen.standard_normal(16)
    D = oracles.direct_dft(x)
    s = forward_spectrum(x)
    assert np.allclose(s.amplitudes, np.abs(D), rtol=TOL, atol=TOL * np.abs(D).max())
    live = np.abs(D) > 1e-9
    diff = np.angle(np.exp(1j * (s.phases[live] - np.angle(D[live]))))
    assert np.abs(diff).max() < TOL


def test_zero_amplitudes_give_zero_segment():
    s = SpectralRep(np.zeros(8), np.zeros(8))
    assert np.array_equal(inverse_series(s), np.zeros(8))


def test_hand_built_spectrum_gives_cosine():
    amps = np.zeros(8)
    amps[[1, 7]] = 4.0
    out = inverse_series(SpectralRep(amps, np.zeros(8)))
    assert np.allclose(out, oracles.direct_idft(amps).real, atol=TOL)
    assert np.allclose(out, np.cos(2 * np.pi * t8 / 8), atol=TOL)


def test_self_recombination(gen):
    x = gen.standard_normal(37)
    s = forward_spectrum(x)
    assert np.abs(recombine(s, s) - x).max() < TOL


def test_recombine_preserves_amplitudes(gen):
    x, y = gen.standard_normal((2, 64))
    sx = forward_spectrum(x)
    out = recombine(sx, forward_spectrum(y))
    assert np.allclose(forward_spectrum(out).amplitudes, sx.amplitudes, rtol=TOL, atol=TOL * sx.amplitudes.max())


def test_cos_amplitudes_sin_phases_gives_sin():
    x = np.cos(2 * np.pi * t8 / 8)
    y = np.sin(2 * np.pi * t8 / 8)
    out = recombine(forward_spectrum(x), forward_spectrum(y))
    assert np.allclose(out, y, atol=TOL)
    assert np.allclose(out, oracles.direct_recombine(x, y), atol=TOL)


def test_recombine_matches_direct_oracle(gen):
    for T in (5, 8, 13, 32):
        x, y = gen.standard_normal((2, T))
        out = recombine(forward_spectrum(x), forward_spectrum(y))
        assert np.allclose(out, oracles.direct_recombine(x, y), atol=1e-9)


def test_recombine_rejects_length_mismatch(gen):
    with pytest.raises(SpectralError):
        recombine(forward_spectrum(gen.standard_normal(8)), forward_spectrum(gen.standard_normal(9)))


@pytest.mark.parametrize("bad", [[1.0, np.nan, 2.0], [np.inf, 1.0], [1.0], [[1.0, 2.0]]])
def test_rejects_bad_segments(bad):
    with pytest.raises(SpectralError):
        forward_spectrum(bad)


def test_non_finite_index_reported():
    with pytest.raises(SpectralError, match="index 2"):
        forward_spectrum([0.0, 1.0, np.nan, 3.0])


def test_hermitian_check_catches_violation(gen):
    s = forward_spectrum(gen.standard_normal(16))
    a = s.amplitudes.copy()
    a[3] *= 1.1
    with pytest.raises(SpectralError, match="amplitude"):
        SpectralRep(a, s.phases).check_hermitian()
    p = s.phases.copy()
    p[5] = (p[5] + 0.3) % (2 * np.pi)
    with pytest.raises(SpectralError, match="phase"):
        SpectralRep(s.amplitudes, p).check_hermitian()


def test_nyquist_sign_is_stored_in_phase():
    x = np.array([1.0, -1.0, 1.0, -1.0])
    s = forward_spectrum(x)
    assert s.amplitudes[2] == pytest.approx(4.0)
    assert s.phases[2] == 0.0
    s = forward_spectrum(-x)
    assert s.phases[2] == pytest.approx(np.pi)
    assert np.allclose(inverse_series(s), -x)


def test_from_half_round_trip(gen):
    for T in (6, 7):
        s = forward_spectrum(gen.standard_normal(T))
        a, p = s.half()
        r = SpectralRep.from_half(a, p, T)
        assert np.allclose(r.amplitudes, s.amplitudes)
        assert np.allclose(r.phases, s.phases)
        assert s.parity == ("even" if T % 2 == 0 else "odd")


def test_batch_paths_agree_with_single(gen):
    X = gen.standard_normal((5, 11))
    a, p = half_spectra(X)
    for j in range(5):
        sa, sp = forward_spectrum(X[j]).half()
        assert np.allclose(a[j], sa)
    out = synthesize_batch(a, p[::-1], 11)
    for j in range(5):
        ref = recombine(forward_spectrum(X[j]), forward_spectrum(X[4 - j]))
        assert np.allclose(out[j], ref, atol=1e-12)


segments = st.integers(2, 80).flatmap(
    lambda T: arrays(np.float64, T, elements=st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False))
)


@settings(max_examples=150, deadline=None)
@given(segments)
def test_round_trip_and_parseval(x):
    s = forward_spectrum(x)
    s.check_hermitian()
    inf = np.abs(x).max()
    assert np.abs(inverse_series(s) - x).max() < TOL * (1 + inf)
    energy = np.sum(x**2)
    if energy > 0:
        assert abs(energy - np.sum(s.amplitudes**2) / x.size) <= TOL * energy


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 80), st.integers(0, 2**32 - 1))
def test_phase_substitution_is_invertible(T, seed):
    g = np.random.default_rng(seed)
    x, y = g.standard_normal((2, T))
    sx = forward_spectrum(x)
    z = recombine(sx, forward_spectrum(y))
    sz = forward_spectrum(z)
    assert np.abs(sz.amplitudes - sx.amplitudes).max() <= TOL * max(sx.amplitudes.max(), 1.0)
    assert np.abs(recombine(sz, sx) - x).max() < TOL * (1 + np.abs(x).max())
