import numpy as np
import pytest
from scipy.stats import kstest

from specphase.decomposition import decompose
from specphase.spectral import forward_spectrum
from specphase.synthetic import (
    PhaseModel,
    SpectrumModel,
    SyntheticError,
    demo_spectra,
    generate_amplitudes,
    make_dataset,
    make_pair_shared_phase,
    make_shared_phase_datasets,
    roughness_phases,
)


def test_flat_power_law():
    a = generate_amplitudes(SpectrumModel("power_law", 32, exponent=0.0))
    assert a[0] == 0.0
    assert np.all(a[1:] == a[1])


def test_bump_argmax():
    a = generate_amplitudes(SpectrumModel("gaussian_bump", 64, center=8, width=2))
    assert int(np.argmax(a[:33])) == 8


def test_power_law_halving():
    a = generate_amplitudes(SpectrumModel("power_law", 128, exponent=1.0))
    k = np.arange(1, 33)
    assert np.allclose(a[2 * k], a[k] / 2, rtol=0, atol=1e-12)


def test_roughness_endpoints():
    assert np.array_equal(roughness_phases(64, 0.0, 1), np.zeros(64))
    g = np.random.default_rng(0)
    free = np.concatenate([roughness_phases(64, 1.0, g)[1:32] for _ in range(400)])[:10_000]
    assert kstest(free / (2 * np.pi), "uniform").pvalue > 0.01
    half = np.concatenate([roughness_phases(64, 0.5, g)[1:32] for _ in range(50)])
    assert np.all(half < np.pi)


def test_roughness_rejects_bad_c():
    with pytest.raises(SyntheticError):
        roughness_phases(8, 1.5)
    with pytest.raises(SyntheticError):
        PhaseModel("roughness", -0.1)
    with pytest.raises(SyntheticError):
        SpectrumModel("gaussian_bump", 8, width=0)
    with pytest.raises(SyntheticError):
        SpectrumModel("pink", 8)


def test_shared_phase_pairs():
    spec_a, spec_b = demo_spectra(128)
    x, y = make_pair_shared_phase(spec_a, spec_a, PhaseModel("roughness", 0.7), 3)
    assert np.array_equal(x, y)
    x, y = make_pair_shared_phase(spec_a, spec_b, PhaseModel("roughness", 0.7), 3)
    sx, sy = forward_spectrum(x), forward_spectrum(y)
    live = (sx.amplitudes > 1e-9) & (sy.amplitudes > 1e-9)
    gap = np.abs(np.angle(np.exp(1j * (sx.phases - sy.phases))))[live]
    assert gap.max() < 1e-9
    a = make_pair_shared_phase(spec_a, spec_b, PhaseModel("constant"), 1)
    b = make_pair_shared_phase(spec_a, spec_b, PhaseModel("constant"), 2)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_generation_deterministic_and_valid():
    spec, _ = demo_spectra(64)
    d1 = make_dataset(spec, PhaseModel("roughness", 0.4), 5, 42)
    d2 = make_dataset(spec, PhaseModel("roughness", 0.4), 5, 42)
    assert np.array_equal(d1.segments, d2.segments)
    for seg in d1.segments:
        s = forward_spectrum(seg)
        s.check_hermitian()
        assert s.amplitudes[0] < 1e-9
    one = make_dataset(spec, PhaseModel(), 1, 0)
    assert one.n_segments == 1


def test_make_dataset_rejects_bad_args():
    spec, _ = demo_spectra(16)
    with pytest.raises(SyntheticError):
        make_dataset(spec, PhaseModel(), 0)
    with pytest.raises(SyntheticError):
        make_dataset(spec, PhaseModel(), 3, coupling="strong")


def test_identical_models_give_null_components():
    spec, _ = demo_spectra(256)
    pm = PhaseModel("roughness", 0.5)
    z = {k: [] for k in ("A", "phi", "i")}
    for t in range(50):
        g = np.random.default_rng(500 + t)
        x = make_dataset(spec, pm, 100, g, label="x")
        y = make_dataset(spec, pm, 100, g, label="y")
        r = decompose(x, y, R=100, seed=t)
        for k in z:
            z[k].append(r.z(k))
    for k, v in z.items():
        v = np.array(v)
        assert abs(v.sum() / np.sqrt(v.size)) < 3, k
        assert np.mean(np.abs(v) > 3) < 0.1, k


def test_coupling_plants_an_interaction():
    spec, _ = demo_spectra(256)
    g = np.random.default_rng(8)
    x = make_dataset(spec, PhaseModel("roughness", 0.5), 300, g, coupling="amp_phase_coupled", tilt=2.0)
    y = make_dataset(spec, PhaseModel("roughness", 0.5), 300, g, tilt=2.0)
    r = decompose(x, y, R=100, seed=1)
    assert abs(r.z("i")) > 3


def test_shared_phase_datasets_pair_rows():
    spec_a, spec_b = demo_spectra(64)
    x, y = make_shared_phase_datasets(spec_a, spec_b, PhaseModel("roughness", 0.5), 4, 0)
    assert x.n_segments == y.n_segments == 4
    for j in range(4):
        sx, sy = forward_spectrum(x.segments[j]), forward_spectrum(y.segments[j])
        live = (sx.amplitudes > 1e-9) & (sy.amplitudes > 1e-9)
        assert np.abs(np.angle(np.exp(1j * (sx.phases - sy.phases))))[live].max() < 1e-9
