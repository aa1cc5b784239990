import numpy as np
import pytest

from wdmlink.signals import SampledSignal, Spectrum, apply_transfer, to_frequency, to_time


def random_signal(rng, n=1024, fs=100e9):
    samples = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return SampledSignal(samples, fs)


def test_dc_input_concentrates_in_zero_bin():
    sig = SampledSignal(np.ones(256, dtype=complex), 1e9)
    spec = to_frequency(sig)
    assert abs(spec.bins[0]) == pytest.approx(16.0)  # sqrt(N) with unitary norm
    assert np.max(np.abs(spec.bins[1:])) < 1e-12


def test_single_tone_hits_single_bin():
    n, k = 512, 37
    t = np.arange(n)
    sig = SampledSignal(np.exp(2j * np.pi * k * t / n), 1e9)
    spec = to_frequency(sig)
    mags = np.abs(spec.bins)
    assert np.argmax(mags) == k
    assert np.sum(mags > 1e-9) == 1


def test_parseval_energy_equality():
    rng = np.random.default_rng(1)
    sig = random_signal(rng)
    spec = to_frequency(sig)
    assert spec.energy() == pytest.approx(sig.energy(), rel=1e-12)


def test_round_trip_identity():
    rng = np.random.default_rng(2)
    sig = random_signal(rng)
    back = to_time(to_frequency(sig))
    assert np.max(np.abs(back.samples - sig.samples)) < 1e-12 * np.max(np.abs(sig.samples))
    assert back.sample_rate == pytest.approx(sig.sample_rate)


def test_zero_spectrum_gives_zero_signal():
    # all-zero bins are rejected? no: zero signal is valid content-wise
    spec = Spectrum(np.zeros(64, dtype=complex), 1e6)
    sig = to_time(spec)
    assert np.all(sig.samples == 0)


def test_one_hot_bin_is_complex_exponential():
    n, k = 128, 5
    bins = np.zeros(n, dtype=complex)
    bins[k] = 1.0
    sig = to_time(Spectrum(bins, 1e6))
    t = np.arange(n)
    expected = np.exp(2j * np.pi * k * t / n) / np.sqrt(n)
    assert np.max(np.abs(sig.samples - expected)) < 1e-12


def test_apply_transfer_identity_and_rotation():
    rng = np.random.default_rng(3)
    sig = random_signal(rng)
    same = apply_transfer(sig, lambda f: np.ones_like(f, dtype=complex))
    assert np.max(np.abs(same.samples - sig.samples)) < 1e-12
    phi = 0.731
    rotated = apply_transfer(sig, lambda f: np.full_like(f, np.exp(1j * phi), dtype=complex))
    assert np.max(np.abs(rotated.samples - sig.samples * np.exp(1j * phi))) < 1e-12


def test_apply_transfer_unitary_preserves_energy():
    rng = np.random.default_rng(4)
    sig = random_signal(rng)
    out = apply_transfer(sig, lambda f: np.exp(1j * 2e-21 * f**2))
    assert out.energy() == pytest.approx(sig.energy(), rel=1e-12)


def test_apply_transfer_composes():
    rng = np.random.default_rng(5)
    sig = random_signal(rng)
    h1 = lambda f: np.exp(1j * 1e-21 * f**2)
    h2 = lambda f: np.exp(-1j * 3e-22 * f**2) * 0.5
    once = apply_transfer(apply_transfer(sig, h1), h2)
    combined = apply_transfer(sig, lambda f: h1(f) * h2(f))
    assert np.max(np.abs(once.samples - combined.samples)) < 1e-12 * np.max(np.abs(sig.samples))


def test_apply_transfer_rejects_non_finite_response():
    rng = np.random.default_rng(6)
    sig = random_signal(rng, n=64)

    def bad(f):
        h = np.ones_like(f, dtype=complex)
        h[3] = np.nan
        return h

    with pytest.raises(ValueError, match="non-finite"):
        apply_transfer(sig, bad)


def test_signal_validation():
    with pytest.raises(ValueError):
        SampledSignal(np.array([], dtype=complex), 1e9)
    with pytest.raises(ValueError):
        SampledSignal(np.array([1.0, np.inf]), 1e9)
    with pytest.raises(ValueError):
        SampledSignal(np.ones(4, dtype=complex), 0.0)
