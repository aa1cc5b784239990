import numpy as np
import pytest

from wdmlink.signals import to_frequency
from wdmlink.transceiver import (
    GridMismatchError,
    WdmSpec,
    generate_gaussian_symbols,
    matched_filter_and_sample,
    modulate,
    wdm_demux,
    wdm_mux,
)


def spec3(n_symbols=512, power=1e-3):
    return WdmSpec(3, 50e9, 50e9, power, 4, n_symbols)


class TestGaussianSymbols:
    def test_statistics(self):
        rng = np.random.default_rng(0)
        p = 1e-3
        n = 100_000
        x = generate_gaussian_symbols(n, p, rng)
        # mean within 5 standard errors of zero, variance within 2%
        assert abs(np.mean(x)) < 5 * np.sqrt(p / n)
        assert np.mean(np.abs(x) ** 2) == pytest.approx(p, rel=0.02)

    def test_seed_determinism(self):
        a = generate_gaussian_symbols(1000, 1e-3, np.random.default_rng(7))
        b = generate_gaussian_symbols(1000, 1e-3, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_zero_power(self):
        x = generate_gaussian_symbols(100, 0.0, np.random.default_rng(1))
        assert np.all(x == 0)


class TestModulate:
    def test_single_symbol_nyquist_zero_crossings(self):
        spec = spec3()
        symbols = np.zeros(spec.n_symbols, dtype=complex)
        symbols[11] = 1.0
        wave = modulate(symbols, spec)
        sampled = wave.samples[:: spec.oversampling]
        assert sampled[11] == pytest.approx(1.0, abs=1e-12)
        others = np.delete(sampled, 11)
        assert np.max(np.abs(others)) < 1e-12

    def test_back_to_back_recovers_symbols(self):
        rng = np.random.default_rng(2)
        spec = spec3()
        x = generate_gaussian_symbols(spec.n_symbols, spec.power, rng)
        y = matched_filter_and_sample(modulate(x, spec), spec.symbol_rate)
        assert np.max(np.abs(y - x)) < 1e-10 * np.max(np.abs(x))

    def test_band_limited_to_symbol_rate(self):
        rng = np.random.default_rng(3)
        spec = spec3()
        wave = modulate(generate_gaussian_symbols(spec.n_symbols, spec.power, rng), spec)
        bins = to_frequency(wave)
        freqs = bins.frequency_grid()
        out_of_band = np.abs(freqs) > spec.symbol_rate / 2
        leak = np.sum(np.abs(bins.bins[out_of_band]) ** 2)
        assert leak < 1e-24 * bins.energy()  # zero up to FFT roundoff

    def test_launch_power_matches_symbol_variance(self):
        rng = np.random.default_rng(4)
        spec = spec3(n_symbols=10_000)
        wave = modulate(generate_gaussian_symbols(spec.n_symbols, spec.power, rng), spec)
        assert wave.power() == pytest.approx(spec.power, rel=0.02)


class TestMuxDemux:
    def test_single_channel_mux_is_identity(self):
        rng = np.random.default_rng(5)
        spec = WdmSpec(1, 50e9, 50e9, 1e-3, 4, 256)
        wave = modulate(generate_gaussian_symbols(256, 1e-3, rng), spec)
        agg = wdm_mux([wave], spec)
        assert np.max(np.abs(agg.samples - wave.samples)) < 1e-12

    def test_two_tones_land_at_grid_positions(self):
        spec = spec3(n_symbols=64)
        tone = np.ones(64, dtype=complex)
        waves = [modulate(tone, spec), modulate(np.zeros(64, complex), spec), modulate(tone, spec)]
        agg = wdm_mux(waves, spec)
        bins = np.fft.fft(agg.samples)
        freqs = np.fft.fftfreq(len(agg), d=1.0 / agg.sample_rate)
        hot = np.abs(bins) > 1e-6 * np.max(np.abs(bins))
        assert set(np.round(freqs[hot] / 1e9)) == {-50.0, 50.0}

    def test_energy_additivity_disjoint_bands(self):
        rng = np.random.default_rng(6)
        spec = spec3()
        waves = [
            modulate(generate_gaussian_symbols(spec.n_symbols, spec.power, rng), spec)
            for _ in range(3)
        ]
        agg = wdm_mux(waves, spec)
        assert agg.energy() == pytest.approx(sum(w.energy() for w in waves), rel=1e-12)

    def test_demux_inverts_mux(self):
        rng = np.random.default_rng(7)
        spec = spec3()
        x = [generate_gaussian_symbols(spec.n_symbols, spec.power, rng) for _ in range(3)]
        agg = wdm_mux([modulate(c, spec) for c in x], spec)
        for k in (-1, 0, 1):
            y = matched_filter_and_sample(wdm_demux(agg, k, spec), spec.symbol_rate)
            ref = x[k + 1]
            assert np.max(np.abs(y - ref)) < 1e-10 * np.max(np.abs(ref))

    def test_demux_rejects_out_of_range_index(self):
        spec = spec3(n_symbols=64)
        agg = wdm_mux([modulate(np.zeros(64, complex), spec)] * 3, spec)
        with pytest.raises(ValueError, match="out of range"):
            wdm_demux(agg, 2, spec)

    def test_demux_of_zero_aggregate_is_zero(self):
        spec = spec3(n_symbols=64)
        agg = wdm_mux([modulate(np.zeros(64, complex), spec)] * 3, spec)
        out = wdm_demux(agg, 1, spec)
        assert np.all(out.samples == 0)
        assert out.center_offset == pytest.approx(50e9)


class TestMatchedFilter:
    def test_white_noise_variance_after_filtering(self):
        # Independent oracle: a brick wall of width Rs keeps the fraction
        # Rs/fs of a white PSD, so symbol-rate samples carry sigma^2/L.
        rng = np.random.default_rng(8)
        n_sym, oversampling = 100_000, 4
        fs = 200e9
        sigma2 = 0.5
        noise = np.sqrt(sigma2 / 2) * (
            rng.standard_normal(n_sym * oversampling)
            + 1j * rng.standard_normal(n_sym * oversampling)
        )
        from wdmlink.signals import SampledSignal

        y = matched_filter_and_sample(SampledSignal(noise, fs), fs / oversampling)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(sigma2 / oversampling, rel=0.05)

    def test_constant_phase_rotation_commutes(self):
        rng = np.random.default_rng(9)
        spec = spec3()
        x = generate_gaussian_symbols(spec.n_symbols, spec.power, rng)
        wave = modulate(x, spec)
        rotated = type(wave)(wave.samples * np.exp(0.4j), wave.sample_rate)
        y = matched_filter_and_sample(rotated, spec.symbol_rate)
        assert np.max(np.abs(y - x * np.exp(0.4j))) < 1e-10 * np.max(np.abs(x))

    def test_incompatible_rate_raises(self):
        from wdmlink.signals import SampledSignal

        sig = SampledSignal(np.ones(100, complex), 150e9)
        with pytest.raises(GridMismatchError):
            matched_filter_and_sample(sig, 40e9)


@pytest.mark.parametrize(
    "n_channels,grid,rs,oversampling,n_symbols",
    [(3, 50e9, 50e9, 4, 300), (5, 50e9, 50e9, 6, 250), (3, 100e9, 50e9, 8, 200), (3, 28e9, 28e9, 4, 350)],
)
def test_chain_identity_property(n_channels, grid, rs, oversampling, n_symbols):
    rng = np.random.default_rng(11)
    spec = WdmSpec(n_channels, grid, rs, 1e-3, oversampling, n_symbols)
    x = [generate_gaussian_symbols(n_symbols, 1e-3, rng) for _ in range(n_channels)]
    agg = wdm_mux([modulate(c, spec) for c in x], spec)
    for pos, k in enumerate(spec.channel_indices):
        y = matched_filter_and_sample(wdm_demux(agg, k, spec), rs)
        assert np.max(np.abs(y - x[pos])) < 1e-10 * np.max(np.abs(x[pos]))


def test_wdm_spec_invariants():
    with pytest.raises(ValueError):
        WdmSpec(2, 50e9, 50e9, 1e-3, 4, 100)  # even channel count
    with pytest.raises(ValueError):
        WdmSpec(3, 40e9, 50e9, 1e-3, 4, 100)  # Rs > B
    with pytest.raises(ValueError):
        WdmSpec(5, 50e9, 50e9, 1e-3, 4, 100)  # aggregate too narrow
