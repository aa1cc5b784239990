"""Gaussian-symbol WDM transmitter and matched-filter receiver front end.

Pulses are ideal rect spectra on the circular frame (periodic sinc), which
gives exact Nyquist orthogonality at finite frame length.  Channel index 0 is
the channel of interest and sits in the middle of the comb.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signals import SampledSignal


class GridMismatchError(ValueError):
    """Channel placement does not land on the simulation frequency grid."""


@dataclass(frozen=True)
class WdmSpec:
    """WDM comb description.

    grid_spacing is the channel spacing B (Hz), symbol_rate the per-channel
    baud rate, power the per-channel average launch power (W), oversampling
    the number of samples per symbol on the aggregate grid.
    """

    n_channels: int
    grid_spacing: float
    symbol_rate: float
    power: float
    oversampling: int
    n_symbols: int

    def __post_init__(self):
        if self.n_channels < 1 or self.n_channels % 2 == 0:
            raise ValueError("n_channels must be a positive odd integer")
        if self.grid_spacing <= 0 or self.symbol_rate <= 0:
            raise ValueError("grid_spacing and symbol_rate must be positive")
        if self.symbol_rate > self.grid_spacing * (1 + 1e-12):
            raise ValueError("symbol_rate must not exceed grid_spacing")
        if self.power < 0:
            raise ValueError("power must be nonnegative")
        if int(self.oversampling) != self.oversampling or self.oversampling < 1:
            raise ValueError("oversampling must be a positive integer")
        if self.oversampling * self.symbol_rate < self.n_channels * self.grid_spacing:
            raise ValueError("aggregate bandwidth cannot contain all channels")
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be positive")

    @property
    def aggregate_rate(self) -> float:
        return self.oversampling * self.symbol_rate

    @property
    def n_samples(self) -> int:
        return self.oversampling * self.n_symbols

    @property
    def channel_indices(self) -> tuple[int, ...]:
        half = (self.n_channels - 1) // 2
        return tuple(range(-half, half + 1))


@dataclass(frozen=True)
class SymbolFrame:
    """Per-channel complex symbol sequences, ordered by channel index."""

    channels: tuple[np.ndarray, ...]

    def __post_init__(self):
        channels = tuple(np.asarray(c, dtype=np.complex128) for c in self.channels)
        object.__setattr__(self, "channels", channels)
        if not channels:
            raise ValueError("frame must contain at least one channel")
        n = channels[0].size
        for c in channels:
            if c.size != n:
                raise ValueError("all channels must have the same length")
            if not np.all(np.isfinite(c)):
                raise ValueError("symbols contain non-finite values")

    def __len__(self) -> int:
        return self.channels[0].size


def generate_gaussian_symbols(n: int, power: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. circularly-symmetric complex Gaussian symbols with E|x|^2 = power."""
    if n <= 0:
        raise ValueError("n must be positive")
    if power < 0:
        raise ValueError("power must be nonnegative")
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _band_bin_count(n_bins_float: float) -> int:
    n_bins = int(round(n_bins_float))
    if abs(n_bins_float - n_bins) > 1e-6:
        raise GridMismatchError(
            f"band does not span an integer number of grid bins ({n_bins_float})"
        )
    return n_bins


def modulate(symbols: np.ndarray, spec: WdmSpec) -> SampledSignal:
    """Sinc-pulse modulation onto the baseband aggregate grid.

    Realized as exact band-limited interpolation: the symbol DFT is embedded
    in the aggregate spectrum over [-Rs/2, Rs/2), so sampling the output at
    symbol instants returns the symbols exactly.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.size != spec.n_symbols:
        raise ValueError(f"expected {spec.n_symbols} symbols, got {symbols.size}")
    m = spec.n_symbols
    n = spec.n_samples
    sym_spectrum = np.fft.fft(symbols)
    split = (m + 1) // 2  # nonnegative-frequency bin count
    agg = np.zeros(n, dtype=np.complex128)
    agg[:split] = sym_spectrum[:split]
    if m > split:
        agg[n - (m - split):] = sym_spectrum[split:]
    waveform = np.fft.ifft(agg) * spec.oversampling
    return SampledSignal(waveform, spec.aggregate_rate, center_offset=0.0)


def wdm_mux(channel_waveforms: Sequence[SampledSignal], spec: WdmSpec) -> SampledSignal:
    """Sum baseband channel waveforms shifted to their comb positions k*B."""
    if len(channel_waveforms) != spec.n_channels:
        raise ValueError("one waveform per channel is required")
    n = spec.n_samples
    fs = spec.aggregate_rate
    shift = _band_bin_count(spec.grid_spacing * n / fs)
    total = np.zeros(n, dtype=np.complex128)
    for k, wave in zip(spec.channel_indices, channel_waveforms):
        if len(wave) != n or wave.sample_rate != fs:
            raise GridMismatchError("channel waveform grid does not match the spec")
        total += np.roll(np.fft.fft(wave.samples), k * shift)
    return SampledSignal(np.fft.ifft(total), fs, center_offset=0.0)


def wdm_demux(aggregate: SampledSignal, k: int, spec: WdmSpec) -> SampledSignal:
    """Brick-wall select band [kB - B/2, kB + B/2) and downshift to baseband."""
    half = (spec.n_channels - 1) // 2
    if abs(k) > half:
        raise ValueError(f"channel index {k} out of range ±{half}")
    n = len(aggregate)
    fs = aggregate.sample_rate
    shift = _band_bin_count(spec.grid_spacing * n / fs)
    # Integer bin bookkeeping keeps the half-open band edges exact.
    fi = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)  # bin index as frequency
    lo = 2 * k * shift - shift
    hi = 2 * k * shift + shift
    mask = (2 * fi >= lo) & (2 * fi < hi)
    spectrum = np.fft.fft(aggregate.samples)
    spectrum[~mask] = 0.0
    spectrum = np.roll(spectrum, -k * shift)
    return SampledSignal(
        np.fft.ifft(spectrum), fs, center_offset=k * spec.grid_spacing
    )


def matched_filter_and_sample(signal: SampledSignal, symbol_rate: float) -> np.ndarray:
    """Filter matched to the sinc pulse (brick wall of width Rs), sample at Rs."""
    n = len(signal)
    ratio = signal.sample_rate / symbol_rate
    oversampling = int(round(ratio))
    if abs(ratio - oversampling) > 1e-9 or oversampling < 1 or n % oversampling:
        raise GridMismatchError("sample rate is not an integer multiple of symbol rate")
    m = n // oversampling
    spectrum = np.fft.fft(signal.samples)
    split = (m + 1) // 2
    sym_spectrum = np.concatenate((spectrum[:split], spectrum[n - (m - split):]))
    return np.fft.ifft(sym_spectrum / oversampling)
