"""Sampled complex baseband signals and circular spectral primitives.

The simulation frame is treated as one period of a circular signal, so all
filtering is circular and sinc/rect pulses are exactly orthogonal on the
frame.  Transforms use the unitary FFT convention so that energy bookkeeping
is convention-free (Parseval holds bin-for-sample).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

TransferFunction = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled complex baseband envelope.

    samples are field amplitudes in sqrt(W); center_offset is the offset of
    this band's center from the WDM comb center (Hz).
    """

    samples: np.ndarray
    sample_rate: float
    center_offset: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def frequency_grid(self) -> np.ndarray:
        """Baseband frequency of every FFT bin (unshifted FFT order), Hz."""
        return np.fft.fftfreq(len(self), d=1.0 / self.sample_rate)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    def power(self) -> float:
        """Average power of the frame, W."""
        return self.energy() / len(self)


@dataclass(frozen=True)
class Spectrum:
    """Unitary DFT of a :class:`SampledSignal`, same length as the signal."""

    bins: np.ndarray
    bin_spacing: float
    center_offset: float = 0.0

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        object.__setattr__(self, "bins", bins)
        if bins.ndim != 1 or bins.size == 0:
            raise ValueError("bins must be a nonempty 1-D sequence")
        if not self.bin_spacing > 0:
            raise ValueError("bin_spacing must be positive")

    def __len__(self) -> int:
        return self.bins.size

    def frequency_grid(self) -> np.ndarray:
        return np.fft.fftfreq(len(self), d=1.0 / (self.bin_spacing * len(self)))

    def energy(self) -> float:
        return float(np.sum(np.abs(self.bins) ** 2))


def to_frequency(signal: SampledSignal) -> Spectrum:
    """Unitary forward transform; total energy is preserved."""
    bins = np.fft.fft(signal.samples, norm="ortho")
    return Spectrum(
        bins=bins,
        bin_spacing=signal.sample_rate / len(signal),
        center_offset=signal.center_offset,
    )


def to_time(spectrum: Spectrum) -> SampledSignal:
    """Exact inverse of :func:`to_frequency`."""
    samples = np.fft.ifft(spectrum.bins, norm="ortho")
    return SampledSignal(
        samples=samples,
        sample_rate=spectrum.bin_spacing * len(spectrum),
        center_offset=spectrum.center_offset,
    )


def apply_transfer(signal: SampledSignal, transfer: TransferFunction) -> SampledSignal:
    """Apply a frequency response on the signal's own grid (circular filtering).

    ``transfer`` is either a callable evaluated on the FFT-ordered frequency
    grid or an array already aligned with it.
    """
    freqs = signal.frequency_grid()
    if callable(transfer):
        response = np.asarray(transfer(freqs), dtype=np.complex128)
    else:
        response = np.asarray(transfer, dtype=np.complex128)
    if response.shape != freqs.shape:
        raise ValueError(
            f"transfer has shape {response.shape}, expected {freqs.shape}"
        )
    if not np.all(np.isfinite(response)):
        raise ValueError("transfer is non-finite on the signal grid")
    filtered = np.fft.ifft(np.fft.fft(signal.samples) * response)
    return SampledSignal(
        samples=filtered,
        sample_rate=signal.sample_rate,
        center_offset=signal.center_offset,
    )
