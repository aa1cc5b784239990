"""Physical channel: SMF spans (split-step Fourier), inline dispersion
compensation (DCF or per-channel FBG), EDFA amplification with ASE, and
single-channel digital back propagation.

Attenuation is interpreted as power attenuation, so signal power decays as
exp(-alpha*z) and the field equation carries alpha/2.  Amplifier gain exactly
compensates the span power loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h as PLANCK
from scipy.fft import fft as _fft
from scipy.fft import ifft as _ifft

from .signals import SampledSignal

SCHEMES = ("NDM", "DM", "CDM")


def beta2_from_D(dispersion_ps_nm_km: float, wavelength_nm: float) -> float:
    """Group-velocity dispersion beta2 (s^2/m) from the D parameter."""
    if wavelength_nm <= 0:
        raise ValueError("wavelength must be positive")
    d_si = dispersion_ps_nm_km * 1e-6  # s/m^2
    lam = wavelength_nm * 1e-9
    return -d_si * lam**2 / (2.0 * np.pi * SPEED_OF_LIGHT)


def folded_freq(f, grid_spacing: float):
    """Fold a frequency onto [0, B/2]: distance to the nearest multiple of B."""
    if grid_spacing <= 0:
        raise ValueError("grid_spacing must be positive")
    f = np.asarray(f, dtype=np.float64)
    folded = np.abs(f - grid_spacing * np.round(f / grid_spacing))
    return folded if folded.ndim else float(folded)


@dataclass(frozen=True)
class FiberSpan:
    """Single SMF span parameters (SI-flavored units noted per field)."""

    length_m: float
    attenuation_db_km: float
    dispersion_ps_nm_km: float
    gamma_w_km: float  # 1/(W km)
    wavelength_nm: float

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError("span length must be positive")
        if self.attenuation_db_km < 0 or self.gamma_w_km < 0:
            raise ValueError("attenuation and nonlinearity must be nonnegative")
        if self.wavelength_nm <= 0:
            raise ValueError("wavelength must be positive")

    @property
    def alpha_per_m(self) -> float:
        """Power attenuation coefficient, 1/m."""
        return self.attenuation_db_km * np.log(10.0) / 10.0 / 1e3

    @property
    def beta2(self) -> float:
        return beta2_from_D(self.dispersion_ps_nm_km, self.wavelength_nm)

    @property
    def gamma_w_m(self) -> float:
        return self.gamma_w_km / 1e3

    @property
    def gain(self) -> float:
        """Power gain that exactly compensates the span loss."""
        return float(np.exp(self.alpha_per_m * self.length_m))

    @property
    def effective_length_m(self) -> float:
        a = self.alpha_per_m
        if a == 0.0:
            return self.length_m
        return (1.0 - np.exp(-a * self.length_m)) / a

    @property
    def center_frequency(self) -> float:
        return SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)


@dataclass(frozen=True)
class LinkSpec:
    """Multi-span link: scheme selects the inline DC element per span.

    noise_figure_db of None means noiseless amplifiers.  ase_placement
    'at_transmitter' injects the equivalent total ASE before propagation and
    runs every amplifier noiseless.
    """

    span: FiberSpan
    n_spans: int
    scheme: str
    channel_bandwidth: float
    noise_figure_db: Optional[float] = 5.0
    ase_placement: str = "inline"

    def __post_init__(self):
        if self.n_spans < 1:
            raise ValueError("n_spans must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.channel_bandwidth <= 0:
            raise ValueError("channel_bandwidth must be positive")
        if self.ase_placement not in ("inline", "at_transmitter"):
            raise ValueError("ase_placement must be 'inline' or 'at_transmitter'")


@dataclass(frozen=True)
class SsfmConfig:
    """Uniform-step symmetric split-step configuration."""

    steps_per_span: int = 100

    def __post_init__(self):
        if self.steps_per_span < 1:
            raise ValueError("steps_per_span must be >= 1")


def cd_transfer(beta2_accumulated: float, f) -> np.ndarray:
    """Chromatic-dispersion transfer exp(-j 2 pi^2 f^2 * accumulated beta2)."""
    f = np.asarray(f, dtype=np.float64)
    return np.exp(-2j * np.pi**2 * f**2 * beta2_accumulated)


def dc_element_transfer(scheme: str, span: FiberSpan, grid_spacing: float, f) -> np.ndarray:
    """Transfer of the inline DC element at a span end (lossless, linear).

    DM (DCF) inverts the span dispersion at every frequency; CDM (FBG) does
    so on the frequency folded onto the channel grid.
    """
    b2l = span.beta2 * span.length_m
    if scheme == "DM":
        f_eff = np.asarray(f, dtype=np.float64)
    elif scheme == "CDM":
        f_eff = np.asarray(folded_freq(f, grid_spacing))
    else:
        raise ValueError(f"no DC element for scheme {scheme!r}")
    return np.exp(2j * np.pi**2 * f_eff**2 * b2l)


def _ssfm_core(
    samples: np.ndarray,
    sample_rate: float,
    beta2: float,
    gamma_w_m: float,
    alpha_per_m: float,
    length_m: float,
    steps: int,
) -> np.ndarray:
    """Symmetric split-step solution over one fiber segment (uniform steps)."""
    n = samples.size
    freqs = np.fft.fftfreq(n, d=1.0 / sample_rate)
    h = length_m / steps
    lin_rate = -2j * np.pi**2 * beta2 * freqs**2 - alpha_per_m / 2.0
    half_step = np.exp(lin_rate * (h / 2.0))
    full_step = half_step * half_step
    nl_rate = -gamma_w_m * h
    u = _ifft(_fft(samples) * half_step)
    for i in range(steps):
        phase = nl_rate * (u.real * u.real + u.imag * u.imag)
        u = u * (np.cos(phase) + 1j * np.sin(phase))
        factor = half_step if i == steps - 1 else full_step
        u = _ifft(_fft(u) * factor)
    return u


def ssfm_propagate(signal: SampledSignal, span: FiberSpan, cfg: SsfmConfig) -> SampledSignal:
    """Propagate the aggregate field through one SMF span."""
    out = _ssfm_core(
        signal.samples,
        signal.sample_rate,
        span.beta2,
        span.gamma_w_m,
        span.alpha_per_m,
        span.length_m,
        cfg.steps_per_span,
    )
    if not np.all(np.isfinite(out)):
        raise RuntimeError(
            "split-step output is non-finite; increase steps_per_span"
        )
    return SampledSignal(out, signal.sample_rate, signal.center_offset)


def ase_psd(span: FiberSpan, noise_figure_db: float) -> float:
    """One-amplifier ASE power spectral density per polarization, W/Hz."""
    n_sp = 10.0 ** (noise_figure_db / 10.0) / 2.0
    return (span.gain - 1.0) * PLANCK * span.center_frequency * n_sp


def amplify(
    signal: SampledSignal,
    span: FiberSpan,
    noise_figure_db: Optional[float],
    mode: str = "add_ase",
    rng: Optional[np.random.Generator] = None,
) -> SampledSignal:
    """Lumped amplifier with field gain sqrt(G), G compensating the span loss."""
    if mode not in ("add_ase", "noiseless"):
        raise ValueError("mode must be 'add_ase' or 'noiseless'")
    out = signal.samples * np.sqrt(span.gain)
    if mode == "add_ase":
        if noise_figure_db is None:
            raise ValueError("noise figure required to add ASE")
        if rng is None:
            raise ValueError("rng required to add ASE")
        var = ase_psd(span, noise_figure_db) * signal.sample_rate
        n = signal.samples.size
        out = out + np.sqrt(var / 2.0) * (
            rng.standard_normal(n) + 1j * rng.standard_normal(n)
        )
    return SampledSignal(out, signal.sample_rate, signal.center_offset)


def run_link(
    waveform: SampledSignal,
    link: LinkSpec,
    cfg: SsfmConfig,
    rng: Optional[np.random.Generator] = None,
) -> SampledSignal:
    """N_s repetitions of [SMF -> DC element (DM/CDM) -> EDFA]."""
    noisy = link.noise_figure_db is not None
    samples = waveform.samples.copy()
    fs = waveform.sample_rate
    if noisy and link.ase_placement == "at_transmitter":
        if rng is None:
            raise ValueError("rng required for ASE injection")
        var = link.n_spans * ase_psd(link.span, link.noise_figure_db) * fs
        samples = samples + np.sqrt(var / 2.0) * (
            rng.standard_normal(samples.size) + 1j * rng.standard_normal(samples.size)
        )
    signal = SampledSignal(samples, fs, waveform.center_offset)
    inline_ase = noisy and link.ase_placement == "inline"
    dc = None
    if link.scheme in ("DM", "CDM"):
        freqs = signal.frequency_grid()
        dc = dc_element_transfer(link.scheme, link.span, link.channel_bandwidth, freqs)
    for _ in range(link.n_spans):
        signal = ssfm_propagate(signal, link.span, cfg)
        if dc is not None:
            signal = SampledSignal(
                np.fft.ifft(np.fft.fft(signal.samples) * dc), fs, signal.center_offset
            )
        signal = amplify(
            signal,
            link.span,
            link.noise_figure_db,
            mode="add_ase" if inline_ase else "noiseless",
            rng=rng,
        )
    return signal


def dbp(signal: SampledSignal, link: LinkSpec, cfg: SsfmConfig) -> SampledSignal:
    """Digital back propagation of the demuxed COI band.

    Noiseless backward pass through the link's per-channel equivalent:
    reversed amplifier gains, inverse in-band DC element (DM/CDM), and the
    span solved with sign-inverted beta2, gamma, and loss.  Not an involution:
    applying it twice does not return the input.
    """
    span = link.span
    fs = signal.sample_rate
    u = signal.samples.copy()
    inv_dc = None
    if link.scheme in ("DM", "CDM"):
        freqs = np.fft.fftfreq(u.size, d=1.0 / fs)
        inv_dc = np.conj(
            dc_element_transfer(link.scheme, span, link.channel_bandwidth, freqs)
        )
    inv_gain = 1.0 / np.sqrt(span.gain)
    for _ in range(link.n_spans):
        u = u * inv_gain
        if inv_dc is not None:
            u = np.fft.ifft(np.fft.fft(u) * inv_dc)
        u = _ssfm_core(
            u, fs, -span.beta2, -span.gamma_w_m, -span.alpha_per_m,
            span.length_m, cfg.steps_per_span,
        )
    return SampledSignal(u, fs, signal.center_offset)
