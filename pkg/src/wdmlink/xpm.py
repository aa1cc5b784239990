"""Frequency-resolved logarithmic-perturbation model of XPM.

Provides the per-scheme XPM kernel, the cross-phase distortion field
theta(f, t) synthesized from an interferer spectrum, and the time-frequency
autocorrelation of theta evaluated by 2-D midpoint quadrature over the
interferer bands (cross-products between the two bands are neglected).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .link import LinkSpec, folded_freq

__all__ = [
    "InterfererSpec",
    "CorrelationGrid",
    "QuadratureConvergenceError",
    "folded_freq",
    "g_coeff",
    "xpm_kernel",
    "xpm_autocorr",
    "correlation_grid",
    "walkoff_period",
    "grid_spacing_to_wavelength",
    "interferer_from_wdm",
    "theta_field",
    "theta_kernels",
    "sample_interferer_spectrum",
]


class QuadratureConvergenceError(RuntimeError):
    """Doubling the quadrature resolution still changes the result too much."""


@dataclass(frozen=True)
class InterfererSpec:
    """Rectangular-PSD interferer description.

    Each entry of center_offsets describes one pair of interfering channels
    at ±f_w carrying total power total_power (PSD total_power/(2*bandwidth)
    within each band).
    """

    total_power: float
    bandwidth: float
    center_offsets: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "center_offsets", tuple(self.center_offsets))
        if self.total_power < 0:
            raise ValueError("total_power must be nonnegative")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not self.center_offsets:
            raise ValueError("at least one interfering pair is required")
        for f_w in self.center_offsets:
            if f_w - self.bandwidth / 2.0 <= 0:
                raise ValueError("interferer bands must not touch baseband")


def interferer_from_wdm(n_channels: int, grid_spacing: float, symbol_rate: float,
                        power: float) -> InterfererSpec:
    """Interferer seen by the central channel of an n_channels WDM comb.

    Every neighbor pair at ±k*B contributes one offset; the pair carries
    twice the per-channel power.
    """
    if n_channels < 3 or n_channels % 2 == 0:
        raise ValueError("need an odd channel count >= 3")
    half = (n_channels - 1) // 2
    return InterfererSpec(
        total_power=2.0 * power,
        bandwidth=symbol_rate,
        center_offsets=tuple(k * grid_spacing for k in range(1, half + 1)),
    )


def g_coeff(f, mu, nu, beta2: float):
    """Phase-mismatch rate 4 pi^2 beta2 (nu - f)(nu - mu), rad/m."""
    return 4.0 * np.pi**2 * beta2 * (np.asarray(nu) - f) * (np.asarray(nu) - np.asarray(mu))


def _cis(x: np.ndarray) -> np.ndarray:
    """exp(j x) for real x without the complex-exp overhead."""
    return np.cos(x) + 1j * np.sin(x)


def _dirichlet_sum(x: np.ndarray, n: int) -> np.ndarray:
    """sum_{k=0}^{n-1} exp(j k x) for real x, stable near x = 0 mod 2 pi."""
    half = 0.5 * np.asarray(x, dtype=np.float64)
    s = np.sin(half)
    small = np.abs(s) < 1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(small, float(n), np.sin(n * half) / np.where(small, 1.0, s))
    return _cis((n - 1) * half) * mag


def xpm_kernel(scheme: str, f, mu, nu, link: LinkSpec) -> np.ndarray:
    """Per-scheme XPM kernel K_w(f, mu, nu) of the perturbation model, rad/W.

    Broadcasts over array arguments.  The common single-span factor is
    gamma*(exp((-alpha + j g) L_s) - 1)/(-alpha + j g); the scheme factor is
    the span sum: N_s for DM, a geometric sum of exp(j n L_s g) for NDM, and
    of exp(j n L_s (g - g_folded)) for CDM.
    """
    span = link.span
    alpha = span.alpha_per_m
    beta2 = span.beta2
    ls = span.length_m
    g = np.asarray(g_coeff(f, mu, nu, beta2), dtype=np.float64)
    denom = -alpha + 1j * g
    x_mag = ls * np.hypot(alpha, g)
    small = x_mag < 1e-12
    denom_safe = np.where(small, 1.0, denom)
    exp_x = np.exp(-alpha * ls) * _cis(ls * g)
    common = span.gamma_w_m * np.where(small, ls, (exp_x - 1.0) / denom_safe)
    if scheme == "DM":
        factor = link.n_spans
    elif scheme == "NDM":
        factor = _dirichlet_sum(ls * g, link.n_spans)
    elif scheme == "CDM":
        b = link.channel_bandwidth
        g_f = g_coeff(
            folded_freq(f, b), folded_freq(mu, b), folded_freq(nu, b), beta2
        )
        factor = _dirichlet_sum(ls * (g - g_f), link.n_spans)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return common * factor


def _band_grid(center: float, bandwidth: float, m: int) -> tuple[np.ndarray, float]:
    """Midpoint-rule abscissas over [center - B/2, center + B/2]."""
    delta = bandwidth / m
    return center - bandwidth / 2.0 + delta * (np.arange(m) + 0.5), delta


_QUAD_CHUNK = 512  # mu rows per block; bounds memory at high resolution


def _autocorr_rows(
    f1: float,
    f2_values: np.ndarray,
    tau_values: np.ndarray,
    link: LinkSpec,
    interferer: InterfererSpec,
    m: int,
) -> np.ndarray:
    """R_theta(f1, f2, tau) on a (f2, tau) grid by banded midpoint quadrature.

    The mu axis is processed in blocks so the resolution can be doubled
    without materializing full m-by-m kernel matrices.
    """
    prefactor = interferer.total_power**2 / interferer.bandwidth**2
    out = np.zeros((f2_values.size, tau_values.size), dtype=np.complex128)
    for f_w in interferer.center_offsets:
        for sign in (1.0, -1.0):
            mu, delta = _band_grid(sign * f_w, interferer.bandwidth, m)
            # exp(-j 2 pi (mu - nu) tau) split into separable factors
            ph_mu = np.exp(-2j * np.pi * np.outer(mu, tau_values))
            ph_nu = np.conj(ph_mu)
            scale = prefactor * delta**2
            for start in range(0, m, _QUAD_CHUNK):
                rows = slice(start, min(start + _QUAD_CHUNK, m))
                mu_col = mu[rows, None]
                nu_row = mu[None, :]
                k1 = xpm_kernel(link.scheme, f1, mu_col, nu_row, link)
                for i, f2 in enumerate(f2_values):
                    if f2 == f1:
                        k2 = k1
                    else:
                        k2 = xpm_kernel(link.scheme, float(f2), mu_col, nu_row, link)
                    a = k1 * np.conj(k2)
                    out[i] += scale * np.einsum(
                        "mt,mt->t", ph_mu[rows], a @ ph_nu
                    )
    return out


def xpm_autocorr(
    f1: float,
    f2: float,
    tau: float,
    link: LinkSpec,
    interferer: InterfererSpec,
    m: int = 256,
    check_convergence: bool = False,
    rel_tol: float = 0.01,
) -> complex:
    """Autocorrelation R_theta(f1, f2, tau) of the XPM distortion field.

    With check_convergence the quadrature is repeated at twice the
    resolution and a relative change above rel_tol raises
    :class:`QuadratureConvergenceError`.
    """
    if m < 16:
        raise ValueError("need at least 16 quadrature points per axis")
    if interferer.total_power == 0.0:
        return 0.0 + 0.0j
    value = complex(
        _autocorr_rows(f1, np.array([f2]), np.array([tau]), link, interferer, m)[0, 0]
    )
    if check_convergence:
        refined = complex(
            _autocorr_rows(f1, np.array([f2]), np.array([tau]), link, interferer, 2 * m)[0, 0]
        )
        if abs(value - refined) > rel_tol * abs(refined):
            raise QuadratureConvergenceError(
                f"quadrature at M={m} deviates by more than {rel_tol:.0%} from M={2*m}"
            )
        value = refined
    return value


@dataclass(frozen=True)
class CorrelationGrid:
    """R_theta(0, delta_f, tau) over a rectangular (delta_f, tau) grid."""

    delta_f: np.ndarray
    tau: np.ndarray
    values: np.ndarray  # complex, shape (len(delta_f), len(tau))
    quadrature_points: int
    normalization: float

    def __post_init__(self):
        object.__setattr__(self, "delta_f", np.asarray(self.delta_f, dtype=np.float64))
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=np.float64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.complex128))
        if self.values.shape != (self.delta_f.size, self.tau.size):
            raise ValueError("values shape must be (len(delta_f), len(tau))")

    def cross_section_tau0(self) -> tuple[np.ndarray, np.ndarray]:
        """Normalized Re R_theta(0, delta_f, 0); requires tau = 0 on the grid."""
        j = int(np.argmin(np.abs(self.tau)))
        return self.delta_f, self.values[:, j].real / self.normalization

    def cross_section_df0(self) -> tuple[np.ndarray, np.ndarray]:
        """Normalized Re R_theta(0, 0, tau); requires delta_f = 0 on the grid."""
        i = int(np.argmin(np.abs(self.delta_f)))
        return self.tau, self.values[i, :].real / self.normalization


def correlation_grid(
    link: LinkSpec,
    interferer: InterfererSpec,
    delta_f: Sequence[float],
    tau: Sequence[float],
    m: int = 256,
    rel_tol: float = 0.01,
    max_doublings: int = 4,
) -> CorrelationGrid:
    """Evaluate R_theta(0, delta_f, tau), doubling the quadrature resolution
    until the grid changes by less than rel_tol of its peak magnitude."""
    delta_f = np.asarray(delta_f, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    if delta_f.size == 0 or tau.size == 0:
        raise ValueError("delta_f and tau ranges must be nonempty")
    values = _autocorr_rows(0.0, delta_f, tau, link, interferer, m)
    for _ in range(max_doublings):
        refined = _autocorr_rows(0.0, delta_f, tau, link, interferer, 2 * m)
        peak = np.max(np.abs(refined))
        if peak == 0.0 or np.max(np.abs(values - refined)) <= rel_tol * peak:
            return CorrelationGrid(
                delta_f, tau, refined,
                quadrature_points=2 * m,
                normalization=float(peak) if peak > 0 else 1.0,
            )
        m *= 2
        values = refined
    raise QuadratureConvergenceError(
        f"correlation grid did not converge within {max_doublings} doublings"
    )


def walkoff_period(dispersion_ps_nm_km: float, delta_lambda_nm: float,
                   length_m: float) -> float:
    """Per-span walk-off time D * delta_lambda * L_s, seconds."""
    return dispersion_ps_nm_km * 1e-6 * delta_lambda_nm * 1e-9 * length_m


def grid_spacing_to_wavelength(grid_spacing: float, wavelength_nm: float) -> float:
    """WDM grid spacing converted to wavelength separation, nm."""
    lam = wavelength_nm * 1e-9
    return lam**2 * grid_spacing / SPEED_OF_LIGHT * 1e9


def sample_interferer_spectrum(
    interferer: InterfererSpec,
    bins_per_band: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Draw one Gaussian interferer realization on the band midpoint grid.

    Returns (freqs, amplitudes, bin_spacing) with E|W_i|^2 = S(f_i)/spacing,
    reproducing E[W(mu) W*(nu)] = S(mu) delta(mu - nu) in the continuum.
    """
    freqs = []
    for f_w in interferer.center_offsets:
        for sign in (1.0, -1.0):
            grid, delta = _band_grid(sign * f_w, interferer.bandwidth, bins_per_band)
            freqs.append(grid)
    freqs = np.concatenate(freqs)
    psd = interferer.total_power / (2.0 * interferer.bandwidth)
    sigma = np.sqrt(psd / delta / 2.0)
    w = sigma * (rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size))
    return freqs, w, delta


def theta_kernels(freqs: np.ndarray, link: LinkSpec, f_grid: Sequence[float]) -> np.ndarray:
    """Precompute the kernel stack used by :func:`theta_field`.

    Useful when synthesizing many interferer realizations on a fixed grid:
    the kernels do not depend on the realization.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    f_grid = np.asarray(f_grid, dtype=np.float64)
    return np.stack([
        xpm_kernel(link.scheme, float(f), freqs[:, None], freqs[None, :], link)
        for f in f_grid
    ])


def theta_field(
    freqs: np.ndarray,
    w_bins: np.ndarray,
    bin_spacing: float,
    link: LinkSpec,
    f_grid: Sequence[float],
    t_grid: Sequence[float],
    kernels: Optional[np.ndarray] = None,
) -> np.ndarray:
    """XPM distortion field theta(f, t) for one interferer realization.

    Discretizes the double integral over the interferer spectrum as
    2 * sum_{i,j} K(f, mu_i, mu_j) W_i W_j* exp(j 2 pi (mu_i - mu_j) t) * d^2.
    Returns a complex array of shape (len(f_grid), len(t_grid)).  Pass a
    stack from :func:`theta_kernels` to amortize kernel evaluation across
    realizations.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    w_bins = np.asarray(w_bins, dtype=np.complex128)
    if freqs.shape != w_bins.shape:
        raise ValueError("freqs and w_bins must have the same shape")
    if np.count_nonzero(np.abs(w_bins)) and freqs.size < 8:
        raise ValueError("interferer spectrum is too coarse (< 8 bins)")
    f_grid = np.asarray(f_grid, dtype=np.float64)
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if kernels is None:
        kernels = theta_kernels(freqs, link, f_grid)
    if kernels.shape != (f_grid.size, freqs.size, freqs.size):
        raise ValueError("kernel stack does not match the grids")
    outer_w = np.outer(w_bins, np.conj(w_bins))
    phases = np.exp(2j * np.pi * np.outer(freqs, t_grid))
    out = np.empty((f_grid.size, t_grid.size), dtype=np.complex128)
    for i in range(f_grid.size):
        b = kernels[i] * outer_w
        out[i] = 2.0 * bin_spacing**2 * np.einsum("mt,mt->t", phases, b @ np.conj(phases))
    return out
