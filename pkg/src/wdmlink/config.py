"""Experiment configuration: versioned YAML schema, presets, and digests.

Unknown keys are rejected so misspelled parameters fail loudly instead of
silently running with defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .air import GaConfig, ParticleConfig
from .link import SCHEMES, FiberSpan, LinkSpec, SsfmConfig
from .transceiver import WdmSpec

RECEIVERS = ("AWGN", "AR1", "HOAR")

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_SCHEMA: dict[str, Any] = {
    "version": None,
    "wdm": {"n_channels", "grid_spacing_hz", "symbol_rate_hz", "oversampling", "n_symbols"},
    "span": {"length_m", "attenuation_db_km", "dispersion_ps_nm_km", "gamma_w_km", "wavelength_nm"},
    "link": {"n_spans", "noise_figure_db", "ase_placement"},
    "ssfm": {"steps_per_span"},
    "sweep": {"power_dbm", "schemes", "receivers"},
    "training": {"n_train"},
    "particle": {"n_particles", "resample_threshold"},
    "ga": {"population", "generations", "sigma_z_bounds", "a_mix_bounds", "l0_bounds"},
    "seed": None,
    "output_dir": None,
}


def dbm_to_watt(power_dbm: float) -> float:
    return 10.0 ** (power_dbm / 10.0) * 1e-3


def watt_to_dbm(power_w: float) -> float:
    return 10.0 * math.log10(power_w / 1e-3) if power_w > 0 else float("-inf")


def _check_keys(raw: Mapping[str, Any]) -> None:
    for key, value in raw.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        allowed = _SCHEMA[key]
        if allowed is not None:
            if not isinstance(value, Mapping):
                raise ConfigError(f"section {key!r} must be a mapping")
            extra = set(value) - allowed
            if extra:
                raise ConfigError(f"unknown keys in section {key!r}: {sorted(extra)}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description."""

    wdm: WdmSpec
    span: FiberSpan
    n_spans: int
    noise_figure_db: Optional[float]
    ase_placement: str
    ssfm: SsfmConfig
    power_sweep_dbm: tuple[float, ...]
    schemes: tuple[str, ...]
    receivers: tuple[str, ...]
    n_train: int
    particle: ParticleConfig
    ga: GaConfig
    seed: int
    output_dir: str

    def __post_init__(self):
        if not self.power_sweep_dbm:
            raise ConfigError("power sweep must be nonempty")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ConfigError(f"schemes must be a nonempty subset of {SCHEMES}")
        if not self.receivers or any(r not in RECEIVERS for r in self.receivers):
            raise ConfigError(f"receivers must be a nonempty subset of {RECEIVERS}")
        if not 0 < self.n_train < self.wdm.n_symbols:
            raise ConfigError("n_train must fall inside the frame")
        # >= 20% guard band beyond the outermost channel edge, to absorb
        # nonlinear spectral broadening.
        edge = ((self.wdm.n_channels - 1) / 2) * self.wdm.grid_spacing + self.wdm.symbol_rate / 2
        if self.wdm.aggregate_rate / 2 < 1.2 * edge:
            raise ConfigError(
                "aggregate bandwidth leaves less than a 20% guard band beyond "
                "the outermost channel edge; increase oversampling"
            )

    def link_spec(self, scheme: str) -> LinkSpec:
        return LinkSpec(
            span=self.span,
            n_spans=self.n_spans,
            scheme=scheme,
            channel_bandwidth=self.wdm.grid_spacing,
            noise_figure_db=self.noise_figure_db,
            ase_placement=self.ase_placement,
        )

    def wdm_at_power(self, power_dbm: float) -> WdmSpec:
        return WdmSpec(
            n_channels=self.wdm.n_channels,
            grid_spacing=self.wdm.grid_spacing,
            symbol_rate=self.wdm.symbol_rate,
            power=dbm_to_watt(power_dbm),
            oversampling=self.wdm.oversampling,
            n_symbols=self.wdm.n_symbols,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": SCHEMA_VERSION,
            "wdm": {
                "n_channels": self.wdm.n_channels,
                "grid_spacing_hz": self.wdm.grid_spacing,
                "symbol_rate_hz": self.wdm.symbol_rate,
                "oversampling": self.wdm.oversampling,
                "n_symbols": self.wdm.n_symbols,
            },
            "span": {
                "length_m": self.span.length_m,
                "attenuation_db_km": self.span.attenuation_db_km,
                "dispersion_ps_nm_km": self.span.dispersion_ps_nm_km,
                "gamma_w_km": self.span.gamma_w_km,
                "wavelength_nm": self.span.wavelength_nm,
            },
            "link": {
                "n_spans": self.n_spans,
                "noise_figure_db": self.noise_figure_db,
                "ase_placement": self.ase_placement,
            },
            "ssfm": {"steps_per_span": self.ssfm.steps_per_span},
            "sweep": {
                "power_dbm": list(self.power_sweep_dbm),
                "schemes": list(self.schemes),
                "receivers": list(self.receivers),
            },
            "training": {"n_train": self.n_train},
            "particle": {
                "n_particles": self.particle.n_particles,
                "resample_threshold": self.particle.resample_threshold,
            },
            "ga": {
                "population": self.ga.population,
                "generations": self.ga.generations,
                "sigma_z_bounds": list(self.ga.sigma_z_bounds),
                "a_mix_bounds": list(self.ga.a_mix_bounds),
                "l0_bounds": list(self.ga.l0_bounds),
            },
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    def digest(self) -> str:
        """Hash of the physics-relevant configuration (seed and output
        location excluded so reruns and relocations stay comparable)."""
        payload = self.to_dict()
        payload.pop("seed")
        payload.pop("output_dir")
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def config_from_dict(raw: Mapping[str, Any]) -> ExperimentConfig:
    _check_keys(raw)
    version = raw.get("version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config version {version!r}, expected {SCHEMA_VERSION}")
    try:
        wdm_raw = raw["wdm"]
        span_raw = raw["span"]
        link_raw = raw["link"]
        sweep_raw = raw["sweep"]
    except KeyError as exc:
        raise ConfigError(f"missing required section {exc.args[0]!r}") from None

    wdm = WdmSpec(
        n_channels=int(wdm_raw["n_channels"]),
        grid_spacing=float(wdm_raw["grid_spacing_hz"]),
        symbol_rate=float(wdm_raw["symbol_rate_hz"]),
        power=1e-3,  # placeholder; the sweep sets per-cell power
        oversampling=int(wdm_raw["oversampling"]),
        n_symbols=int(wdm_raw["n_symbols"]),
    )
    span = FiberSpan(
        length_m=float(span_raw["length_m"]),
        attenuation_db_km=float(span_raw["attenuation_db_km"]),
        dispersion_ps_nm_km=float(span_raw["dispersion_ps_nm_km"]),
        gamma_w_km=float(span_raw["gamma_w_km"]),
        wavelength_nm=float(span_raw["wavelength_nm"]),
    )
    nf = link_raw.get("noise_figure_db", 5.0)
    particle_raw = raw.get("particle", {})
    ga_raw = raw.get("ga", {})
    n_symbols = wdm.n_symbols
    default_train = max(100, round(0.02 * n_symbols))  # paper ratio 2000/1e5
    return ExperimentConfig(
        wdm=wdm,
        span=span,
        n_spans=int(link_raw["n_spans"]),
        noise_figure_db=None if nf is None else float(nf),
        ase_placement=str(link_raw.get("ase_placement", "inline")),
        ssfm=SsfmConfig(steps_per_span=int(raw.get("ssfm", {}).get("steps_per_span", 100))),
        power_sweep_dbm=tuple(float(p) for p in sweep_raw["power_dbm"]),
        schemes=tuple(sweep_raw["schemes"]),
        receivers=tuple(sweep_raw["receivers"]),
        n_train=int(raw.get("training", {}).get("n_train", default_train)),
        particle=ParticleConfig(
            n_particles=int(particle_raw.get("n_particles", 512)),
            resample_threshold=float(particle_raw.get("resample_threshold", 0.5)),
        ),
        ga=GaConfig(
            population=int(ga_raw.get("population", 20)),
            generations=int(ga_raw.get("generations", 30)),
            sigma_z_bounds=tuple(ga_raw.get("sigma_z_bounds", (1e-4, 1.0))),
            a_mix_bounds=tuple(ga_raw.get("a_mix_bounds", (0.0, 1.0))),
            l0_bounds=tuple(int(v) for v in ga_raw.get("l0_bounds", (2, 64))),
        ),
        seed=int(raw.get("seed", 0)),
        output_dir=str(raw.get("output_dir", "runs")),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, Mapping):
        raise ConfigError(f"config file {path} does not contain a mapping")
    return config_from_dict(raw)


def load_preset(name: str) -> ExperimentConfig:
    """Load one of the shipped presets ('desk' or 'paper')."""
    ref = resources.files("wdmlink").joinpath(f"presets/{name}.yaml")
    if not ref.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    raw = yaml.safe_load(ref.read_text(encoding="utf-8"))
    return config_from_dict(raw)
