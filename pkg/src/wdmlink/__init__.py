"""WDM fiber link simulation, XPM coherence analysis, and achievable
information rate estimation for dispersion-management comparisons."""

from .air import (
    AirResult,
    AuxChannelParams,
    EstimatorFailure,
    GaConfig,
    GainNoiseFit,
    ParticleConfig,
    air_awgn,
    air_particle,
    estimate_gain_noise,
    fit_phase_model,
    simulate_aux,
)
from .config import ExperimentConfig, config_from_dict, load_config, load_preset
from .harness import RunRecord, run_experiment, simulate_cell
from .link import (
    FiberSpan,
    LinkSpec,
    SsfmConfig,
    amplify,
    beta2_from_D,
    cd_transfer,
    dbp,
    dc_element_transfer,
    run_link,
    ssfm_propagate,
)
from .signals import SampledSignal, Spectrum, apply_transfer, to_frequency, to_time
from .transceiver import (
    SymbolFrame,
    WdmSpec,
    generate_gaussian_symbols,
    matched_filter_and_sample,
    modulate,
    wdm_demux,
    wdm_mux,
)
from .xpm import (
    CorrelationGrid,
    InterfererSpec,
    correlation_grid,
    folded_freq,
    g_coeff,
    grid_spacing_to_wavelength,
    interferer_from_wdm,
    sample_interferer_spectrum,
    theta_field,
    theta_kernels,
    walkoff_period,
    xpm_autocorr,
    xpm_kernel,
)

__version__ = "0.1.0"
