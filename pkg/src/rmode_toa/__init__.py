"""Empirical TOA-variance modeling for medium-frequency R-Mode receiver logs."""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .fit import FitConfig, FitInput, FitResult, IdentifiabilityError, check_identifiable, fit_model, rss
from .ingest import (
    SPEED_OF_LIGHT,
    ConfigError,
    LogFormatError,
    LogSchema,
    RawPhaseSeries,
    TransmitterConfig,
    load_config,
    parse_log,
    render_log,
)
from .model import (
    ELORAN_BENCHMARK_CONST,
    EloranParams,
    ModelError,
    SnrConvention,
    Unit,
    VarianceModel,
    convert_sigma_units,
    predict_eloran_variance,
    predict_variance,
)
from .phase import (
    ContinuousPhaseSeries,
    ToaSeries,
    VarianceSample,
    WindowConfig,
    db_to_linear,
    phase_to_toa,
    scan_windows,
    unwrap_phase,
    windowed_variance,
)
from .synth import SynthTruth, curve_samples, generate, wrap
