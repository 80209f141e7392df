"""Wrapped phase to continuous phase, range, and windowed variance samples."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ingest import RawPhaseSeries, TWO_PI

UNKNOWN = "unknown"

DEFAULT_WINDOW_LEN = 300
DEFAULT_MAX_SNR_SPREAD_DB = 3.0
DEFAULT_MAX_GAP_S = 10.0


def _readonly(a):
    a = np.asarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ContinuousPhaseSeries:
    transmitter_id: str
    epochs: np.ndarray
    phase_cont: np.ndarray
    snr_db: np.ndarray
    # Index of the first epoch of each independently unwrapped segment.
    segment_starts: tuple[int, ...] = (0,)

    def __len__(self):
        return len(self.epochs)


@dataclass(frozen=True, eq=False)
class ToaSeries:
    """Range series in meters, offset by ``cycle_offset_n`` whole wavelengths.

    ``phase_cont`` is kept so that variance can be taken in the phase domain,
    where the cycle offset never enters the arithmetic.
    """

    transmitter_id: str
    epochs: np.ndarray
    toa_m: np.ndarray
    wavelength: float
    cycle_offset_n: int | str
    phase_cont: np.ndarray
    snr_db: np.ndarray
    segment_starts: tuple[int, ...] = (0,)

    def __len__(self):
        return len(self.epochs)


@dataclass(frozen=True)
class VarianceSample:
    transmitter_id: str
    snr_linear: float
    variance_m2: float
    window_start: float  # epoch of the first sample in the window, s
    window_len: int
    snr_db: float = math.nan  # mean SNR over the window, dB

    def __post_init__(self):
        if not self.snr_linear > 0:
            raise ValueError(f"snr_linear must be positive, got {self.snr_linear}")
        if not self.variance_m2 >= 0:
            raise ValueError(f"variance_m2 must be nonnegative, got {self.variance_m2}")
        if math.isnan(self.snr_db):
            object.__setattr__(self, "snr_db", 10.0 * math.log10(self.snr_linear))


@dataclass(frozen=True)
class WindowConfig:
    window_len: int = DEFAULT_WINDOW_LEN
    max_snr_spread_db: float = DEFAULT_MAX_SNR_SPREAD_DB

    def __post_init__(self):
        if int(self.window_len) != self.window_len or self.window_len < 2:
            raise ValueError(f"window_len must be an integer >= 2, got {self.window_len}")
        if not self.max_snr_spread_db >= 0:
            raise ValueError("max_snr_spread_db must be nonnegative")


@dataclass(frozen=True)
class WindowScan:
    samples: list[VarianceSample]
    n_windows: int
    n_skipped_spread: int
    n_epochs_unused: int  # tail epochs of each segment that do not fill a window


def db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0)


def segment_starts(epochs, max_gap_s: float = DEFAULT_MAX_GAP_S) -> tuple[int, ...]:
    epochs = np.asarray(epochs, dtype=np.float64)
    gaps = np.flatnonzero(np.diff(epochs) > max_gap_s) + 1
    return (0, *map(int, gaps))


def unwrap_phase(series: RawPhaseSeries, max_gap_s: float = DEFAULT_MAX_GAP_S) -> ContinuousPhaseSeries:
    """Remove 2*pi discontinuities from a wrapped phase series.

    Whenever two adjacent epochs differ by more than pi, every later sample is
    shifted by 2*pi towards continuity; a jump of exactly pi is kept.  A gap
    longer than ``max_gap_s`` starts a new segment whose first sample is
    left as measured.
    """
    starts = segment_starts(series.epochs, max_gap_s)
    cont = _kernels.unwrap(series.phase_raw, np.asarray(starts, dtype=np.int64))
    return ContinuousPhaseSeries(
        series.transmitter_id,
        series.epochs,
        _readonly(cont),
        series.snr_db,
        starts,
    )


def phase_to_toa(series: ContinuousPhaseSeries, wavelength: float, n: int | str = UNKNOWN) -> ToaSeries:
    """Range ``(phase/2pi) * wavelength + n * wavelength``; unknown ``n`` counts as 0."""
    wavelength = float(wavelength)
    if not (math.isfinite(wavelength) and wavelength > 0):
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    if n != UNKNOWN and (isinstance(n, bool) or int(n) != n):
        raise ValueError(f"cycle offset must be an integer or {UNKNOWN!r}, got {n!r}")
    offset = 0.0 if n == UNKNOWN else int(n) * wavelength
    toa = series.phase_cont / TWO_PI * wavelength + offset
    return ToaSeries(
        series.transmitter_id,
        series.epochs,
        _readonly(toa),
        wavelength,
        n if n == UNKNOWN else int(n),
        series.phase_cont,
        series.snr_db,
        series.segment_starts,
    )


def _window_starts(n: int, seg_starts, window_len: int):
    bounds = list(seg_starts) + [n]
    starts, unused = [], 0
    for a, b in zip(bounds[:-1], bounds[1:]):
        k = (b - a) // window_len
        starts.extend(range(a, a + k * window_len, window_len))
        unused += (b - a) - k * window_len
    return np.asarray(starts, dtype=np.int64), unused


def scan_windows(series: ToaSeries, cfg: WindowConfig = WindowConfig()) -> WindowScan:
    """Cut ``series`` into non-overlapping windows and measure each one.

    Windows never straddle a segment boundary.  The variance is the unbiased
    sample variance of continuous phase scaled by ``(wavelength/2pi)**2``,
    which equals the sample variance of the range series up to rounding and
    is exactly independent of the cycle offset.
    """
    n = len(series)
    if n == 0:
        raise ValueError("empty series")
    starts, unused = _window_starts(n, series.segment_starts, cfg.window_len)
    var_phase, mean_db, spread = _kernels.window_stats(
        series.phase_cont, series.snr_db, starts, cfg.window_len
    )
    scale = (series.wavelength / TWO_PI) ** 2
    keep = spread <= cfg.max_snr_spread_db
    samples = [
        VarianceSample(
            series.transmitter_id,
            float(10.0 ** (mdb / 10.0)),
            float(v * scale),
            float(series.epochs[s]),
            cfg.window_len,
            float(mdb),
        )
        for s, v, mdb in zip(starts[keep], var_phase[keep], mean_db[keep])
    ]
    return WindowScan(samples, len(starts), int((~keep).sum()), unused)


def windowed_variance(series: ToaSeries, cfg: WindowConfig = WindowConfig()) -> list[VarianceSample]:
    return scan_windows(series, cfg).samples
