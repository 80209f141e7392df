"""Synthetic receiver logs with known jitter and C.

Each transmitter gets a constant-SNR segment per profile entry; within a
segment the range error is white Gaussian with variance ``J_i**2 + C**2/SNR``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ingest import RawPhaseSeries, TWO_PI
from .model import VarianceModel, predict_variance
from .phase import VarianceSample

NOISE_MODES = ("gaussian", "moment_matched")


class TruthError(ValueError):
    pass


def wrap(phase):
    """Map phase to [0, 2*pi).  Accepts scalars or arrays."""
    x = np.asarray(phase, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot wrap non-finite phase")
    out = np.mod(x, TWO_PI)
    # np.mod rounds tiny negatives up to exactly 2*pi
    out = np.where(out >= TWO_PI, 0.0, out) + 0.0
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SynthTruth:
    """Ground truth for :func:`generate`.

    ``noise="moment_matched"`` replaces the Gaussian draws by a deterministic
    +/- pattern whose unbiased variance over every aligned window of
    ``moment_window`` epochs equals the model variance exactly.
    """

    jitter: Mapping[str, float]
    c_const: float
    snr_profile: Sequence[tuple[int, float]]
    wavelength: float
    epoch_step: float = 1.0
    rng_seed: int = 0
    noise: str = "gaussian"
    moment_window: int = 300
    origin: str | None = None

    def __post_init__(self):
        jitter = {str(k): float(v) for k, v in dict(self.jitter).items()}
        if not jitter:
            raise TruthError("truth needs at least one transmitter")
        for tid, j in jitter.items():
            if not (math.isfinite(j) and j >= 0):
                raise TruthError(f"jitter for {tid!r} must be >= 0")
        object.__setattr__(self, "jitter", jitter)
        if not (math.isfinite(self.c_const) and self.c_const >= 0):
            raise TruthError("C must be >= 0")
        profile = tuple((int(d), float(s)) for d, s in self.snr_profile)
        if not profile:
            raise TruthError("snr_profile is empty")
        for d, s in profile:
            if d < 1 or not math.isfinite(s):
                raise TruthError(f"bad profile segment ({d}, {s})")
        object.__setattr__(self, "snr_profile", profile)
        if not (math.isfinite(self.wavelength) and self.wavelength > 0):
            raise TruthError("wavelength must be positive")
        if not (math.isfinite(self.epoch_step) and self.epoch_step > 0):
            raise TruthError("epoch_step must be positive")
        if self.noise not in NOISE_MODES:
            raise TruthError(f"noise must be one of {NOISE_MODES}")
        if self.noise == "moment_matched":
            if self.moment_window < 2 or self.moment_window % 2:
                raise TruthError("moment_window must be an even integer >= 2")
            bad = [d for d, _ in profile if d % self.moment_window]
            if bad:
                raise TruthError("moment_matched segments must be multiples of moment_window")

    @property
    def model(self) -> VarianceModel:
        return VarianceModel(self.jitter, self.c_const)

    def to_dict(self) -> dict:
        return {
            "jitter": dict(self.jitter),
            "c_const": self.c_const,
            "snr_profile": [list(p) for p in self.snr_profile],
            "wavelength": self.wavelength,
            "epoch_step": self.epoch_step,
            "rng_seed": self.rng_seed,
            "noise": self.noise,
            "moment_window": self.moment_window,
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SynthTruth":
        required = ("jitter", "c_const", "snr_profile", "wavelength")
        for key in required:
            if key not in doc:
                raise TruthError(f"truth document missing field {key!r}")
        optional = {k: doc[k] for k in ("epoch_step", "rng_seed", "noise", "moment_window", "origin") if k in doc}
        try:
            return cls(doc["jitter"], float(doc["c_const"]), doc["snr_profile"], float(doc["wavelength"]), **optional)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, TruthError):
                raise
            raise TruthError(f"invalid truth document: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _pattern(n: int, window: int) -> np.ndarray:
    # alternating +a/-a: zero mean per window, unbiased variance 1
    a = math.sqrt((window - 1) / window)
    return np.where(np.arange(n) % 2 == 0, a, -a)


def generate(truth: SynthTruth) -> list[RawPhaseSeries]:
    """Raw phase series, one per transmitter, in ``truth.jitter`` order."""
    rng = np.random.default_rng(truth.rng_seed)
    n_total = sum(d for d, _ in truth.snr_profile)
    epochs = np.arange(n_total, dtype=np.float64) * truth.epoch_step
    k = TWO_PI / truth.wavelength
    out = []
    for tid, j in truth.jitter.items():
        phi0 = rng.uniform(0.0, TWO_PI)
        err = np.empty(n_total)
        snr = np.empty(n_total)
        pos = 0
        for dur, snr_db in truth.snr_profile:
            sigma = math.sqrt(j * j + truth.c_const ** 2 / 10.0 ** (snr_db / 10.0))
            if 3.0 * sigma * k >= math.pi:
                warnings.warn(
                    f"{tid} at {snr_db} dB: phase noise std {sigma * k:.3f} rad is too large "
                    "for reliable unwrapping",
                    RuntimeWarning,
                    stacklevel=2,
                )
            if truth.noise == "gaussian":
                err[pos:pos + dur] = rng.normal(0.0, sigma, dur) if sigma > 0 else 0.0
            else:
                err[pos:pos + dur] = sigma * _pattern(dur, truth.moment_window)
            snr[pos:pos + dur] = snr_db
            pos += dur
        out.append(RawPhaseSeries(tid, epochs, wrap(phi0 + err * k), snr, origin=truth.origin))
    return out


def curve_samples(model: VarianceModel, snr_linear: Sequence[float], window_len: int = 300) -> list[VarianceSample]:
    """Noiseless samples lying exactly on the model curve, for every transmitter."""
    return [
        VarianceSample(tid, float(s), predict_variance(model, tid, s), float(i), window_len)
        for tid in model.jitter
        for i, s in enumerate(snr_linear)
    ]
