"""TOA variance models and unit handling.

The MF R-Mode model is ``sigma^2 = J_i^2 + C^2 / SNR_i`` with a jitter ``J_i``
per transmitter and a constant ``C`` shared by all transmitters.  The eLoran
TOR model it descends from is kept for comparison.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .ingest import SPEED_OF_LIGHT

ELORAN_BENCHMARK_CONST = 337.5


class SnrConvention(str, enum.Enum):
    LINEAR = "linear"
    DB_TO_LINEAR = "db-converted-to-linear"


class Unit(str, enum.Enum):
    METERS = "meters"
    NANOSECONDS = "nanoseconds"


class ModelError(ValueError):
    """Misuse of a fitted model: unknown transmitter, bad SNR, convention clash."""


def convert_sigma_units(value: float, from_unit, to_unit, squared: bool = False) -> float:
    """Convert a standard deviation (or a variance when ``squared``) between meters and ns."""
    try:
        src, dst = Unit(from_unit), Unit(to_unit)
    except ValueError as exc:
        raise ModelError(str(exc)) from exc
    if src == dst:
        return float(value)
    if src == Unit.METERS:
        factor = 1e9 / SPEED_OF_LIGHT
    else:
        factor = SPEED_OF_LIGHT / 1e9
    return float(value) * factor * factor if squared else float(value) * factor


@dataclass(frozen=True)
class VarianceModel:
    jitter: Mapping[str, float]
    c_const: float
    snr_convention: SnrConvention = SnrConvention.DB_TO_LINEAR
    unit: Unit = Unit.METERS

    def __post_init__(self):
        jitter = {str(k): float(v) for k, v in dict(self.jitter).items()}
        for tid, j in jitter.items():
            if not (math.isfinite(j) and j >= 0):
                raise ModelError(f"jitter for {tid!r} must be finite and >= 0, got {j}")
        c = float(self.c_const)
        if not (math.isfinite(c) and c >= 0):
            raise ModelError(f"C must be finite and >= 0, got {c}")
        object.__setattr__(self, "jitter", MappingProxyType(jitter))
        object.__setattr__(self, "c_const", c)
        object.__setattr__(self, "snr_convention", SnrConvention(self.snr_convention))
        object.__setattr__(self, "unit", Unit(self.unit))

    @property
    def transmitter_ids(self) -> list[str]:
        return list(self.jitter)

    def predict(self, transmitter_id: str, snr_linear: float, convention=None) -> float:
        return predict_variance(self, transmitter_id, snr_linear, convention)

    def in_unit(self, unit) -> "VarianceModel":
        """Same model with J and C expressed in ``unit``."""
        unit = Unit(unit)
        conv = lambda v: convert_sigma_units(v, self.unit, unit)  # noqa: E731
        return VarianceModel(
            {k: conv(v) for k, v in self.jitter.items()},
            conv(self.c_const),
            self.snr_convention,
            unit,
        )

    def to_dict(self) -> dict:
        return {
            "jitter": dict(self.jitter),
            "c_const": self.c_const,
            "snr_convention": self.snr_convention.value,
            "unit": self.unit.value,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "VarianceModel":
        missing = [k for k in ("jitter", "c_const", "snr_convention", "unit") if k not in doc]
        if missing:
            raise ModelError(f"model document missing field(s): {', '.join(missing)}")
        try:
            return cls(doc["jitter"], doc["c_const"], doc["snr_convention"], doc["unit"])
        except (TypeError, ValueError) as exc:
            raise ModelError(f"invalid model document: {exc}") from exc


def _check_snr(snr_linear) -> float:
    snr = float(snr_linear)
    if not snr > 0 or math.isnan(snr):
        raise ModelError(f"SNR must be a positive linear ratio, got {snr_linear!r}")
    return snr


def predict_variance(model: VarianceModel, transmitter_id: str, snr_linear: float, convention=None) -> float:
    """``J_i^2 + C^2 / snr_linear`` in the model's unit squared.

    ``convention`` declares how the caller obtained ``snr_linear``; a value
    that differs from the model's stamped convention is refused.
    """
    if convention is not None and SnrConvention(convention) != model.snr_convention:
        raise ModelError(
            f"model was fitted with SNR convention {model.snr_convention.value!r}, "
            f"request declares {SnrConvention(convention).value!r}"
        )
    try:
        j = model.jitter[transmitter_id]
    except KeyError:
        raise ModelError(
            f"unknown transmitter {transmitter_id!r}; model has {sorted(model.jitter)}"
        ) from None
    snr = _check_snr(snr_linear)
    return j * j + model.c_const * model.c_const / snr


@dataclass(frozen=True)
class EloranParams:
    jitter: float
    n_pulses: int
    benchmark_const: float = field(default=ELORAN_BENCHMARK_CONST, init=False)

    def __post_init__(self):
        if isinstance(self.n_pulses, bool) or int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ModelError(f"n_pulses must be a positive integer, got {self.n_pulses!r}")
        if not (math.isfinite(self.jitter) and self.jitter >= 0):
            raise ModelError(f"jitter must be finite and >= 0, got {self.jitter}")


def predict_eloran_variance(params: EloranParams, snr_linear: float) -> float:
    """eLoran TOR variance ``J^2 + 337.5^2 / (N_pulses * SNR)``."""
    snr = _check_snr(snr_linear)
    k = ELORAN_BENCHMARK_CONST
    return params.jitter * params.jitter + k * k / (params.n_pulses * snr)
