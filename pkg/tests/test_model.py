import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rmode_toa.ingest import SPEED_OF_LIGHT
from rmode_toa.model import (
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


def m(j=0.0, c=23.75, tid="A", **kw):
    return VarianceModel({tid: j}, c, **kw)


def test_predict_examples():
    assert predict_variance(m(0.0, 23.75), "A", 1.0) == 564.0625
    assert predict_variance(m(3.0, 4.0), "A", 2.0) == 17.0
    assert predict_variance(m(2.65, 23.75), "A", 1e30) == pytest.approx(7.0225, abs=1e-12)


def test_predict_errors():
    model = m()
    with pytest.raises(ModelError, match="unknown transmitter"):
        predict_variance(model, "B", 1.0)
    for bad in (0.0, -1.0, math.nan):
        with pytest.raises(ModelError):
            predict_variance(model, "A", bad)


def test_convention_mismatch_refused():
    model = m(snr_convention=SnrConvention.LINEAR)
    assert predict_variance(model, "A", 2.0, SnrConvention.LINEAR) == 564.0625 / 2
    with pytest.raises(ModelError, match="convention"):
        predict_variance(model, "A", 2.0, "db-converted-to-linear")


@given(
    j=st.floats(0, 100),
    c=st.floats(0.01, 100),
    s1=st.floats(1e-3, 1e6),
    s2=st.floats(1e-3, 1e6),
)
def test_monotone_in_snr(j, c, s1, s2):
    lo, hi = sorted((s1, s2))
    model = m(j, c)
    a, b = predict_variance(model, "A", lo), predict_variance(model, "A", hi)
    assert a >= b
    if lo < hi and c * c / lo - c * c / hi > 1e-12 * a:
        assert a > b


@given(j=st.floats(0, 100), c=st.floats(0, 100), eps=st.floats(1e-6, 1.0))
def test_asymptote(j, c, eps):
    snr = 2 * c * c / eps + 1.0
    assert abs(predict_variance(m(j, c), "A", snr) - j * j) < eps


def test_model_validation():
    with pytest.raises(ModelError):
        VarianceModel({"A": -1.0}, 1.0)
    with pytest.raises(ModelError):
        VarianceModel({"A": 1.0}, math.inf)
    with pytest.raises(ValueError):
        VarianceModel({"A": 1.0}, 1.0, snr_convention="decibel")


def test_eloran_anchor():
    assert ELORAN_BENCHMARK_CONST == 337.5
    assert predict_eloran_variance(EloranParams(0.0, 1), 1.0) == 113906.25
    assert predict_eloran_variance(EloranParams(0.0, 2), 1.0) == 56953.125
    assert predict_eloran_variance(EloranParams(10.0, 1), 1e300) == pytest.approx(100.0)


def test_eloran_validation():
    with pytest.raises(ModelError):
        EloranParams(0.0, 0)
    with pytest.raises(ModelError):
        EloranParams(0.0, 1.5)
    with pytest.raises(ModelError):
        predict_eloran_variance(EloranParams(0.0, 1), 0.0)
    p = EloranParams(1.0, 4)
    assert p.benchmark_const == 337.5
    with pytest.raises(Exception):
        p.benchmark_const = 1.0


def test_mf_model_reduces_to_eloran_on_grid():
    for j, n, snr in itertools.product([0.0, 0.5, 2.65, 40.0], [1, 2, 10, 1000], [0.01, 1.0, 3.16, 1e4]):
        mf = VarianceModel({"A": j}, 337.5 / math.sqrt(n))
        assert predict_variance(mf, "A", snr) == pytest.approx(predict_eloran_variance(EloranParams(j, n), snr), rel=1e-13)


def test_unit_conversion_examples():
    assert convert_sigma_units(299.792458, "meters", "nanoseconds") == pytest.approx(1000.0, rel=1e-15)
    assert convert_sigma_units(299.792458**2, Unit.METERS, Unit.NANOSECONDS, squared=True) == pytest.approx(1e6, rel=1e-15)
    assert convert_sigma_units(5.0, "meters", "meters") == 5.0
    with pytest.raises(ModelError):
        convert_sigma_units(1.0, "meters", "furlongs")


@given(st.floats(1e-12, 1e12), st.booleans())
def test_unit_round_trip(v, sq):
    back = convert_sigma_units(convert_sigma_units(v, "meters", "nanoseconds", sq), "nanoseconds", "meters", sq)
    assert back == pytest.approx(v, rel=1e-12)


def test_model_in_nanoseconds_predicts_converted_variance():
    model = VarianceModel({"A": 2.65, "B": 0.0}, 23.75)
    ns = model.in_unit("nanoseconds")
    assert ns.unit == Unit.NANOSECONDS
    for tid in ("A", "B"):
        v_m = predict_variance(model, tid, 3.0)
        assert predict_variance(ns, tid, 3.0) == pytest.approx(convert_sigma_units(v_m, "meters", "nanoseconds", True))
    assert ns.c_const == pytest.approx(23.75 * 1e9 / SPEED_OF_LIGHT)


def test_serialization_bit_exact():
    rng = np.random.default_rng(0)
    for _ in range(50):
        model = VarianceModel(
            {f"T{i}": float(x) for i, x in enumerate(rng.exponential(3, 3))}, float(rng.exponential(20))
        )
        back = VarianceModel.from_dict(json.loads(json.dumps(model.to_dict())))
        assert back == model
        # 17 significant digits suffice as well
        doc = json.loads(json.dumps(model.to_dict()))
        doc["c_const"] = float(f"{model.c_const:.17g}")
        assert VarianceModel.from_dict(doc).c_const == model.c_const


def test_from_dict_missing_field():
    with pytest.raises(ModelError, match="c_const"):
        VarianceModel.from_dict({"jitter": {}, "snr_convention": "linear", "unit": "meters"})
