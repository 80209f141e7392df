import math
import random

import numpy as np
import pytest

from oracles import grid_min_rss
from rmode_toa.fit import FitConfig, FitInput, IdentifiabilityError, check_identifiable, fit_model, rss
from rmode_toa.model import SnrConvention, VarianceModel
from rmode_toa.phase import VarianceSample
from rmode_toa.synth import curve_samples

TRUTH = VarianceModel({"PALMI": 0.0, "CHUNGJU": 2.65}, 23.75)


def sample(tid, snr, var, k=0, w=300):
    return VarianceSample(tid, snr, var, float(k), w)


def noisy_input(seed, n_per_tx=20, truth=None):
    rng = np.random.default_rng(seed)
    truth = truth or VarianceModel({"A": rng.uniform(0.3, 2.0), "B": rng.uniform(0.3, 2.0)}, rng.uniform(1.0, 4.0))
    out = []
    for tid in truth.jitter:
        for k, snr in enumerate(10 ** rng.uniform(0, 2, n_per_tx)):
            v = truth.predict(tid, snr) * rng.chisquare(30) / 30
            out.append(sample(tid, float(snr), float(v), k))
    return FitInput(out), truth


def test_noiseless_two_transmitters():
    inp = FitInput(curve_samples(TRUTH, [1.0, 2.0, 3.16, 10.0, 31.6, 100.0]))
    res = fit_model(inp)
    assert res.model.c_const == pytest.approx(23.75, abs=1e-9)
    assert res.model.jitter["PALMI"] == pytest.approx(0.0, abs=1e-9)
    assert res.model.jitter["CHUNGJU"] == pytest.approx(2.65, abs=1e-9)
    assert res.rss < 1e-18
    assert res.solver == "nnls"
    assert res.n_samples == 12
    assert set(res.per_transmitter_rss) == {"PALMI", "CHUNGJU"}


def test_two_by_two_hand_solution():
    # a + b = 564.0625, a + b/4 = 141.015625  ->  b = 564.0625, a = 0
    res = fit_model(FitInput([sample("A", 1.0, 564.0625), sample("A", 4.0, 141.015625, 1)]))
    assert res.model.jitter["A"] == 0.0
    assert res.model.c_const == 23.75
    assert res.rss == 0.0


def test_rss_examples():
    inp = FitInput(curve_samples(TRUTH, [1.0, 5.0]))
    assert rss(TRUTH, inp) == 0.0
    one = FitInput([sample("A", 1.0, 27.0)])
    assert rss(VarianceModel({"A": 3.0}, 4.0), one) == 4.0
    assert rss(VarianceModel({"A": 3.0}, 4.0), one, weights=[2.5]) == 10.0
    with pytest.raises(ValueError, match="no jitter"):
        rss(VarianceModel({"Z": 1.0}, 1.0), one)


def test_rss_sigma_space():
    one = FitInput([sample("A", 1.0, 36.0)])
    assert rss(VarianceModel({"A": 3.0}, 4.0), one, "sigma") == pytest.approx(1.0)


def test_negative_unconstrained_jitter_clamps_to_zero():
    # data below the C-only curve pulls the unconstrained intercept negative
    samples = [sample("A", s, 100.0 / s - 1.0, k) for k, s in enumerate([1.0, 2.0, 4.0, 8.0])]
    res = fit_model(FitInput(samples))
    assert res.model.jitter["A"] == 0.0
    assert res.model.c_const > 0
    unconstrained = np.polyfit([1 / s.snr_linear for s in samples], [s.variance_m2 for s in samples], 1)
    assert unconstrained[1] < 0


@pytest.mark.parametrize("seed", range(6))
def test_grid_oracle_optimality(seed):
    inp, truth = noisy_input(seed, n_per_tx=12)
    res = fit_model(inp)
    upper = {t: 2 * truth.jitter[t] for t in truth.jitter} | {"C": 2 * truth.c_const}
    s = inp.samples
    grid_rss, _, _ = grid_min_rss([x.transmitter_id for x in s], [x.snr_linear for x in s], [x.variance_m2 for x in s], upper)
    assert res.rss <= grid_rss * (1 + 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_no_worse_than_zero_model_or_truth(seed):
    inp, truth = noisy_input(50 + seed)
    res = fit_model(inp)
    zero = VarianceModel({t: 0.0 for t in truth.jitter}, 0.0)
    assert 0 <= res.rss <= rss(zero, inp)
    assert res.rss <= rss(truth, inp)


def test_weight_scaling_invariance():
    inp, _ = noisy_input(7)
    w = np.random.default_rng(1).uniform(0.5, 2.0, len(inp.samples))
    a = fit_model(FitInput(inp.samples, w))
    b = fit_model(FitInput(inp.samples, 37.5 * w))
    assert b.model.c_const == pytest.approx(a.model.c_const, rel=1e-10)
    for t in a.model.jitter:
        assert b.model.jitter[t] == pytest.approx(a.model.jitter[t], rel=1e-10, abs=1e-12)
    assert b.rss == pytest.approx(37.5 * a.rss, rel=1e-10)


def test_data_order_invariance():
    inp, _ = noisy_input(9)
    shuffled = list(inp.samples)
    random.Random(3).shuffle(shuffled)
    a = fit_model(inp)
    b = fit_model(FitInput(shuffled))
    assert b.model.c_const == pytest.approx(a.model.c_const, rel=1e-12)
    for t in a.model.jitter:
        assert b.model.jitter[t] == pytest.approx(a.model.jitter[t], rel=1e-12, abs=1e-12)
    assert b.rss == pytest.approx(a.rss, rel=1e-10)


def test_consistency_noiseless_convergence():
    truth = VarianceModel({"A": 1.3, "B": 0.4}, 9.0)
    for n in (3, 10, 100):
        res = fit_model(FitInput(curve_samples(truth, np.geomspace(1, 100, n))))
        assert res.model.c_const == pytest.approx(9.0, abs=1e-9)
        assert res.model.jitter["A"] == pytest.approx(1.3, abs=1e-9)


def test_single_snr_everywhere_is_unidentifiable():
    samples = [sample(t, 10.0, 5.0 + k, k) for t in ("PALMI", "CHUNGJU") for k in range(3)]
    with pytest.raises(IdentifiabilityError, match="PALMI") as err:
        fit_model(FitInput(samples))
    assert set(err.value.transmitters) == {"PALMI", "CHUNGJU"}


def test_single_snr_transmitter_ok_when_c_pinned_elsewhere():
    samples = curve_samples(VarianceModel({"A": 1.0}, 5.0), [1.0, 10.0])
    samples += [sample("B", 4.0, 4.0 + 25.0 / 4.0, k) for k in range(2)]
    assert check_identifiable(FitInput(samples)) == ["B"]
    res = fit_model(FitInput(samples))
    assert res.model.jitter["B"] == pytest.approx(2.0, abs=1e-9)


def test_too_few_samples():
    with pytest.raises(IdentifiabilityError, match="B"):
        fit_model(FitInput([sample("A", 1.0, 2.0), sample("A", 2.0, 1.5, 1), sample("B", 1.0, 2.0)]))


def test_fit_input_validation():
    with pytest.raises(ValueError):
        FitInput([])
    with pytest.raises(ValueError):
        FitInput([sample("A", 1.0, 1.0)], weights=[0.0])
    with pytest.raises(ValueError):
        FitInput([sample("A", 1.0, 1.0)], weights=[1.0, 2.0])
    with pytest.raises(ValueError):
        FitConfig(residual_space="log")


def test_window_len_weighting():
    samples = [
        VarianceSample("A", 1.0, 30.0, 0.0, 100),
        VarianceSample("A", 2.0, 14.0, 1.0, 1000),
        VarianceSample("A", 4.0, 9.0, 2.0, 100),
    ]
    base = fit_model(FitInput(samples))
    wl = fit_model(FitInput(samples, [1.0, 1.0, 1.0]), FitConfig(weighting="window_len"))
    manual = fit_model(FitInput(samples, [100.0, 1000.0, 100.0]))
    assert wl.model.c_const == pytest.approx(manual.model.c_const, rel=1e-12)
    assert wl.model.c_const != pytest.approx(base.model.c_const, rel=1e-6)


def test_inverse_variance_noiseless_exact():
    res = fit_model(FitInput(curve_samples(TRUTH, [1.0, 3.0, 10.0, 100.0])), FitConfig(weighting="inverse_variance"))
    assert res.model.c_const == pytest.approx(23.75, abs=1e-9)
    assert res.model.jitter["CHUNGJU"] == pytest.approx(2.65, abs=1e-9)
    assert res.weighting == "inverse_variance"


def test_sigma_space_fit():
    res = fit_model(FitInput(curve_samples(TRUTH, [1.0, 3.0, 10.0, 100.0])), FitConfig(residual_space="sigma"))
    assert res.residual_space == "sigma"
    assert res.solver == "grid_refine"
    assert res.model.c_const == pytest.approx(23.75, abs=1e-6)
    assert res.model.jitter["CHUNGJU"] == pytest.approx(2.65, abs=1e-6)

    inp, truth = noisy_input(21)
    sig = fit_model(inp, FitConfig(residual_space="sigma"))
    var = fit_model(inp)
    assert sig.rss <= rss(var.model, inp, "sigma") * (1 + 1e-9)


def test_convention_stamped():
    res = fit_model(FitInput(curve_samples(TRUTH, [1.0, 4.0])), FitConfig(snr_convention=SnrConvention.LINEAR))
    assert res.model.snr_convention == SnrConvention.LINEAR


def test_weak_identifiability_flag():
    # SNRs differing by 1e-7 relative are "distinct" but nearly collinear with the intercept
    samples = [sample("A", 10.0, 5.0), sample("A", 10.0 * (1 + 1e-7), 5.0, 1)]
    res = fit_model(FitInput(samples))
    assert res.identifiability == "weak"
    strong = fit_model(FitInput(curve_samples(TRUTH, [1.0, 100.0])))
    assert strong.identifiability == "strong"
