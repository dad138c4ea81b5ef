import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsfsim.monitor import (BLOWUP, GROWTH, POSITIVITY, REGULAR, MonitorConfig,
                            RegularityMonitor, RegularityReport, classify, fit_power_law, update)

from synthetic import make_record, power_law_series, stream

CFG = MonitorConfig()


def test_config_validation():
    with pytest.raises(ValueError):
        MonitorConfig(window=5, min_samples=8)
    with pytest.raises(ValueError):
        MonitorConfig(growth_factor=1.0)
    with pytest.raises(ValueError):
        MonitorConfig(fit_threshold=0.0)


def test_constant_stream_is_regular():
    mon = RegularityMonitor()
    for k in range(20):
        rep = mon.update(make_record(0.1 * (k + 1), 2.0, 1.5, 0.3))
        assert rep.running_sup == (2.0, 1.5, 0.3)
    assert rep.classification == REGULAR and rep.estimated_Tstar is None
    assert rep.samples == 20


def test_nonpositive_temperature_flags_immediately():
    mon = RegularityMonitor()
    rep = mon.update(make_record(0.1, min_theta=0.0))
    assert rep.classification == POSITIVITY


def test_nonmonotone_time_rejected():
    rep = update(RegularityReport(), make_record(1.0), [])
    with pytest.raises(ValueError):
        update(rep, make_record(1.0), [make_record(1.0)])


def test_classify_needs_samples():
    with pytest.raises(ValueError):
        classify([make_record(0.1 * k) for k in range(1, 4)], CFG)


def test_doubling_speed_is_growth():
    # doubles across every 50-sample window, three windows long
    t = np.arange(1, 151) * 0.1
    speed = 2.0 ** (np.arange(150) / 50.0)
    rep = classify(stream(t, speed), CFG)
    assert rep.classification == GROWTH


def test_bounded_oscillation_is_regular():
    t = np.linspace(0.1, 5, 60)
    rep = classify(stream(t, 1.5 + np.sin(3 * t)), CFG)
    assert rep.classification == REGULAR and rep.estimated_Tstar is None


def test_inverse_law_detected():
    t = np.linspace(0.5, 0.9, 40)
    rep = classify(stream(t, 1.0 / (1.0 - t)), CFG)
    assert rep.classification == BLOWUP
    assert 0.95 <= rep.estimated_Tstar <= 1.05
    assert rep.gamma == pytest.approx(1.0, rel=0.05)


def test_exponential_growth_not_suspected():
    t = np.linspace(0.0, 3.0, 50)
    rep = classify(stream(t, np.exp(t)), CFG)
    assert rep.classification == GROWTH
    assert rep.fit_quality < 0.99


def test_positivity_wins_in_classify():
    recs = [make_record(0.1 * k) for k in range(1, 10)]
    recs.append(make_record(1.0, min_rho=-1e-3))
    assert classify(recs, CFG).classification == POSITIVITY


def test_fit_power_law_exact():
    t = np.linspace(0.0, 1.9, 40)
    fit = fit_power_law(t, 3.0 * (2.0 - t) ** -1.5)
    assert fit.interior
    assert fit.t_star == pytest.approx(2.0, rel=1e-3)
    assert fit.gamma == pytest.approx(1.5, rel=1e-2)
    assert fit.r2 > 0.9999


def test_fit_power_law_rejects_flat_time():
    with pytest.raises(ValueError):
        fit_power_law([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 100.0))
def test_scale_equivariance(seed, lam):
    t, m, _, _ = power_law_series(np.random.default_rng(seed))
    a = classify(stream(t, m), CFG)
    b = classify(stream(t, lam * m), CFG)
    assert a.classification == b.classification
    if a.estimated_Tstar is not None:
        assert b.estimated_Tstar == pytest.approx(a.estimated_Tstar, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_running_sup_monotone(seed):
    rng = np.random.default_rng(seed)
    mon = RegularityMonitor(MonitorConfig(window=10, min_samples=4))
    prev = (0.0, 0.0, 0.0)
    for k in range(15):
        rep = mon.update(make_record(k + 1, *rng.uniform(0.5, 2.0, 3)))
        assert all(b >= a for a, b in zip(prev, rep.running_sup))
        prev = rep.running_sup


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.5, 3.0))
def test_exact_power_law_tstar_accuracy(gamma, t_star):
    # 30 samples with gap ratio 4
    t = np.linspace(0.0, t_star * 0.75, 30)
    rep = classify(stream(t, (t_star - t) ** -gamma),
                   MonitorConfig(window=30, growth_factor=1.5))
    assert rep.estimated_Tstar is not None
    assert abs(rep.estimated_Tstar - t_star) <= 0.05 * t_star


def test_report_text_block():
    text = RegularityReport().to_text()
    assert text.startswith("[regularity-report]\n")
    assert "classification = conditionally-regular" in text
    assert "heuristic" in text
    assert not math.isnan(RegularityReport().fit_quality)
