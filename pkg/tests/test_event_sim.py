import math
from dataclasses import replace

import numpy as np
import pytest

from src import qkd_rates
from src.event_sim import (ORIGIN_SIGNAL, TAG_HEADER, SimRun, dead_time_ticks,
                           detected_photon_mean, generate_tags, read_tag_file,
                           sift_and_estimate, write_tag_csv, write_tag_file)
from src.qkd_rates import DetectorModel, SourceSpec, dead_time_saturation, evaluate
from src.utils.errors import DomainError


@pytest.fixture(scope="module")
def short_run(b2b_scenario):
    return generate_tags(b2b_scenario, 0.5, seed=11)


def test_dead_time_ticks():
    assert dead_time_ticks(DetectorModel()) == math.ceil(25e-6 / 82.3e-12)
    assert dead_time_ticks(DetectorModel()) == 303767


def test_tags_are_time_ordered(short_run):
    assert len(short_run) > 0
    assert np.all(np.diff(short_run.tick.astype(np.int64)) >= 0)
    assert short_run.tick.max() < round(0.5 / short_run.resolution_s)


def test_dead_time_between_clicks(short_run):
    dead = dead_time_ticks(short_run.scenario.detector)
    for channel in range(4):
        ticks = short_run.tick[short_run.detector_id == channel].astype(np.int64)
        assert np.diff(ticks).min() > dead


def test_same_seed_same_stream(b2b_scenario, short_run):
    again = generate_tags(b2b_scenario, 0.5, seed=11)
    other = generate_tags(b2b_scenario, 0.5, seed=12)
    np.testing.assert_array_equal(again.tick, short_run.tick)
    np.testing.assert_array_equal(again.true_state, short_run.true_state)
    assert len(other) != len(short_run) or not np.array_equal(other.tick, short_run.tick)


def test_invalid_duration(b2b_scenario):
    with pytest.raises(DomainError):
        generate_tags(b2b_scenario, 0.0, seed=1)


def test_dark_only_rates(b2b_scenario):
    dark_only = replace(b2b_scenario, source=SourceSpec(mean_photon_number=0.0))
    duration = 10.0
    run = generate_tags(dark_only, duration, seed=5)
    expected = dead_time_saturation(np.asarray(dark_only.detector.dark_rates_hz),
                                    dark_only.detector.dead_time_s)
    for channel, rate in run.counts_per_detector().items():
        sigma = math.sqrt(expected[channel] * duration) / duration
        assert rate / duration == pytest.approx(expected[channel], abs=3 * sigma)
    assert set(np.unique(run.origin)) == {1}


def test_sift_estimate_close_to_analytic(b2b_scenario, short_run):
    estimate = sift_and_estimate(short_run)
    analytic = evaluate(b2b_scenario, 0.0)
    se_rate = math.sqrt(estimate.sifted_count) / short_run.duration_s
    assert estimate.sifted_rate_hz == pytest.approx(analytic.sifted_rate_hz, abs=4 * se_rate)
    se_q = math.sqrt(analytic.qber * (1 - analytic.qber) / estimate.sifted_count)
    assert estimate.qber == pytest.approx(analytic.qber, abs=4 * se_q)
    assert estimate.valid


def test_empty_run_has_no_qber(b2b_scenario):
    empty = np.zeros(0, dtype=np.uint8)
    run = SimRun(1, 1.0, b2b_scenario, 0.0, empty, np.zeros(0, dtype=np.uint64),
                 empty, empty, empty)
    estimate = sift_and_estimate(run)
    assert estimate.qber is None
    assert not estimate.valid
    assert estimate.to_dict()["sifted_count"] == 0


def test_tag_file_roundtrip(tmp_path, short_run):
    path = write_tag_file(short_run, str(tmp_path / "tags.bin"))
    size = (tmp_path / "tags.bin").stat().st_size
    assert size == TAG_HEADER.size + 9 * len(short_run)
    resolution, records = read_tag_file(path)
    assert resolution == pytest.approx(82.3e-12)
    np.testing.assert_array_equal(records["tick"], short_run.tick)
    np.testing.assert_array_equal(records["detector"], short_run.detector_id)


def test_tag_file_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(DomainError):
        read_tag_file(str(path))
    short = tmp_path / "short.bin"
    short.write_bytes(b"FSOQ")
    with pytest.raises(DomainError):
        read_tag_file(str(short))


def test_tag_csv(tmp_path, b2b_scenario):
    run = generate_tags(b2b_scenario, 0.01, seed=3)
    path = write_tag_csv(run, str(tmp_path / "tags.csv"))
    lines = (tmp_path / "tags.csv").read_text().splitlines()
    assert lines[0] == "detector_id,tick,time_s,true_state,measured_state"
    assert len(lines) == len(run) + 1
    assert path.endswith("tags.csv")
    first = run.tags[0]
    assert first.time_s == pytest.approx(first.tick * 82.3e-12)



def _quiet(scenario, mean_photon_number=None, e_int=None):
    """Сценарій без темнових відліків (і за потреби без сигналу чи власної похибки)"""
    detector = replace(scenario.detector, dark_rates_hz=(0.0,) * scenario.detector.count)
    changed = replace(scenario, detector=detector)
    if mean_photon_number is not None:
        changed = replace(changed, source=replace(scenario.source,
                                                  mean_photon_number=mean_photon_number))
    if e_int is not None:
        changed = replace(changed, calibration=replace(scenario.calibration,
                                                       intrinsic_error=e_int))
    return changed


def test_no_light_no_tags(b2b_scenario):
    run = generate_tags(_quiet(b2b_scenario, mean_photon_number=0.0), 1.0, seed=2)
    assert len(run) == 0
    assert not sift_and_estimate(run).valid


def test_error_free_run(b2b_scenario):
    run = generate_tags(_quiet(b2b_scenario, e_int=0.0), 0.2, seed=4)
    estimate = sift_and_estimate(run)
    assert estimate.sifted_count > 0
    assert estimate.qber == 0.0
    assert set(np.unique(run.origin)) == {ORIGIN_SIGNAL}


def test_background_only_qber(b2b_scenario):
    dark_only = replace(b2b_scenario, source=SourceSpec(mean_photon_number=0.0))
    estimate = sift_and_estimate(generate_tags(dark_only, 2.0, seed=8))
    sigma = math.sqrt(0.25 / estimate.sifted_count)
    assert estimate.qber == pytest.approx(0.5, abs=3 * sigma)


def test_detected_photon_mean(b2b_scenario):
    calibration = b2b_scenario.calibration
    mean = detected_photon_mean(b2b_scenario.source, b2b_scenario.detector, 10.0,
                                calibration.system_efficiency)
    assert mean == pytest.approx(0.1 * 0.1 * 0.1 * calibration.system_efficiency)
    with pytest.raises(DomainError):
        detected_photon_mean(b2b_scenario.source, b2b_scenario.detector, -1.0, 1.0)


def test_signal_does_not_follow_rate_model(b2b_scenario, monkeypatch):
    budget = 20.0
    expected = evaluate(b2b_scenario, budget)
    original = qkd_rates.incident_signal_rate

    def tripled(src, det, budget_db, system_efficiency=1.0):
        return 3.0 * original(src, det, budget_db, system_efficiency)

    monkeypatch.setattr(qkd_rates, "incident_signal_rate", tripled)
    skewed = evaluate(b2b_scenario, budget)

    duration = 1.0
    estimate = sift_and_estimate(generate_tags(b2b_scenario, duration, seed=21, budget_db=budget))
    se_rate = math.sqrt(estimate.sifted_count) / duration
    assert estimate.sifted_rate_hz == pytest.approx(expected.sifted_rate_hz, abs=4 * se_rate)
    assert abs(estimate.sifted_rate_hz - skewed.sifted_rate_hz) > 10 * se_rate


@pytest.mark.slow
def test_montecarlo_agrees_with_analytic_model(b2b_scenario):
    analytic = evaluate(b2b_scenario, 0.0)
    duration = 10.0
    agreeing = 0
    for seed in range(100):
        estimate = sift_and_estimate(generate_tags(b2b_scenario, duration, seed=seed))
        se_rate = math.sqrt(estimate.sifted_count) / duration
        se_q = math.sqrt(analytic.qber * (1 - analytic.qber) / estimate.sifted_count)
        if (abs(estimate.sifted_rate_hz - analytic.sifted_rate_hz) <= 3 * se_rate
                and abs(estimate.qber - analytic.qber) <= 3 * se_q):
            agreeing += 1
    assert agreeing >= 99
