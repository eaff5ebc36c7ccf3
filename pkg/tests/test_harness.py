import math
from dataclasses import replace

import numpy as np
import pytest

from mlsnr.estimators import SnrEstimate, Method
from mlsnr.harness import (
    VERTICAL,
    InsufficientData,
    SimConfig,
    TrialRecord,
    ZeroSer,
    aggregate,
    channel_rng,
    decoder_overhead,
    empiric_snr,
    error_samples,
    histogram,
    reestimate,
    run_experiment,
    run_trial,
    search_report,
)
from mlsnr.errorsets import error_set_family
from mlsnr.modulation import DomainError, make_constellation

QPSK = make_constellation("qpsk")


def small_cfg(**kw):
    base = dict(modulation="qpsk", num_channels=6, vectors_per_channel=4000, snr_db=6.0, seed=3)
    base.update(kw)
    return SimConfig(**base)


def fake_record(k, errors, vertical=0.0, excluded=False, saturated=False):
    est = SnrEstimate(Method.MAXLOG, (errors, errors), vertical, (saturated, False))
    return TrialRecord(
        channel=k, h_phy=np.eye(2), vectors=10, stream_errors=(1, 1), joint_errors=1,
        empiric_db=(0.0, 0.0), joint_empiric_db=0.0, estimates={"maxlog": est}, ph=None,
        excluded=excluded,
    )


def test_empiric_snr_examples():
    assert empiric_snr(math.exp(-1), QPSK) == pytest.approx(10 * math.log10(2), abs=1e-12)
    assert empiric_snr(math.exp(-1), make_constellation("qam16")) == pytest.approx(10.0, abs=1e-12)
    assert empiric_snr(1 - 1e-9, QPSK) < -80
    with pytest.raises(ZeroSer):
        empiric_snr(0.0, QPSK)
    with pytest.raises(DomainError):
        empiric_snr(1.0, QPSK)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(modulation="qam32")
    with pytest.raises(ValueError):
        SimConfig(methods=("nope",))
    with pytest.raises(ValueError):
        SimConfig(m_t=3, m_r=2)
    with pytest.raises(ValueError):
        SimConfig(snr_db=None, rho=None)
    assert SimConfig(rho=0.5).noise_rho == 0.5
    assert SimConfig(snr_db=20.0).noise_rho == pytest.approx(0.1)


def test_config_round_trip():
    cfg = small_cfg(methods=("maxlog", "zf", "ph"), qpsk_sets_for_higher_qam=True)
    assert SimConfig.from_dict(cfg.to_dict()) == cfg


def test_trial_counts_and_containment():
    cfg = small_cfg(methods=("union", "fullsum", "maxlog", "capacity", "zf", "ph"))
    r = run_trial(cfg, 0)
    assert r.vectors == 4000
    assert all(r.joint_errors >= e for e in r.stream_errors)
    assert r.joint_errors <= sum(r.stream_errors)
    assert set(r.estimates) == {"union", "fullsum", "maxlog", "capacity", "zf"}
    assert r.ph is not None and r.ph.lower_d2 <= r.ph.dmin2 * (1 + 1e-12)
    assert r.data_searches == 4000
    assert r.snr_searches == 2 and r.maxlog_evaluations == 1
    if not r.excluded:
        assert all(math.isfinite(x) for x in (*r.empiric_db, r.joint_empiric_db))


def test_noiseless_channel_excluded():
    r = run_trial(small_cfg(snr_db=None, rho=1e-6), 0)
    assert r.stream_errors == (0, 0) and r.joint_errors == 0
    assert r.excluded and all(math.isnan(x) for x in r.empiric_db)


def test_trial_reproducible_and_seed_dependent():
    cfg = small_cfg()
    a, b = run_trial(cfg, 2), run_trial(cfg, 2)
    assert a.stream_errors == b.stream_errors
    np.testing.assert_array_equal(a.h_phy, b.h_phy)
    c = run_trial(replace(cfg, seed=4), 2)
    assert not np.array_equal(a.h_phy, c.h_phy)


def test_ser_statistically_reproducible():
    cfg = small_cfg(vectors_per_channel=10_000)
    h = np.array([[0.9 + 0.2j, -0.4j], [0.3, 0.7 - 0.5j]])
    a = run_trial(cfg, 0, rng=np.random.default_rng(1), h_phy=h)
    b = run_trial(cfg, 0, rng=np.random.default_rng(2), h_phy=h)
    n = cfg.vectors_per_channel
    for pa, pb in zip(a.ser, b.ser):
        p = (pa + pb) / 2
        assert abs(pa - pb) <= 4 * math.sqrt(2 * p * (1 - p) / n)


def test_channel_rng_substreams():
    a = channel_rng(5, 1).standard_normal(4)
    np.testing.assert_array_equal(a, channel_rng(5, 1).standard_normal(4))
    assert not np.array_equal(a, channel_rng(5, 2).standard_normal(4))
    assert not np.array_equal(a, channel_rng(6, 1).standard_normal(4))


def test_aggregate_examples():
    recs = [fake_record(0, -1.0, -1.0), fake_record(1, 1.0, 1.0)]
    st = aggregate(recs, bin_db=0.5, range_db=2.0)
    s = st.get("maxlog", 0)
    assert s.mean_error_db == 0.0
    assert s.std_error_db == pytest.approx(math.sqrt(2), rel=1e-15)
    assert s.counts.sum() == s.samples == 2
    assert len(s.bin_edges) == 9
    same = aggregate([fake_record(k, 0.7, 0.7) for k in range(4)])
    assert same.get("maxlog", VERTICAL).std_error_db == 0.0


def test_aggregate_exclusions():
    recs = [fake_record(0, 1.0), fake_record(1, 2.0), fake_record(2, 9.0, excluded=True), fake_record(3, 3.0, saturated=True)]
    st = aggregate(recs)
    assert (st.included, st.excluded) == (3, 1)
    assert st.get("maxlog", 0).samples == 2 and st.get("maxlog", 0).saturated == 1
    assert st.get("maxlog", 1).samples == 3
    assert st.get("maxlog", VERTICAL).samples == 2
    np.testing.assert_array_equal(error_samples(recs, "maxlog", 0), [1.0, 2.0])
    with pytest.raises(InsufficientData):
        aggregate([fake_record(0, 1.0), fake_record(1, 1.0, excluded=True)])


def test_histogram_clips_into_edges():
    edges, counts = histogram(np.array([-50.0, 0.0, 0.0, 50.0]), 1.0, 3.0)
    assert len(edges) == 7 and edges[0] == -3 and edges[-1] == 3
    assert counts[0] == 1 and counts[-1] == 1 and counts.sum() == 4


def test_experiment_deterministic_and_worker_independent():
    cfg = small_cfg(num_channels=5, vectors_per_channel=2000)
    r1, s1 = run_experiment(cfg)
    r2, _ = run_experiment(cfg)
    r3, s3 = run_experiment(replace(cfg, workers=2))
    for a, b, c in zip(r1, r2, r3):
        np.testing.assert_array_equal(a.h_phy, b.h_phy)
        np.testing.assert_array_equal(a.h_phy, c.h_phy)
        assert a.stream_errors == b.stream_errors == c.stream_errors
        assert a.estimates == c.estimates
    assert s1.included + s1.excluded == cfg.num_channels
    assert s1.get("maxlog", 0).std_error_db == s3.get("maxlog", 0).std_error_db


def test_reestimate_keeps_counts():
    cfg = small_cfg(modulation="qam16", snr_db=15.0, num_channels=3, vectors_per_channel=3000, methods=("maxlog",))
    recs, _ = run_experiment(cfg)
    alt = reestimate(recs, replace(cfg, qpsk_sets_for_higher_qam=True))
    for a, b in zip(recs, alt):
        assert a.stream_errors == b.stream_errors
        assert all(x >= y - 1e-9 for x, y in zip(b.estimates["maxlog"].per_stream_db, a.estimates["maxlog"].per_stream_db))
    same = reestimate(recs, cfg)
    assert [r.estimates for r in same] == [r.estimates for r in recs]


def test_decoder_overhead_qpsk():
    ov = decoder_overhead(QPSK, error_set_family("qpsk", 2))
    assert (ov.data_searches, ov.data_set_size) == (80, 8)
    assert (ov.snr_searches, ov.snr_set_size) == (2, 13)
    assert ov.search_ratio == pytest.approx(0.025)
    assert ov.point_ratio == pytest.approx(26 / 640)


def test_search_report():
    cfg = small_cfg(num_channels=3, vectors_per_channel=1000, methods=("maxlog", "union"))
    recs, _ = run_experiment(cfg)
    rep = search_report(recs, cfg)
    assert rep["data_searches"] == 3000 and rep["data_set_size"] == 16
    assert rep["snr_searches"] == 6 and rep["snr_searches_per_evaluation"] == 2
    assert rep["allocation_search_ratio"] == pytest.approx(0.025)


def test_fully_saturated_entry_reports_nan():
    recs = [fake_record(k, 1.0 + k, saturated=True) for k in range(3)]
    st = aggregate(recs)
    assert st.get("maxlog", 0).samples == 0
    assert math.isnan(st.get("maxlog", 0).std_error_db)
    assert st.get("maxlog", 0).counts.sum() == 0
    assert st.get("maxlog", 1).std_error_db == 1.0
