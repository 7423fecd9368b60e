import math
import os

import numpy as np
import pytest

from noslink.codebook import save_codebook
from noslink.sim import (SimConfig, config_from_mapping, load_config,
                         miss_csv_text, parse_config_text, parse_result_csv,
                         parse_snr_spec, result_csv_text, run_candidate_miss,
                         run_sweep, wilson_interval, decode_one)

from util import orthogonal_codebook, random_codebook


@pytest.fixture
def nos_setup(tmp_path):
    cb = orthogonal_codebook(v=4, d=128, m=16)
    path = tmp_path / "cb.nosc"
    save_codebook(cb, path)
    cfg = SimConfig(system="nos", snr_db=(0.0,), v=4, m=16, d=128, n_t=4,
                    n_r=4, codebook=str(path), k=8, iterations=2,
                    min_errors=8, max_packets=300, seed=42)
    return cfg


def test_parse_snr_specs():
    assert parse_snr_spec("1,2,3.5") == [1.0, 2.0, 3.5]
    assert parse_snr_spec("2:8:2") == [2.0, 4.0, 6.0, 8.0]
    with pytest.raises(ValueError):
        parse_snr_spec("2:8:0")


def test_config_file_roundtrip(tmp_path, nos_setup):
    text = f"""
    # sweep description
    system = nos
    codebook = {nos_setup.codebook}
    v = 4
    m = 16
    d = 128
    nt = 4
    nr = 4
    snr_db = 4,6
    k = 8
    iter = 2
    sorting = per_layer
    min_errors = 8
    max_packets = 300
    seed = 42
    """
    path = tmp_path / "sim.cfg"
    path.write_text(text)
    cfg = load_config(path)
    assert cfg.snr_db == (4.0, 6.0)
    assert cfg.iterations == 2 and cfg.k == 8
    over = load_config(path, {"snr_db": "6", "seed": 1})
    assert over.snr_db == (6.0,) and over.seed == 1


def test_config_validation():
    with pytest.raises(ValueError):
        config_from_mapping(parse_config_text("system = warp\nsnr_db = 1\n"
                                              "v=4\nm=16\nd=128\nnt=4\nnr=4"))
    with pytest.raises(ValueError):
        SimConfig(system="nos", snr_db=(1.0,), v=4, m=16, d=128, n_t=3, n_r=4)


def test_wilson_interval_brackets_estimate():
    lo, hi = wilson_interval(10, 100)
    assert lo < 0.1 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_noiseless_sweep_zero_errors(nos_setup):
    from dataclasses import replace
    cfg = replace(nos_setup, snr_db=(math.inf,), min_errors=1, max_packets=64)
    result = run_sweep(cfg)
    assert result.points[0].packet_errors == 0
    assert result.points[0].packets == 64
    assert result.points[0].per == 0.0


def test_same_seed_bit_identical(nos_setup):
    a = run_sweep(nos_setup)
    b = run_sweep(nos_setup)
    assert result_csv_text(a) == result_csv_text(b)


def test_worker_count_does_not_change_results(nos_setup):
    seq = run_sweep(nos_setup, workers=1)
    par = run_sweep(nos_setup, workers=3)
    assert result_csv_text(seq) == result_csv_text(par)


def test_csv_roundtrip(nos_setup):
    result = run_sweep(nos_setup)
    rows = parse_result_csv(result_csv_text(result))
    assert len(rows) == 1
    p = result.points[0]
    assert rows[0]["packets"] == p.packets
    assert rows[0]["pkt_errors"] == p.packet_errors
    assert np.isclose(rows[0]["per"], p.per)
    lo, hi = p.per_interval
    assert lo <= p.per <= hi


def test_empty_sweep_header_only():
    from noslink.sim import SimResult, CSV_HEADER
    cfg = SimConfig(system="polar", snr_db=(1.0,), v=4, m=16, d=128,
                    n_t=4, n_r=4)
    txt = result_csv_text(SimResult(config=cfg))
    assert txt.strip() == CSV_HEADER


def test_miss_rate_zero_when_k_covers_everything(tmp_path):
    cb = orthogonal_codebook(v=2, d=64, m=8)  # 64 combinations total
    path = tmp_path / "cb2.nosc"
    save_codebook(cb, path)
    # V*m = 6 bits < CRC, so decode runs without CRC inside miss counting?
    # miss counting uses layouts; use a CRC-capable config instead
    cb = orthogonal_codebook(v=4, d=256, m=16)
    path = tmp_path / "cb3.nosc"
    save_codebook(cb, path)
    cfg = SimConfig(system="nos", snr_db=(-2.0,), v=4, m=16, d=256, n_t=4,
                    n_r=4, codebook=str(path), k=16 ** 4, iterations=0,
                    sorting="sequential", seed=7)
    points = run_candidate_miss(cfg, [0], n_packets=10)
    assert points[0].misses == 0


def test_miss_rate_paired_and_csv(nos_setup):
    points = run_candidate_miss(nos_setup, [0, 2], n_packets=60)
    assert {p.iterations for p in points} == {0, 2}
    for p in points:
        assert p.packets == 60
    txt = miss_csv_text(points)
    assert txt.splitlines()[0] == "snr_db,iter,packets,misses,miss_rate"


def test_miss_rate_nonincreasing_in_k(nos_setup):
    from dataclasses import replace
    rates = []
    for k in (2, 8, 32):
        cfg = replace(nos_setup, k=k, snr_db=(-10.0,))
        points = run_candidate_miss(cfg, [0], n_packets=400)
        rates.append(points[0].miss_rate)
    # paired trials over the same packets
    assert rates[0] >= rates[1] >= rates[2]
    assert rates[0] > rates[2]  # the effect is visible at this SNR


def test_nos_per_nonincreasing_in_snr(nos_setup):
    from dataclasses import replace
    cfg = replace(nos_setup, snr_db=(-4.0, 0.0, 4.0), min_errors=10 ** 9,
                  max_packets=400)
    points = run_sweep(cfg).points
    for lo, hi in zip(points, points[1:]):
        assert hi.per <= lo.per_interval[1]  # allow CI overlap


def test_polar_system_through_harness():
    cfg = SimConfig(system="polar", snr_db=(-6.0,), v=4, m=16, d=128,
                    n_t=4, n_r=4, list_size=8, min_errors=5,
                    max_packets=512, seed=2)
    point = run_sweep(cfg).points[0]
    assert point.packets > 0
    assert point.packet_errors >= 5 or point.packets == 512


def test_nn_receiver_system_through_harness(tmp_path):
    import numpy as np
    from noslink.receiver import save_weights
    from util import make_weights, orthogonal_codebook
    cb = orthogonal_codebook(v=4, d=128, m=16)
    cb_path = tmp_path / "cb.nosc"
    save_codebook(cb, cb_path)
    w = make_weights(np.random.default_rng(3), v=4, d=128, m=16, n_t=4, n_r=4)
    w_path = tmp_path / "w.nosw"
    save_weights(w, w_path)
    cfg = SimConfig(system="nn_receiver", snr_db=(10.0,), v=4, m=16, d=128,
                    n_t=4, n_r=4, codebook=str(cb_path), weights=str(w_path),
                    min_errors=1, max_packets=64, seed=3)
    point = run_sweep(cfg).points[0]
    # untrained random weights decode essentially nothing; the plumbing is
    # what this exercises
    assert point.packets == 64
    cfg_bad = SimConfig(system="nn_receiver", snr_db=(10.0,), v=4, m=16,
                        d=128, n_t=2, n_r=2, codebook=str(cb_path),
                        weights=str(w_path), min_errors=1, max_packets=8)
    with pytest.raises(ValueError):
        run_sweep(cfg_bad)


def test_decode_one_trace(nos_setup):
    out = decode_one(nos_setup, 0.0, packet_index=3)
    assert out["snr_db"] == 0.0
    assert len(out["true_indices"]) == 4
    assert len(out["steps"]) == 4 + nos_setup.iterations
    kinds = {s["kind"] for s in out["steps"]}
    assert kinds == {"forward", "loop"}
    assert out["stats"]["metric_evals"] > 0


def test_worker_env_variable(monkeypatch, nos_setup):
    from noslink.sim import worker_count
    monkeypatch.setenv("NOSLINK_WORKERS", "5")
    assert worker_count() == 5
    monkeypatch.setenv("NOSLINK_WORKERS", "junk")
    assert worker_count() == 1
